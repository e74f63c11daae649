#include "commands.hpp"

#include "popgcn/checkpoint.hpp"
#include "popgcn/diagnostics.hpp"
#include "popgcn/graph.hpp"
#include "popgcn/metrics.hpp"
#include "popgcn/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <sstream>

namespace popgcn::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw Error(key + ": expected a number, got '" + text + "'");
  return value;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw Error(key + ": expected a non-negative integer, got '" + text + "'");
  return value;
}

Index parse_index(const std::string& key, const std::string& text) {
  const auto v = parse_uint(key, text);
  if (v > 0xffffffffULL) throw Error(key + ": value too large");
  return static_cast<Index>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "on" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "off" || text == "no" || text == "0") return false;
  throw Error(key + ": expected on/off, got '" + text + "'");
}

template <typename T>
std::vector<T> parse_uint_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& part : split_list(text)) out.push_back(static_cast<T>(parse_uint(key, part)));
  if (out.empty()) throw Error(key + ": empty list");
  return out;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

template <typename T>
std::string join_numbers(const std::vector<T>& values) {
  std::vector<std::string> parts;
  for (const auto& v : values) {
    if constexpr (std::is_floating_point_v<T>) parts.push_back(format_double(v));
    else parts.push_back(std::to_string(v));
  }
  return join(parts);
}

std::string delimiter_name(char c) {
  if (c == '\0') return "whitespace";
  if (c == '\t') return "tab";
  if (c == ',') return "comma";
  return std::string(1, c);
}

}  // namespace

fs::path RunConfig::resolved_split_dir() const { return split_dir.empty() ? out / "split" : split_dir; }

fs::path RunConfig::resolved_checkpoint() const { return checkpoint.empty() ? out / "model.json" : checkpoint; }

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split_list(text)) {
    if (part.find(':') == std::string::npos) {
      out.push_back(parse_double("list", part));
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream in(part);
    std::string f;
    while (std::getline(in, f, ':')) fields.push_back(trim(f));
    if (fields.size() != 3) throw Error("range '" + part + "' must be start:stop:step");
    const double start = parse_double("range", fields[0]);
    const double stop = parse_double("range", fields[1]);
    const double step = parse_double("range", fields[2]);
    if (!(step > 0.0) || stop < start) throw Error("range '" + part + "' needs step > 0 and stop >= start");
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long long i = 0; i < count; ++i) {
      // Snap to a 1e-12 grid so that 0.1 * 3 lands on 0.3.
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  }
  if (out.empty()) throw Error("empty number list");
  return out;
}

void set_option(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "input") c.input = value;
  else if (key == "delimiter") {
    if (value == "whitespace") c.delimiter.delimiter = '\0';
    else if (value == "tab") c.delimiter.delimiter = '\t';
    else if (value == "comma") c.delimiter.delimiter = ',';
    else if (value.size() == 1) c.delimiter.delimiter = value[0];
    else throw Error("delimiter: expected whitespace, tab, comma or one character");
  } else if (key == "layout") {
    if (value == "pairs") c.delimiter.layout = DelimiterSpec::Layout::pairs;
    else if (value == "adjacency") c.delimiter.layout = DelimiterSpec::Layout::adjacency;
    else throw Error("layout: expected pairs or adjacency");
  } else if (key == "train_ratio") c.ratios.train = parse_double(key, value);
  else if (key == "validation_ratio") c.ratios.validation = parse_double(key, value);
  else if (key == "split_seed") c.split_seed = parse_uint(key, value);
  else if (key == "synthetic.users") c.synthetic.num_users = parse_index(key, value);
  else if (key == "synthetic.items") c.synthetic.num_items = parse_index(key, value);
  else if (key == "synthetic.topics") c.synthetic.topics = parse_index(key, value);
  else if (key == "synthetic.exponent") c.synthetic.popularity_exponent = parse_double(key, value);
  else if (key == "synthetic.min_per_user") c.synthetic.min_per_user = parse_index(key, value);
  else if (key == "synthetic.max_per_user") c.synthetic.max_per_user = parse_index(key, value);
  else if (key == "synthetic.affinity") c.synthetic.topic_affinity = parse_double(key, value);
  else if (key == "synthetic.seed") c.synthetic.seed = parse_uint(key, value);
  else if (key == "out") c.out = value;
  else if (key == "split_dir") c.split_dir = value;
  else if (key == "checkpoint") c.checkpoint = value;
  else if (key == "layers") c.model.layers = parse_index(key, value);
  else if (key == "dim") c.model.dim = parse_index(key, value);
  else if (key == "init_scale") c.model.init_scale = parse_double(key, value);
  else if (key == "model_seed") c.model.seed = parse_uint(key, value);
  else if (key == "loss") c.train.loss = parse_loss_kind(value);
  else if (key == "epochs") c.train.epochs = parse_index(key, value);
  else if (key == "batch_size") c.train.batch_size = parse_index(key, value);
  else if (key == "learning_rate") c.train.learning_rate = parse_double(key, value);
  else if (key == "adam_beta1") c.train.adam_beta1 = parse_double(key, value);
  else if (key == "adam_beta2") c.train.adam_beta2 = parse_double(key, value);
  else if (key == "adam_eps") c.train.adam_eps = parse_double(key, value);
  else if (key == "l2_reg") c.train.l2_reg = parse_double(key, value);
  else if (key == "negatives") c.train.negatives_per_positive = parse_index(key, value);
  else if (key == "train_seed") c.train.seed = parse_uint(key, value);
  else if (key == "resume") c.resume = parse_bool(key, value);
  else if (key == "dap") c.dap = parse_bool(key, value);
  else if (key == "variant") c.variant = value;
  else if (key == "alpha") c.alphas = parse_number_list(value);
  else if (key == "beta") c.betas = parse_number_list(value);
  else if (key == "clusters") c.clusters = parse_uint_list<Index>(key, value);
  else if (key == "pooling") c.dap_base.pooling = parse_pooling(value);
  else if (key == "similarity") c.dap_base.similarity = parse_similarity(value);
  else if (key == "neighborhood") c.dap_base.neighborhood = parse_neighborhood(value);
  else if (key == "use_similarity") c.dap_base.use_similarity = parse_bool(key, value);
  else if (key == "clamp_negative_similarity") c.dap_base.clamp_negative_similarity = parse_bool(key, value);
  else if (key == "dap_seed") c.dap_base.seed = parse_uint(key, value);
  else if (key == "kmeans_max_iters") c.dap_base.kmeans_max_iters = parse_index(key, value);
  else if (key == "kmeans_tol") c.dap_base.kmeans_tol = parse_double(key, value);
  else if (key == "k") c.ks = parse_uint_list<std::size_t>(key, value);
  else if (key == "groups") c.groups = parse_index(key, value);
  else if (key == "depth_layers") c.depth_layers = parse_uint_list<Index>(key, value);
  else if (key == "seed") {
    const auto seed = parse_uint(key, value);
    c.split_seed = seed;
    c.model.seed = seed;
    c.train.seed = seed;
    c.dap_base.seed = seed;
  } else {
    throw Error("unknown config key '" + key + "'");
  }
}

void apply_config_text(RunConfig& config, const std::string& text, const std::string& source) {
  std::stringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, number, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    try {
      set_option(config, key, line.substr(eq + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, number, e.what());
    }
  }
}

RunConfig load_config(const fs::path& path) {
  RunConfig config;
  apply_config_text(config, read_text_file(path), path.string());
  return config;
}

std::string canonical_config(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> kv{
      {"delimiter", delimiter_name(c.delimiter.delimiter)},
      {"layout", c.delimiter.layout == DelimiterSpec::Layout::pairs ? "pairs" : "adjacency"},
      {"train_ratio", format_double(c.ratios.train)},
      {"validation_ratio", format_double(c.ratios.validation)},
      {"split_seed", std::to_string(c.split_seed)},
      {"layers", std::to_string(c.model.layers)},
      {"dim", std::to_string(c.model.dim)},
      {"init_scale", format_double(c.model.init_scale)},
      {"model_seed", std::to_string(c.model.seed)},
      {"loss", to_string(c.train.loss)},
      {"epochs", std::to_string(c.train.epochs)},
      {"batch_size", std::to_string(c.train.batch_size)},
      {"learning_rate", format_double(c.train.learning_rate)},
      {"adam_beta1", format_double(c.train.adam_beta1)},
      {"adam_beta2", format_double(c.train.adam_beta2)},
      {"adam_eps", format_double(c.train.adam_eps)},
      {"l2_reg", format_double(c.train.l2_reg)},
      {"negatives", std::to_string(c.train.negatives_per_positive)},
      {"train_seed", std::to_string(c.train.seed)},
      {"dap", c.dap ? "on" : "off"},
      {"variant", c.variant},
      {"alpha", join_numbers(c.alphas)},
      {"beta", join_numbers(c.betas)},
      {"clusters", join_numbers(c.clusters)},
      {"pooling", to_string(c.dap_base.pooling)},
      {"similarity", to_string(c.dap_base.similarity)},
      {"neighborhood", to_string(c.dap_base.neighborhood)},
      {"use_similarity", c.dap_base.use_similarity ? "on" : "off"},
      {"clamp_negative_similarity", c.dap_base.clamp_negative_similarity ? "on" : "off"},
      {"dap_seed", std::to_string(c.dap_base.seed)},
      {"kmeans_max_iters", std::to_string(c.dap_base.kmeans_max_iters)},
      {"kmeans_tol", format_double(c.dap_base.kmeans_tol)},
      {"k", join_numbers(c.ks)},
      {"groups", std::to_string(c.groups)},
      {"depth_layers", join_numbers(c.depth_layers)},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const RunConfig& config) { return hex64(fnv1a(canonical_config(config))); }

namespace {

struct Loaded {
  SplitSet splits;
  BipartiteGraph graph;
};

Loaded load_split(const RunConfig& config) {
  const auto dir = config.resolved_split_dir();
  if (!fs::exists(dir / "manifest.json")) {
    throw Error("no prepared split at " + dir.string() + " (run 'popgcn prepare' first)");
  }
  Loaded l;
  l.splits = read_split(dir);
  l.graph = BipartiteGraph::build(l.splits.train, l.splits.num_users, l.splits.num_items);
  return l;
}

Checkpoint load_model(const RunConfig& config, const Loaded& data) {
  const auto path = config.resolved_checkpoint();
  if (!fs::exists(path)) throw Error("checkpoint not found: " + path.string());
  auto cp = load_checkpoint(path);
  if (cp.state.num_users != data.splits.num_users || cp.state.num_items != data.splits.num_items) {
    throw Error("checkpoint " + path.string() + " does not match the split's M x N");
  }
  forward(cp.state, data.graph);
  return cp;
}

/// One point of an evaluation sweep.
struct Setting {
  std::string label;
  std::optional<DapConfig> dap;
};

std::vector<Setting> settings(const RunConfig& config) {
  if (!config.dap) return {{"plain", std::nullopt}};
  std::vector<Setting> out;
  for (Index p : config.clusters) {
    for (double a : config.alphas) {
      for (double b : config.betas) {
        DapConfig d = config.dap_base;
        d.alpha = a;
        d.beta = b;
        d.clusters = p;
        d = apply_variant(d, config.variant);
        d.validate();
        const std::string label = (config.variant.empty() ? std::string("dap") : config.variant) +
                                  "[a=" + format_double(d.alpha) + ";b=" + format_double(d.beta) +
                                  ";P=" + std::to_string(d.clusters) + "]";
        out.push_back({label, d});
      }
    }
  }
  return out;
}

std::string setting_hash(const RunConfig& config, const Setting& s) {
  std::string text = canonical_config(config) + "setting = " + s.label + "\n";
  return hex64(fnv1a(text));
}

Json report_json(const MetricsReport& r) {
  Json j;
  j["split"] = r.split;
  j["k"] = r.k;
  j["recall"] = r.recall;
  j["ndcg"] = r.ndcg;
  j["tail_ratio"] = r.tail_ratio;
  j["tail_ratio_macro"] = r.tail_ratio_macro;
  j["users_evaluated"] = r.users_evaluated;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  return j;
}

void write_json(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace

void cmd_synth(const RunConfig& config) {
  const auto data = generate_interactions(config.synthetic);
  std::string text;
  text.reserve(data.size() * 12);
  for (const auto& x : data) text += std::to_string(x.user) + " " + std::to_string(x.item) + "\n";
  const auto path = config.input.empty() ? config.out / "interactions.txt" : config.input;
  write_text_file(path, text);
  std::cout << "wrote " << data.size() << " interactions for " << config.synthetic.num_users << " users x "
            << config.synthetic.num_items << " items to " << path.string() << "\n";
}

void cmd_prepare(const RunConfig& config) {
  if (config.input.empty()) throw Error("prepare: no input file configured (set 'input')");
  const auto loaded = load_interactions(config.input, config.delimiter);
  const auto splits = split(loaded.interactions, loaded.num_users, loaded.num_items, config.ratios, config.split_seed);
  const auto dir = config.resolved_split_dir();
  write_split(dir, splits);
  write_id_map(dir / "user_ids.tsv", loaded.user_tokens);
  write_id_map(dir / "item_ids.tsv", loaded.item_tokens);
  std::cout << "M=" << loaded.num_users << " N=" << loaded.num_items << " interactions=" << loaded.interactions.size()
            << " (duplicates dropped: " << loaded.duplicates << ")\n"
            << "train=" << splits.train.size() << " validation=" << splits.validation.size()
            << " test=" << splits.test_overall.size() << " test_tail=" << splits.test_tail.size() << "\n";
}

void cmd_train(const RunConfig& config) {
  const auto data = load_split(config);
  const auto path = config.resolved_checkpoint();
  Checkpoint cp;
  if (config.resume) {
    if (!fs::exists(path)) throw Error("resume: checkpoint not found: " + path.string());
    cp = load_checkpoint(path);
    if (cp.state.num_users != data.splits.num_users || cp.state.num_items != data.splits.num_items) {
      throw Error("resume: checkpoint " + path.string() + " does not match the split's M x N");
    }
  } else {
    cp.model = config.model;
    cp.state = init_embeddings(data.splits.num_users, data.splits.num_items, config.model);
  }
  cp.train_config = config.train;
  cp.dap.reset();
  train(cp.state, data.graph, data.splits.train, config.train, cp.progress);
  save_checkpoint(path, cp);
  write_loss_curve((config.out / "loss_curve.csv").string(), cp.progress.loss_curve);
  std::cout << "epochs_done=" << cp.progress.epochs_done;
  if (!cp.progress.loss_curve.empty()) {
    std::cout << " first_loss=" << format_double(cp.progress.loss_curve.front())
              << " last_loss=" << format_double(cp.progress.loss_curve.back());
  }
  std::cout << "\n";
}

void cmd_eval(const RunConfig& config) {
  const auto data = load_split(config);
  const auto cp = load_model(config, data);
  const auto& s = data.splits;
  const EvalTarget validation{s.validation, s.validation_tail, {}};
  const EvalTarget test{s.test_overall, s.test_tail, s.validation};

  std::string csv =
      "setting,alpha,beta,clusters,eval_split,split,k,recall,ndcg,tail_ratio,tail_ratio_macro,users_evaluated,"
      "config_hash,seed\n";
  std::string sweep =
      "setting,alpha,beta,clusters,k,val_recall,val_ndcg,val_tail_recall,val_tail_ratio,test_recall,test_ndcg,"
      "test_tail_recall,test_tail_ndcg,test_tail_ratio\n";
  Json rows = Json::array();

  struct Best {
    std::string label;
    double value = -1.0;
  } best_overall, best_tail;

  for (const auto& setting : settings(config)) {
    const EmbeddingState revised =
        setting.dap ? debiased_forward(cp.state, data.graph, *setting.dap) : cp.state;
    const std::string hash = setting_hash(config, setting);
    const std::string a = setting.dap ? format_double(setting.dap->alpha) : "";
    const std::string b = setting.dap ? format_double(setting.dap->beta) : "";
    const std::string p = setting.dap ? std::to_string(setting.dap->clusters) : "";

    std::vector<std::vector<MetricsReport>> by_split;
    for (const auto& [name, target] : {std::pair{"validation", &validation}, std::pair{"test", &test}}) {
      auto reports = evaluate(revised, data.graph, *target, s.partition, config.ks);
      for (auto& r : reports) {
        r.config_hash = hash;
        r.seed = cp.model.seed;
        csv += setting.label + "," + a + "," + b + "," + p + "," + name + "," + r.split + "," + std::to_string(r.k) +
               "," + format_double(r.recall) + "," + format_double(r.ndcg) + "," + format_double(r.tail_ratio) + "," +
               format_double(r.tail_ratio_macro) + "," + std::to_string(r.users_evaluated) + "," + r.config_hash +
               "," + std::to_string(r.seed) + "\n";
        Json row = report_json(r);
        row["setting"] = setting.label;
        row["eval_split"] = name;
        rows.push_back(row);
      }
      by_split.push_back(std::move(reports));
    }
    // reports come as {overall, tail} per K; the sweep row uses the first K.
    const auto& v = by_split[0];
    const auto& t = by_split[1];
    sweep += setting.label + "," + a + "," + b + "," + p + "," + std::to_string(config.ks.front()) + "," +
             format_double(v[0].recall) + "," + format_double(v[0].ndcg) + "," + format_double(v[1].recall) + "," +
             format_double(v[0].tail_ratio) + "," + format_double(t[0].recall) + "," + format_double(t[0].ndcg) + "," +
             format_double(t[1].recall) + "," + format_double(t[1].ndcg) + "," + format_double(t[0].tail_ratio) + "\n";
    if (v[0].recall > best_overall.value) best_overall = {setting.label, v[0].recall};
    if (v[1].recall > best_tail.value) best_tail = {setting.label, v[1].recall};
  }

  write_text_file(config.out / "metrics.csv", csv);
  write_text_file(config.out / "sweep.csv", sweep);
  Json doc;
  doc["config_hash"] = config_hash(config);
  doc["checkpoint_epochs"] = cp.progress.epochs_done;
  doc["rows"] = rows;
  write_json(config.out / "metrics.json", doc);

  Json selection;
  selection["k"] = config.ks.front();
  selection["best_validation_overall_recall"] = {{"setting", best_overall.label}, {"recall", best_overall.value}};
  selection["best_validation_tail_recall"] = {{"setting", best_tail.label}, {"recall", best_tail.value}};
  write_json(config.out / "selection.json", selection);
  std::cout << "evaluated " << settings(config).size() << " setting(s); best on validation overall: "
            << best_overall.label << " (recall " << format_double(best_overall.value) << ")\n";
}

void cmd_diagnose(const RunConfig& config) {
  const auto data = load_split(config);
  const auto cp = load_model(config, data);

  write_degree_histogram(config.out / "degree_histogram.csv", data.graph);
  const auto items = item_influence_table(cp.state, data.graph);
  write_item_influence_csv(config.out / "item_influence.csv", items);
  const auto report = degree_group_report(cp.state, data.graph, config.groups);
  write_degree_groups_csv(config.out / "degree_groups.csv", report);

  std::vector<double> index, scaled, omega;
  for (const auto& g : report.groups) {
    index.push_back(g.group);
    scaled.push_back(g.mean_ln_scaled);
    omega.push_back(g.mean_omega);
  }
  double identity_error = 0.0;
  for (const auto& r : items) {
    if (r.theta_norm > 0.0) {
      identity_error = std::max(identity_error,
                                std::abs(r.ln_scaled - (1.5 * std::log(static_cast<double>(r.degree)) + r.ln_theta)));
    }
  }

  Json doc;
  doc["config_hash"] = config_hash(config);
  doc["items"] = items.size();
  doc["groups_requested"] = report.requested_groups;
  doc["groups"] = report.groups.size();
  doc["groups_reduced"] = report.reduced;
  doc["spearman_group_ln_d32_theta"] = spearman(index, scaled);
  doc["spearman_group_omega"] = spearman(index, omega);
  doc["identity_max_abs_error"] = identity_error;

  const auto all = settings(config);
  if (all.front().dap) {
    std::vector<ClusterAssignment> clusters;
    debiased_forward(cp.state, data.graph, *all.front().dap, &clusters);
    write_cluster_assignments((config.out / "clusters.csv").string(), clusters);
    doc["clusters_setting"] = all.front().label;
  }

  if (!config.depth_layers.empty()) {
    DepthSweepOptions options;
    options.layer_list = config.depth_layers;
    options.model = config.model;
    options.train = config.train;
    options.dap = all.front().dap;
    options.k = config.ks.front();
    options.cache_dir = config.out / "cache";
    const auto rows = depth_sweep(data.splits, options);
    write_depth_sweep_csv(config.out / "depth_sweep.csv", rows);
    doc["depth_sweep_rows"] = rows.size();
  }
  write_json(config.out / "diagnostics.json", doc);
  std::cout << "diagnosed " << items.size() << " items in " << report.groups.size() << " degree groups\n";
}

namespace {

struct Overrides {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  bool resume = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Flat key = value config file");
  cmd->add_option("--set", o.sets, "Override any config key (key=value), repeatable");
  const std::vector<std::pair<std::string, std::string>> keyed{
      {"--layers", "layers"},       {"--dim", "dim"},           {"--alpha", "alpha"},   {"--beta", "beta"},
      {"--clusters", "clusters"},   {"--k", "k"},               {"--seed", "seed"},     {"--variant", "variant"},
      {"--loss", "loss"},           {"--out", "out"},           {"--input", "input"},   {"--epochs", "epochs"},
      {"--checkpoint", "checkpoint"}, {"--split-dir", "split_dir"}, {"--dap", "dap"},
  };
  for (const auto& [flag, key] : keyed) {
    cmd->add_option_function<std::string>(flag, [&o, key = key](const std::string& v) { o.flags[key] = v; },
                                          "Sets config key '" + key + "'")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
}

RunConfig build_config(const Overrides& o) {
  RunConfig config;
  if (!o.config_path.empty()) config = load_config(o.config_path);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + s + "'");
    set_option(config, trim(s.substr(0, eq)), s.substr(eq + 1));
  }
  // "seed" first so that more specific keys win regardless of map order.
  if (auto it = o.flags.find("seed"); it != o.flags.end()) set_option(config, "seed", it->second);
  for (const auto& [key, value] : o.flags) {
    if (key != "seed") set_option(config, key, value);
  }
  if (o.resume) config.resume = true;
  return config;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"LightGCN training, popularity debiasing and evaluation"};
  app.require_subcommand(1);
  Overrides o;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic power-law interaction file");
  auto* prepare = app.add_subcommand("prepare", "Load interactions and write train/validation/test splits");
  auto* train_cmd = app.add_subcommand("train", "Train layer-0 embeddings and write a checkpoint");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint, optionally sweeping debiasing settings");
  auto* diagnose = app.add_subcommand("diagnose", "Write degree-group, influence, cluster and depth reports");
  for (auto* cmd : {synth, prepare, train_cmd, eval, diagnose}) add_common(cmd, o);
  train_cmd->add_flag("--resume", o.resume, "Continue from the existing checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig config = build_config(o);
    fs::create_directories(config.out);
    if (synth->parsed()) cmd_synth(config);
    else if (prepare->parsed()) cmd_prepare(config);
    else if (train_cmd->parsed()) cmd_train(config);
    else if (eval->parsed()) cmd_eval(config);
    else if (diagnose->parsed()) cmd_diagnose(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"popgcn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace popgcn::cli
