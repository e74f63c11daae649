#include "popgcn/diagnostics.hpp"

#include "popgcn/checkpoint.hpp"
#include "popgcn/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace popgcn {

RowVector estimate_theta(const EmbeddingState& state, const BipartiteGraph& graph, Index item) {
  RowVector theta = RowVector::Zero(state.dim());
  const auto users = graph.item_neighbors(item);
  if (users.empty()) return theta;
  const auto& inv = graph.inv_sqrt_degree();
  for (Index j : users) theta += inv[j] * state.layer0.row(j);
  return theta / static_cast<double>(users.size());
}

double mean_aggregation_weight(const BipartiteGraph& graph, Index item) {
  const auto users = graph.item_neighbors(item);
  if (users.empty()) return 0.0;
  const auto& inv = graph.inv_sqrt_degree();
  const double inv_item = inv[graph.num_users() + item];
  double total = 0.0;
  for (Index t : users) total += inv_item * inv[t];
  return total / static_cast<double>(users.size());
}

std::vector<ItemInfluence> item_influence_table(const EmbeddingState& state, const BipartiteGraph& graph) {
  std::vector<ItemInfluence> rows;
  for (Index i = 0; i < graph.num_items(); ++i) {
    const Index d = graph.item_degree(i);
    if (d == 0) continue;
    ItemInfluence r;
    r.item = i;
    r.degree = d;
    r.theta_norm = estimate_theta(state, graph, i).norm();
    r.ln_theta = std::log(r.theta_norm);
    r.ln_scaled = std::log(std::pow(static_cast<double>(d), 1.5) * r.theta_norm);
    r.omega = mean_aggregation_weight(graph, i);
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.degree < b.degree; });
  return rows;
}

DegreeGroupReport degree_group_report(const EmbeddingState& state, const BipartiteGraph& graph, Index num_groups) {
  if (num_groups < 1) throw Error("degree_group_report: need at least one group");
  const auto rows = item_influence_table(state, graph);
  DegreeGroupReport report;
  report.requested_groups = num_groups;
  const std::size_t groups = std::min<std::size_t>(num_groups, rows.size());
  report.reduced = groups < num_groups;
  if (groups == 0) return report;

  const std::size_t base = rows.size() / groups;
  const std::size_t extra = rows.size() % groups;
  std::size_t start = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t size = base + (g < extra ? 1 : 0);
    DegreeGroupStats s;
    s.group = static_cast<Index>(g);
    s.item_count = size;
    s.min_degree = rows[start].degree;
    s.max_degree = rows[start + size - 1].degree;
    for (std::size_t r = start; r < start + size; ++r) {
      s.mean_ln_theta += rows[r].ln_theta;
      s.mean_ln_scaled += rows[r].ln_scaled;
      s.mean_theta_norm += rows[r].theta_norm;
      s.mean_omega += rows[r].omega;
    }
    const auto n = static_cast<double>(size);
    s.mean_ln_theta /= n;
    s.mean_ln_scaled /= n;
    s.mean_theta_norm /= n;
    s.mean_omega /= n;
    report.groups.push_back(s);
    start += size;
  }
  return report;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t r = 0; r < order.size();) {
    std::size_t end = r + 1;
    while (end < order.size() && x[order[end]] == x[order[r]]) ++end;
    const double avg = 0.5 * static_cast<double>(r + end - 1) + 1.0;
    for (std::size_t q = r; q < end; ++q) ranks[order[q]] = avg;
    r = end;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

std::vector<DepthSweepRow> depth_sweep(const SplitSet& splits, const DepthSweepOptions& options) {
  const auto graph = BipartiteGraph::build(splits.train, splits.num_users, splits.num_items);
  const std::vector<std::size_t> ks{options.k};
  const EvalTarget target{splits.test_overall, splits.test_tail, splits.validation};
  const std::string manifest = split_manifest(splits);

  std::vector<DepthSweepRow> rows;
  for (Index layers : options.layer_list) {
    Checkpoint cp;
    cp.model = options.model;
    cp.model.layers = layers;
    cp.train_config = options.train;

    std::optional<std::filesystem::path> cached;
    if (options.cache_dir) {
      const std::string key = manifest + checkpoint_json(Checkpoint{cp.model, {}, cp.train_config, {}, {}});
      cached = *options.cache_dir / ("L" + std::to_string(layers) + "_" + hex64(fnv1a(key)) + ".json");
    }
    if (cached && std::filesystem::exists(*cached)) {
      cp = load_checkpoint(*cached);
    } else {
      cp.state = init_embeddings(splits.num_users, splits.num_items, cp.model);
      train(cp.state, graph, splits.train, options.train, cp.progress);
      if (cached) save_checkpoint(*cached, cp);
    }
    forward(cp.state, graph);

    auto plain = evaluate(cp.state, graph, target, splits.partition, ks);
    rows.push_back({layers, "plain", plain[0], plain[1]});
    if (options.dap) {
      const auto revised = debiased_forward(cp.state, graph, *options.dap);
      auto dap = evaluate(revised, graph, target, splits.partition, ks);
      rows.push_back({layers, "dap", dap[0], dap[1]});
    }
  }
  return rows;
}

void write_degree_groups_csv(const std::filesystem::path& path, const DegreeGroupReport& report) {
  std::string text =
      "group,min_degree,max_degree,item_count,mean_ln_theta,mean_ln_d32_theta,mean_theta_norm,mean_omega\n";
  for (const auto& g : report.groups) {
    text += std::to_string(g.group) + "," + std::to_string(g.min_degree) + "," + std::to_string(g.max_degree) + "," +
            std::to_string(g.item_count) + "," + format_double(g.mean_ln_theta) + "," +
            format_double(g.mean_ln_scaled) + "," + format_double(g.mean_theta_norm) + "," +
            format_double(g.mean_omega) + "\n";
  }
  write_text_file(path, text);
}

void write_item_influence_csv(const std::filesystem::path& path, std::span<const ItemInfluence> rows) {
  std::string text = "item,degree,theta_norm,ln_theta,ln_d32_theta,omega\n";
  for (const auto& r : rows) {
    text += std::to_string(r.item) + "," + std::to_string(r.degree) + "," + format_double(r.theta_norm) + "," +
            format_double(r.ln_theta) + "," + format_double(r.ln_scaled) + "," + format_double(r.omega) + "\n";
  }
  write_text_file(path, text);
}

void write_depth_sweep_csv(const std::filesystem::path& path, std::span<const DepthSweepRow> rows) {
  std::string text = "layers,model,k,recall_overall,ndcg_overall,recall_tail,ndcg_tail,tail_ratio,tail_ratio_macro\n";
  for (const auto& r : rows) {
    text += std::to_string(r.layers) + "," + r.model + "," + std::to_string(r.overall.k) + "," +
            format_double(r.overall.recall) + "," + format_double(r.overall.ndcg) + "," +
            format_double(r.tail.recall) + "," + format_double(r.tail.ndcg) + "," +
            format_double(r.overall.tail_ratio) + "," + format_double(r.overall.tail_ratio_macro) + "\n";
  }
  write_text_file(path, text);
}

}  // namespace popgcn
