#include "popgcn/dataset.hpp"

#include "popgcn/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace popgcn {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> tokenize(std::string_view line, char delimiter) {
  std::vector<std::string_view> tokens;
  if (delimiter == '\0') {
    std::size_t pos = 0;
    while (pos < line.size()) {
      pos = line.find_first_not_of(" \t\r\n", pos);
      if (pos == std::string_view::npos) break;
      auto end = line.find_first_of(" \t\r\n", pos);
      if (end == std::string_view::npos) end = line.size();
      tokens.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    return tokens;
  }
  std::size_t pos = 0;
  while (true) {
    const auto end = line.find(delimiter, pos);
    tokens.push_back(trim(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos)));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return tokens;
}

struct PairHash {
  std::size_t operator()(const Interaction& x) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(x.user) << 32) | x.item);
  }
};

Index parse_index(std::string_view token, const std::string& source, std::size_t line) {
  Index value = 0;
  if (token.empty()) throw ParseError(source, line, "empty index");
  for (char c : token) {
    if (c < '0' || c > '9') throw ParseError(source, line, "expected a non-negative integer, got '" + std::string(token) + "'");
    value = value * 10 + static_cast<Index>(c - '0');
  }
  return value;
}

nlohmann::ordered_json sizes_json(const SplitSet& s) {
  nlohmann::ordered_json j;
  j["train"] = s.train.size();
  j["validation"] = s.validation.size();
  j["test_overall"] = s.test_overall.size();
  j["test_tail"] = s.test_tail.size();
  j["validation_tail"] = s.validation_tail.size();
  return j;
}

}  // namespace

LoadedInteractions load_interactions(const std::filesystem::path& path, const DelimiterSpec& spec) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open interaction file: " + path.string());

  LoadedInteractions out;
  std::unordered_map<std::string, Index> users;
  std::unordered_map<std::string, Index> items;
  std::unordered_set<Interaction, PairHash> seen;

  auto intern = [](std::unordered_map<std::string, Index>& map, std::vector<std::string>& tokens,
                   std::string_view token) {
    auto [it, inserted] = map.try_emplace(std::string(token), static_cast<Index>(tokens.size()));
    if (inserted) tokens.emplace_back(token);
    return it->second;
  };
  auto add = [&](Index user, Index item) {
    const Interaction x{user, item};
    if (seen.insert(x).second) {
      out.interactions.push_back(x);
    } else {
      ++out.duplicates;
    }
  };

  const std::string source = path.string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    ++out.lines_read;
    const auto tokens = tokenize(body, spec.delimiter);
    if (tokens.size() < 2 || tokens[0].empty() || tokens[1].empty()) {
      throw ParseError(source, line_no, "expected a user token and an item token");
    }
    const Index user = intern(users, out.user_tokens, tokens[0]);
    if (spec.layout == DelimiterSpec::Layout::pairs) {
      add(user, intern(items, out.item_tokens, tokens[1]));
    } else {
      for (std::size_t t = 1; t < tokens.size(); ++t) {
        if (tokens[t].empty()) throw ParseError(source, line_no, "empty item token");
        add(user, intern(items, out.item_tokens, tokens[t]));
      }
    }
  }
  if (out.interactions.empty()) throw Error("no interactions in " + source);
  out.num_users = static_cast<Index>(out.user_tokens.size());
  out.num_items = static_cast<Index>(out.item_tokens.size());
  return out;
}

void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& tokens) {
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    text += std::to_string(i);
    text += '\t';
    text += tokens[i];
    text += '\n';
  }
  write_text_file(path, text);
}

PopularityPartition partition_by_popularity(std::span<const Interaction> train, Index num_items) {
  PopularityPartition p;
  p.degree.assign(num_items, 0);
  for (const auto& x : train) {
    if (x.item >= num_items) throw Error("partition_by_popularity: item " + std::to_string(x.item) + " out of range");
    ++p.degree[x.item];
  }

  std::vector<Index> order(num_items);
  for (Index i = 0; i < num_items; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return p.degree[a] > p.degree[b]; });

  const auto observed = static_cast<std::size_t>(std::count_if(p.degree.begin(), p.degree.end(), [](Index d) { return d > 0; }));
  const std::size_t num_popular = (observed + 4) / 5;  // ceil(0.2 * observed)

  p.is_tail.assign(num_items, true);
  for (std::size_t r = 0; r < num_popular; ++r) p.is_tail[order[r]] = false;
  p.boundary_degree = num_popular > 0 ? p.degree[order[num_popular - 1]] : 0;
  for (Index i = 0; i < num_items; ++i) (p.is_tail[i] ? p.tail : p.popular).push_back(i);
  return p;
}

std::vector<Interaction> filter_tail(std::span<const Interaction> data, const PopularityPartition& partition) {
  std::vector<Interaction> out;
  for (const auto& x : data) {
    if (partition.tail_item(x.item)) out.push_back(x);
  }
  return out;
}

SplitSet split(std::span<const Interaction> data, Index num_users, Index num_items, const SplitRatios& ratios,
               std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.train <= 1.0)) throw Error("split: train ratio must be in (0, 1]");
  if (!(ratios.validation >= 0.0 && ratios.validation < 1.0)) throw Error("split: validation ratio must be in [0, 1)");

  std::vector<std::vector<Index>> per_user(num_users);
  {
    std::unordered_set<Interaction, PairHash> seen;
    for (const auto& x : data) {
      if (x.user >= num_users || x.item >= num_items) {
        throw Error("split: interaction (" + std::to_string(x.user) + ", " + std::to_string(x.item) + ") out of range");
      }
      if (seen.insert(x).second) per_user[x.user].push_back(x.item);
    }
  }

  SplitSet s;
  s.num_users = num_users;
  s.num_items = num_items;
  s.seed = seed;
  std::mt19937_64 rng(seed);
  for (Index u = 0; u < num_users; ++u) {
    auto& items = per_user[u];
    if (items.empty()) continue;
    shuffle(items, rng);
    const auto n = static_cast<long long>(items.size());
    const long long n_test = std::min(n - 1, std::llround((1.0 - ratios.train) * static_cast<double>(n)));
    const long long n_train_part = n - n_test;
    const long long n_val =
        std::min(n_train_part - 1, std::llround(ratios.validation * static_cast<double>(n_train_part)));
    for (long long k = 0; k < n; ++k) {
      const Interaction x{u, items[static_cast<std::size_t>(k)]};
      if (k < n_test) {
        s.test_overall.push_back(x);
      } else if (k < n_test + n_val) {
        s.validation.push_back(x);
      } else {
        s.train.push_back(x);
      }
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test_overall.begin(), s.test_overall.end());

  s.partition = partition_by_popularity(s.train, num_items);
  s.test_tail = filter_tail(s.test_overall, s.partition);
  s.validation_tail = filter_tail(s.validation, s.partition);
  return s;
}

std::vector<Interaction> read_indexed_interactions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  std::vector<Interaction> out;
  std::string line;
  std::size_t line_no = 0;
  const std::string source = path.string();
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto tokens = tokenize(body, '\0');
    if (tokens.size() < 2) throw ParseError(source, line_no, "expected 'user item'");
    out.push_back({parse_index(tokens[0], source, line_no), parse_index(tokens[1], source, line_no)});
  }
  return out;
}

void write_indexed_interactions(const std::filesystem::path& path, std::span<const Interaction> data) {
  std::string text;
  text.reserve(data.size() * 12);
  for (const auto& x : data) {
    text += std::to_string(x.user);
    text += ' ';
    text += std::to_string(x.item);
    text += '\n';
  }
  write_text_file(path, text);
}

std::string split_manifest(const SplitSet& s) {
  nlohmann::ordered_json j;
  j["num_users"] = s.num_users;
  j["num_items"] = s.num_items;
  j["seed"] = s.seed;
  j["sizes"] = sizes_json(s);
  j["partition"] = {{"popular", s.partition.popular.size()},
                    {"tail", s.partition.tail.size()},
                    {"boundary_degree", s.partition.boundary_degree}};
  return j.dump(2) + "\n";
}

void write_split(const std::filesystem::path& dir, const SplitSet& s) {
  std::filesystem::create_directories(dir);
  write_indexed_interactions(dir / "train.txt", s.train);
  write_indexed_interactions(dir / "validation.txt", s.validation);
  write_indexed_interactions(dir / "test.txt", s.test_overall);
  write_indexed_interactions(dir / "test_tail.txt", s.test_tail);
  write_indexed_interactions(dir / "validation_tail.txt", s.validation_tail);
  write_text_file(dir / "manifest.json", split_manifest(s));
}

SplitSet read_split(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  SplitSet s;
  s.num_users = manifest.at("num_users").get<Index>();
  s.num_items = manifest.at("num_items").get<Index>();
  s.seed = manifest.at("seed").get<std::uint64_t>();
  s.train = read_indexed_interactions(dir / "train.txt");
  s.validation = read_indexed_interactions(dir / "validation.txt");
  s.test_overall = read_indexed_interactions(dir / "test.txt");
  for (const auto* part : {&s.train, &s.validation, &s.test_overall}) {
    for (const auto& x : *part) {
      if (x.user >= s.num_users || x.item >= s.num_items) {
        throw Error("split file under " + dir.string() + " has an index outside the manifest's M x N");
      }
    }
  }
  s.partition = partition_by_popularity(s.train, s.num_items);
  s.test_tail = filter_tail(s.test_overall, s.partition);
  s.validation_tail = filter_tail(s.validation, s.partition);
  return s;
}

}  // namespace popgcn
