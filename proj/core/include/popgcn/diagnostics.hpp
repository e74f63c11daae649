#pragma once

#include "popgcn/dap.hpp"
#include "popgcn/dataset.hpp"
#include "popgcn/graph.hpp"
#include "popgcn/metrics.hpp"
#include "popgcn/model.hpp"
#include "popgcn/training.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popgcn {

/// Two-hop path expectation for an item: the mean over its neighbor users j
/// of e_j^(0) / sqrt(d_j). Zero for an isolated item.
RowVector estimate_theta(const EmbeddingState& state, const BipartiteGraph& graph, Index item);

/// Mean propagation weight 1/(sqrt(d_i) sqrt(d_t)) over the item's users.
double mean_aggregation_weight(const BipartiteGraph& graph, Index item);

struct ItemInfluence {
  Index item = 0;
  Index degree = 0;
  double theta_norm = 0.0;
  double ln_theta = 0.0;      // ln ||theta||
  double ln_scaled = 0.0;     // ln(d^{3/2} ||theta||), evaluated directly
  double omega = 0.0;
};

/// One row per item with nonzero degree, ascending (degree, item).
std::vector<ItemInfluence> item_influence_table(const EmbeddingState& state, const BipartiteGraph& graph);

struct DegreeGroupStats {
  Index group = 0;
  Index min_degree = 0;
  Index max_degree = 0;
  double mean_ln_theta = 0.0;
  double mean_ln_scaled = 0.0;
  double mean_theta_norm = 0.0;
  double mean_omega = 0.0;
  std::size_t item_count = 0;
};

struct DegreeGroupReport {
  std::vector<DegreeGroupStats> groups;
  Index requested_groups = 0;
  /// True when fewer items than requested groups forced a smaller count.
  bool reduced = false;
};

/// Items with nonzero degree, sorted by (degree, index), cut into equal-count
/// groups (earlier groups take the remainder).
DegreeGroupReport degree_group_report(const EmbeddingState& state, const BipartiteGraph& graph, Index num_groups = 10);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

struct DepthSweepRow {
  Index layers = 0;
  std::string model;  // "plain" or "dap"
  MetricsReport overall;
  MetricsReport tail;
};

struct DepthSweepOptions {
  std::vector<Index> layer_list{1, 2, 3, 4};
  ModelConfig model;
  TrainConfig train;
  std::optional<DapConfig> dap;
  std::size_t k = 20;
  /// When set, trained checkpoints are cached here keyed by a config hash.
  std::optional<std::filesystem::path> cache_dir;
};

/// Trains one model per depth on splits.train and evaluates it on the test
/// split (plain, and DAP-revised when options.dap is set).
std::vector<DepthSweepRow> depth_sweep(const SplitSet& splits, const DepthSweepOptions& options);

void write_degree_groups_csv(const std::filesystem::path& path, const DegreeGroupReport& report);
void write_item_influence_csv(const std::filesystem::path& path, std::span<const ItemInfluence> rows);
void write_depth_sweep_csv(const std::filesystem::path& path, std::span<const DepthSweepRow> rows);

}  // namespace popgcn
