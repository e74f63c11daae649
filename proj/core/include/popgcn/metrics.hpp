#pragma once

#include "popgcn/dataset.hpp"
#include "popgcn/graph.hpp"
#include "popgcn/model.hpp"
#include "popgcn/types.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace popgcn {

/// |topk[0..K) ∩ relevant| / |relevant|. `relevant` sorted ascending, nonempty.
double recall_at_k(std::span<const Index> topk, std::span<const Index> relevant, std::size_t k);

/// DCG over the first K slots divided by the ideal DCG of min(K, |relevant|) hits.
double ndcg_at_k(std::span<const Index> topk, std::span<const Index> relevant, std::size_t k);

/// Fraction of all recommended slots (first K of each list) taken by tail items.
double tail_ratio_at_k(std::span<const std::vector<Index>> lists, const std::vector<bool>& is_tail, std::size_t k);

/// Mean over lists of the per-list tail fraction (lists with no slots skipped).
double tail_ratio_macro_at_k(std::span<const std::vector<Index>> lists, const std::vector<bool>& is_tail,
                             std::size_t k);

struct MetricsReport {
  std::string split;  // "overall" or "tail"
  std::size_t k = 20;
  double recall = 0.0;
  double ndcg = 0.0;
  /// Slot-level tail ratio over the overall rankings.
  double tail_ratio = 0.0;
  double tail_ratio_macro = 0.0;
  std::size_t users_evaluated = 0;
  std::string config_hash;
  std::uint64_t seed = 0;

  bool empty() const { return users_evaluated == 0; }
};

/// What to evaluate against: relevance sets plus interactions that are known
/// but must not be ranked (for a test evaluation, the validation split).
struct EvalTarget {
  std::span<const Interaction> overall;
  std::span<const Interaction> tail;
  std::span<const Interaction> extra_exclude;
};

/// Scores for every item for one user.
using UserScorer = std::function<Vector(Index user)>;

/// All-ranking evaluation. Train items (graph neighbors) and extra_exclude are
/// removed before ranking; users with no relevant items in a split are skipped
/// for that split. Returns {overall, tail} for each K, in ks order.
std::vector<MetricsReport> evaluate(const UserScorer& scorer, const BipartiteGraph& graph, const EvalTarget& target,
                                    const PopularityPartition& partition, std::span<const std::size_t> ks);

std::vector<MetricsReport> evaluate(const EmbeddingState& state, const BipartiteGraph& graph,
                                    const EvalTarget& target, const PopularityPartition& partition,
                                    std::span<const std::size_t> ks);

/// Per-user sorted item lists from an interaction list.
std::vector<std::vector<Index>> group_by_user(std::span<const Interaction> data, Index num_users);

}  // namespace popgcn
