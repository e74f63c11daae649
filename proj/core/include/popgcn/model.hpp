#pragma once

#include "popgcn/graph.hpp"
#include "popgcn/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace popgcn {

struct ModelConfig {
  Index layers = 3;
  Index dim = 64;
  double init_scale = 0.1;
  std::uint64_t seed = 2023;
};

/// Layer-0 parameters plus the propagated layers and their combination.
/// Rows are joint nodes (users first, then items).
struct EmbeddingState {
  Index num_users = 0;
  Index num_items = 0;
  Index num_layers = 0;
  Matrix layer0;
  /// E^(1..L) after forward (or the revised layers after a debiased forward).
  std::vector<Matrix> layers;
  Matrix combined;

  Index dim() const { return static_cast<Index>(layer0.cols()); }
  Index num_nodes() const { return num_users + num_items; }
  bool forwarded() const { return combined.rows() == layer0.rows() && combined.size() > 0; }

  auto user_row(Index user) const { return combined.row(user); }
  auto item_row(Index item) const { return combined.row(num_users + item); }
};

/// i.i.d. normal(0, scale^2) layer-0 embeddings, deterministic under seed.
EmbeddingState init_embeddings(Index num_users, Index num_items, const ModelConfig& config);

/// Uniform mean over E^(0..L).
Matrix combine_layers(const Matrix& layer0, std::span<const Matrix> layers);

/// Fills layers[1..L] and combined from layer0.
void forward(EmbeddingState& state, const BipartiteGraph& graph);

/// Inner products e_u . e_i of the combined representations.
std::vector<double> score(const EmbeddingState& state, Index user, std::span<const Index> items);

/// Scores for every item, in item order.
Vector score_all(const EmbeddingState& state, Index user);

/// Top-k items by score descending, ties by ascending item index, skipping
/// `exclude` (which must be sorted ascending). Returns everything remaining
/// when fewer than k items are eligible.
std::vector<Index> top_k(std::span<const double> scores, std::span<const Index> exclude, std::size_t k);

/// top_k over score_all, excluding u's train neighbors plus `extra_exclude`.
std::vector<Index> full_ranking(const EmbeddingState& state, const BipartiteGraph& graph, Index user,
                                std::span<const Index> extra_exclude, std::size_t k);

}  // namespace popgcn
