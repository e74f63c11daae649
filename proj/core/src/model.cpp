#include "popgcn/model.hpp"

#include "popgcn/util.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace popgcn {

EmbeddingState init_embeddings(Index num_users, Index num_items, const ModelConfig& config) {
  if (config.dim < 1) throw Error("init_embeddings: dim must be >= 1");
  EmbeddingState s;
  s.num_users = num_users;
  s.num_items = num_items;
  s.num_layers = config.layers;
  s.layer0.resize(num_users + num_items, config.dim);
  std::mt19937_64 rng(config.seed);
  for (Eigen::Index r = 0; r < s.layer0.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.layer0.cols(); ++c) s.layer0(r, c) = config.init_scale * standard_normal(rng);
  }
  return s;
}

Matrix combine_layers(const Matrix& layer0, std::span<const Matrix> layers) {
  Matrix out = layer0;
  for (const auto& layer : layers) out += layer;
  out /= static_cast<double>(layers.size() + 1);
  return out;
}

void forward(EmbeddingState& state, const BipartiteGraph& graph) {
  if (graph.num_users() != state.num_users || graph.num_items() != state.num_items) {
    throw Error("forward: graph is " + std::to_string(graph.num_users()) + " x " + std::to_string(graph.num_items()) +
                ", embeddings are " + std::to_string(state.num_users) + " x " + std::to_string(state.num_items));
  }
  state.layers.clear();
  state.layers.reserve(state.num_layers);
  for (Index l = 0; l < state.num_layers; ++l) {
    state.layers.push_back(propagate(graph, l == 0 ? state.layer0 : state.layers.back()));
  }
  state.combined = combine_layers(state.layer0, state.layers);
}

std::vector<double> score(const EmbeddingState& state, Index user, std::span<const Index> items) {
  if (!state.forwarded()) throw Error("score: forward has not run");
  if (user >= state.num_users) throw Error("score: user " + std::to_string(user) + " out of range");
  std::vector<double> out;
  out.reserve(items.size());
  const auto u = state.user_row(user);
  for (Index i : items) {
    if (i >= state.num_items) throw Error("score: item " + std::to_string(i) + " out of range");
    out.push_back(u.dot(state.item_row(i)));
  }
  return out;
}

Vector score_all(const EmbeddingState& state, Index user) {
  if (!state.forwarded()) throw Error("score_all: forward has not run");
  if (user >= state.num_users) throw Error("score_all: user " + std::to_string(user) + " out of range");
  return state.combined.bottomRows(state.num_items) * state.combined.row(user).transpose();
}

std::vector<Index> top_k(std::span<const double> scores, std::span<const Index> exclude, std::size_t k) {
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  auto ex = exclude.begin();
  for (Index i = 0; i < scores.size(); ++i) {
    while (ex != exclude.end() && *ex < i) ++ex;
    if (ex != exclude.end() && *ex == i) continue;
    candidates.push_back(i);
  }
  auto better = [&](Index a, Index b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(), better);
  candidates.resize(take);
  return candidates;
}

std::vector<Index> full_ranking(const EmbeddingState& state, const BipartiteGraph& graph, Index user,
                                std::span<const Index> extra_exclude, std::size_t k) {
  const Vector scores = score_all(state, user);
  const auto train = graph.user_neighbors(user);
  std::vector<Index> exclude(train.begin(), train.end());
  exclude.insert(exclude.end(), extra_exclude.begin(), extra_exclude.end());
  std::sort(exclude.begin(), exclude.end());
  return top_k({scores.data(), static_cast<std::size_t>(scores.size())}, exclude, k);
}

}  // namespace popgcn
