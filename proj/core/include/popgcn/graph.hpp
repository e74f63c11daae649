#pragma once

#include "popgcn/dataset.hpp"
#include "popgcn/types.hpp"

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace popgcn {

/// User-item bipartite graph in CSR form on both sides.
///
/// Joint node numbering puts users first: node u is user u, node M + i is item i.
/// Neighbor lists are sorted ascending and carry no duplicates.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;

  /// Throws Error naming the offending record if an index is out of range.
  static BipartiteGraph build(std::span<const Interaction> edges, Index num_users, Index num_items);

  Index num_users() const { return num_users_; }
  Index num_items() const { return num_items_; }
  Index num_nodes() const { return num_users_ + num_items_; }
  std::size_t num_edges() const { return user_adj_.size(); }

  std::span<const Index> user_neighbors(Index user) const {
    return {user_adj_.data() + user_offsets_[user], user_adj_.data() + user_offsets_[user + 1]};
  }
  std::span<const Index> item_neighbors(Index item) const {
    return {item_adj_.data() + item_offsets_[item], item_adj_.data() + item_offsets_[item + 1]};
  }

  Index user_degree(Index user) const { return user_offsets_[user + 1] - user_offsets_[user]; }
  Index item_degree(Index item) const { return item_offsets_[item + 1] - item_offsets_[item]; }
  Index node_degree(Index node) const {
    return node < num_users_ ? user_degree(node) : item_degree(node - num_users_);
  }

  /// Degrees of all M + N nodes in joint order.
  std::vector<Index> node_degrees() const;

  /// One-hop neighbors of a joint node, as joint node indices, ascending.
  std::vector<Index> node_neighbors(Index node) const;

  bool has_edge(Index user, Index item) const;

  /// 1/sqrt(d) per joint node, 0 for isolated nodes.
  const std::vector<double>& inv_sqrt_degree() const { return inv_sqrt_degree_; }

 private:
  Index num_users_ = 0;
  Index num_items_ = 0;
  std::vector<Index> user_offsets_{0};
  std::vector<Index> user_adj_;
  std::vector<Index> item_offsets_{0};
  std::vector<Index> item_adj_;
  std::vector<double> inv_sqrt_degree_;
};

/// One LightGCN convolution over the joint (M+N) x D embedding table:
/// out_v = sum_{j in N(v)} x_j / (sqrt(d_v) sqrt(d_j)), summed in ascending
/// neighbor order. Isolated nodes map to zero.
Matrix propagate(const BipartiteGraph& graph, const Matrix& embeddings);

/// Same operator with separate user and item tables.
std::pair<Matrix, Matrix> propagate(const BipartiteGraph& graph, const Matrix& user_emb, const Matrix& item_emb);

/// CSV "side,degree,count" sorted by side then degree.
void write_degree_histogram(const std::filesystem::path& path, const BipartiteGraph& graph);

}  // namespace popgcn
