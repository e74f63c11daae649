#include "popgcn/graph.hpp"

#include "popgcn/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace popgcn {
namespace {

void build_csr(std::vector<std::vector<Index>>& lists, std::vector<Index>& offsets, std::vector<Index>& adj) {
  offsets.assign(lists.size() + 1, 0);
  for (std::size_t v = 0; v < lists.size(); ++v) offsets[v + 1] = offsets[v] + static_cast<Index>(lists[v].size());
  adj.clear();
  adj.reserve(offsets.back());
  for (auto& list : lists) adj.insert(adj.end(), list.begin(), list.end());
}

}  // namespace

BipartiteGraph BipartiteGraph::build(std::span<const Interaction> edges, Index num_users, Index num_items) {
  std::vector<std::vector<Index>> by_user(num_users);
  std::vector<std::vector<Index>> by_item(num_items);
  for (std::size_t r = 0; r < edges.size(); ++r) {
    const auto& e = edges[r];
    if (e.user >= num_users || e.item >= num_items) {
      throw Error("graph: record " + std::to_string(r) + " (user " + std::to_string(e.user) + ", item " +
                  std::to_string(e.item) + ") outside " + std::to_string(num_users) + " x " +
                  std::to_string(num_items));
    }
    by_user[e.user].push_back(e.item);
  }
  for (auto& list : by_user) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  // Filling item lists in ascending user order keeps them sorted.
  for (Index u = 0; u < num_users; ++u) {
    for (Index i : by_user[u]) by_item[i].push_back(u);
  }

  BipartiteGraph g;
  g.num_users_ = num_users;
  g.num_items_ = num_items;
  build_csr(by_user, g.user_offsets_, g.user_adj_);
  build_csr(by_item, g.item_offsets_, g.item_adj_);
  g.inv_sqrt_degree_.resize(g.num_nodes());
  for (Index v = 0; v < g.num_nodes(); ++v) {
    const Index d = g.node_degree(v);
    g.inv_sqrt_degree_[v] = d == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(d));
  }
  return g;
}

std::vector<Index> BipartiteGraph::node_degrees() const {
  std::vector<Index> d(num_nodes());
  for (Index v = 0; v < num_nodes(); ++v) d[v] = node_degree(v);
  return d;
}

std::vector<Index> BipartiteGraph::node_neighbors(Index node) const {
  std::vector<Index> out;
  if (node < num_users_) {
    const auto items = user_neighbors(node);
    out.reserve(items.size());
    for (Index i : items) out.push_back(num_users_ + i);
  } else {
    const auto users = item_neighbors(node - num_users_);
    out.assign(users.begin(), users.end());
  }
  return out;
}

bool BipartiteGraph::has_edge(Index user, Index item) const {
  const auto items = user_neighbors(user);
  return std::binary_search(items.begin(), items.end(), item);
}

Matrix propagate(const BipartiteGraph& graph, const Matrix& embeddings) {
  const Index m = graph.num_users();
  const Index n = graph.num_nodes();
  if (embeddings.rows() != n) {
    throw Error("propagate: embedding table has " + std::to_string(embeddings.rows()) + " rows, graph has " +
                std::to_string(n) + " nodes");
  }
  const auto& inv = graph.inv_sqrt_degree();
  Matrix out = Matrix::Zero(n, embeddings.cols());
  for (Index u = 0; u < m; ++u) {
    auto row = out.row(u);
    for (Index i : graph.user_neighbors(u)) row.noalias() += inv[m + i] * embeddings.row(m + i);
    row *= inv[u];
  }
  for (Index i = 0; i < graph.num_items(); ++i) {
    auto row = out.row(m + i);
    for (Index u : graph.item_neighbors(i)) row.noalias() += inv[u] * embeddings.row(u);
    row *= inv[m + i];
  }
  return out;
}

std::pair<Matrix, Matrix> propagate(const BipartiteGraph& graph, const Matrix& user_emb, const Matrix& item_emb) {
  if (user_emb.rows() != graph.num_users() || item_emb.rows() != graph.num_items() ||
      user_emb.cols() != item_emb.cols()) {
    throw Error("propagate: user/item tables do not match the graph or each other");
  }
  Matrix joint(graph.num_nodes(), user_emb.cols());
  joint.topRows(graph.num_users()) = user_emb;
  joint.bottomRows(graph.num_items()) = item_emb;
  Matrix out = propagate(graph, joint);
  return {out.topRows(graph.num_users()), out.bottomRows(graph.num_items())};
}

void write_degree_histogram(const std::filesystem::path& path, const BipartiteGraph& graph) {
  std::map<Index, std::size_t> users;
  std::map<Index, std::size_t> items;
  for (Index u = 0; u < graph.num_users(); ++u) ++users[graph.user_degree(u)];
  for (Index i = 0; i < graph.num_items(); ++i) ++items[graph.item_degree(i)];
  std::string text = "side,degree,count\n";
  for (const auto& [d, c] : items) text += "item," + std::to_string(d) + "," + std::to_string(c) + "\n";
  for (const auto& [d, c] : users) text += "user," + std::to_string(d) + "," + std::to_string(c) + "\n";
  write_text_file(path, text);
}

}  // namespace popgcn
