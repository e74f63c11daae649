#include "popgcn/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace popgcn {
namespace {

std::size_t cutoff(std::size_t size, std::size_t k) { return std::min(size, k); }

bool contains(std::span<const Index> sorted, Index value) {
  return std::binary_search(sorted.begin(), sorted.end(), value);
}

}  // namespace

double recall_at_k(std::span<const Index> topk, std::span<const Index> relevant, std::size_t k) {
  if (relevant.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < cutoff(topk.size(), k); ++r) hits += contains(relevant, topk[r]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const Index> topk, std::span<const Index> relevant, std::size_t k) {
  if (relevant.empty()) return 0.0;
  double dcg = 0.0;
  for (std::size_t r = 0; r < cutoff(topk.size(), k); ++r) {
    if (contains(relevant, topk[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t r = 0; r < cutoff(relevant.size(), k); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

double tail_ratio_at_k(std::span<const std::vector<Index>> lists, const std::vector<bool>& is_tail, std::size_t k) {
  std::size_t tail = 0;
  std::size_t slots = 0;
  for (const auto& list : lists) {
    const std::size_t n = cutoff(list.size(), k);
    slots += n;
    for (std::size_t r = 0; r < n; ++r) tail += is_tail[list[r]] ? 1 : 0;
  }
  return slots > 0 ? static_cast<double>(tail) / static_cast<double>(slots) : 0.0;
}

double tail_ratio_macro_at_k(std::span<const std::vector<Index>> lists, const std::vector<bool>& is_tail,
                             std::size_t k) {
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& list : lists) {
    const std::size_t n = cutoff(list.size(), k);
    if (n == 0) continue;
    std::size_t tail = 0;
    for (std::size_t r = 0; r < n; ++r) tail += is_tail[list[r]] ? 1 : 0;
    total += static_cast<double>(tail) / static_cast<double>(n);
    ++counted;
  }
  return counted > 0 ? total / static_cast<double>(counted) : 0.0;
}

std::vector<std::vector<Index>> group_by_user(std::span<const Interaction> data, Index num_users) {
  std::vector<std::vector<Index>> out(num_users);
  for (const auto& x : data) {
    if (x.user < num_users) out[x.user].push_back(x.item);
  }
  for (auto& items : out) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return out;
}

std::vector<MetricsReport> evaluate(const UserScorer& scorer, const BipartiteGraph& graph, const EvalTarget& target,
                                    const PopularityPartition& partition, std::span<const std::size_t> ks) {
  const Index m = graph.num_users();
  const auto overall = group_by_user(target.overall, m);
  const auto tail = group_by_user(target.tail, m);
  const auto extra = group_by_user(target.extra_exclude, m);
  const std::size_t kmax = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());

  std::vector<double> recall_o(ks.size(), 0.0), ndcg_o(ks.size(), 0.0);
  std::vector<double> recall_t(ks.size(), 0.0), ndcg_t(ks.size(), 0.0);
  std::size_t users_o = 0;
  std::size_t users_t = 0;
  std::vector<std::vector<Index>> overall_lists;

  std::vector<Index> exclude;
  for (Index u = 0; u < m; ++u) {
    if (overall[u].empty() && tail[u].empty()) continue;
    const Vector scores = scorer(u);
    const auto train = graph.user_neighbors(u);
    exclude.assign(train.begin(), train.end());
    exclude.insert(exclude.end(), extra[u].begin(), extra[u].end());
    std::sort(exclude.begin(), exclude.end());
    auto ranked = top_k({scores.data(), static_cast<std::size_t>(scores.size())}, exclude, kmax);

    if (!overall[u].empty()) {
      ++users_o;
      for (std::size_t q = 0; q < ks.size(); ++q) {
        recall_o[q] += recall_at_k(ranked, overall[u], ks[q]);
        ndcg_o[q] += ndcg_at_k(ranked, overall[u], ks[q]);
      }
    }
    if (!tail[u].empty()) {
      ++users_t;
      for (std::size_t q = 0; q < ks.size(); ++q) {
        recall_t[q] += recall_at_k(ranked, tail[u], ks[q]);
        ndcg_t[q] += ndcg_at_k(ranked, tail[u], ks[q]);
      }
    }
    if (!overall[u].empty()) overall_lists.push_back(std::move(ranked));
  }

  std::vector<MetricsReport> out;
  for (std::size_t q = 0; q < ks.size(); ++q) {
    const double tr = tail_ratio_at_k(overall_lists, partition.is_tail, ks[q]);
    const double tr_macro = tail_ratio_macro_at_k(overall_lists, partition.is_tail, ks[q]);
    MetricsReport o;
    o.split = "overall";
    o.k = ks[q];
    o.users_evaluated = users_o;
    o.recall = users_o ? recall_o[q] / static_cast<double>(users_o) : 0.0;
    o.ndcg = users_o ? ndcg_o[q] / static_cast<double>(users_o) : 0.0;
    o.tail_ratio = tr;
    o.tail_ratio_macro = tr_macro;
    MetricsReport t = o;
    t.split = "tail";
    t.users_evaluated = users_t;
    t.recall = users_t ? recall_t[q] / static_cast<double>(users_t) : 0.0;
    t.ndcg = users_t ? ndcg_t[q] / static_cast<double>(users_t) : 0.0;
    out.push_back(o);
    out.push_back(t);
  }
  return out;
}

std::vector<MetricsReport> evaluate(const EmbeddingState& state, const BipartiteGraph& graph,
                                    const EvalTarget& target, const PopularityPartition& partition,
                                    std::span<const std::size_t> ks) {
  if (!state.forwarded()) throw Error("evaluate: forward has not run");
  return evaluate([&](Index u) { return score_all(state, u); }, graph, target, partition, ks);
}

}  // namespace popgcn
