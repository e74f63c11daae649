#include "popgcn/metrics.hpp"
#include "popgcn/synthetic.hpp"
#include "popgcn/training.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace popgcn;

namespace {

std::vector<Index> random_subset(std::mt19937_64& rng, Index universe, Index size) {
  std::vector<Index> all(universe);
  for (Index i = 0; i < universe; ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(size);
  return all;
}

// Straightforward evaluator: full sort per user, set lookups, plain sums.
struct Reference {
  double recall = 0, ndcg = 0, tail_ratio = 0;
};

Reference reference_evaluate(const EmbeddingState& s, const BipartiteGraph& g, std::span<const Interaction> relevant_pairs,
                             std::span<const Interaction> extra, const std::vector<bool>& is_tail, std::size_t k) {
  std::vector<std::set<Index>> relevant(s.num_users), excluded(s.num_users);
  for (const auto& x : relevant_pairs) relevant[x.user].insert(x.item);
  for (const auto& x : extra) excluded[x.user].insert(x.item);
  Reference r;
  std::size_t users = 0, slots = 0, tail = 0;
  for (Index u = 0; u < s.num_users; ++u) {
    if (relevant[u].empty()) continue;
    std::vector<std::pair<double, Index>> ranked;
    for (Index i = 0; i < s.num_items; ++i) {
      if (g.has_edge(u, i) || excluded[u].count(i)) continue;
      double dot = 0;
      for (Index c = 0; c < s.dim(); ++c) dot += s.combined(u, c) * s.combined(s.num_users + i, c);
      ranked.push_back({-dot, i});
    }
    std::sort(ranked.begin(), ranked.end());
    const std::size_t n = std::min(k, ranked.size());
    double hits = 0, dcg = 0, idcg = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (relevant[u].count(ranked[p].second)) {
        hits += 1;
        dcg += 1.0 / std::log2(p + 2.0);
      }
      tail += is_tail[ranked[p].second];
    }
    for (std::size_t p = 0; p < std::min(k, relevant[u].size()); ++p) idcg += 1.0 / std::log2(p + 2.0);
    slots += n;
    r.recall += hits / relevant[u].size();
    r.ndcg += dcg / idcg;
    ++users;
  }
  r.recall /= users;
  r.ndcg /= users;
  r.tail_ratio = static_cast<double>(tail) / slots;
  return r;
}

}  // namespace

TEST_CASE("recall examples") {
  const std::vector<Index> relevant{3, 7};
  CHECK(recall_at_k(std::vector<Index>{3, 5}, relevant, 2) == 0.5);
  CHECK(recall_at_k(std::vector<Index>{7, 1, 3}, relevant, 3) == 1.0);
  CHECK(recall_at_k(std::vector<Index>{1, 2}, relevant, 2) == 0.0);
}

TEST_CASE("ndcg examples") {
  const std::vector<Index> one{4};
  CHECK(ndcg_at_k(std::vector<Index>{4, 1}, one, 2) == 1.0);
  CHECK(ndcg_at_k(std::vector<Index>{1, 4}, one, 2) == doctest::Approx(0.63093).epsilon(1e-5));
  CHECK(ndcg_at_k(std::vector<Index>{1, 2}, one, 2) == 0.0);
}

TEST_CASE("tail ratio examples") {
  std::vector<bool> is_tail(40, false);
  std::vector<Index> list(20);
  for (Index r = 0; r < 20; ++r) list[r] = r;
  for (Index t : {2u, 5u, 9u, 13u, 19u}) is_tail[t] = true;
  const std::vector<std::vector<Index>> lists{list};
  CHECK(tail_ratio_at_k(lists, is_tail, 20) == 0.25);
  CHECK(tail_ratio_at_k(lists, std::vector<bool>(40, false), 20) == 0.0);
}

TEST_CASE("metrics match brute force on random instances") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Index universe = 50;
    const std::size_t k = 1 + rng() % 30;
    auto relevant = random_subset(rng, universe, 1 + static_cast<Index>(rng() % 15));
    const auto topk = random_subset(rng, universe, 30);
    const std::set<Index> rel_set(relevant.begin(), relevant.end());
    std::sort(relevant.begin(), relevant.end());

    std::size_t hits = 0;
    double dcg = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      if (rel_set.count(topk[p])) {
        ++hits;
        dcg += 1.0 / std::log2(p + 2.0);
      }
    }
    double idcg = 0.0;
    for (std::size_t p = 0; p < std::min(k, relevant.size()); ++p) idcg += 1.0 / std::log2(p + 2.0);
    CHECK(recall_at_k(topk, relevant, k) == static_cast<double>(hits) / static_cast<double>(relevant.size()));
    CHECK(std::abs(ndcg_at_k(topk, relevant, k) - dcg / idcg) < 1e-12);

    std::vector<bool> is_tail(universe);
    for (Index i = 0; i < universe; ++i) is_tail[i] = rng() % 3 == 0;
    std::vector<std::vector<Index>> lists;
    std::size_t tail = 0, slots = 0;
    double macro = 0.0;
    for (int u = 0; u < 10; ++u) {
      lists.push_back(random_subset(rng, universe, 1 + static_cast<Index>(rng() % 40)));
      const std::size_t n = std::min(k, lists.back().size());
      std::size_t t = 0;
      for (std::size_t p = 0; p < n; ++p) t += is_tail[lists.back()[p]];
      tail += t;
      slots += n;
      macro += static_cast<double>(t) / n;
    }
    CHECK(tail_ratio_at_k(lists, is_tail, k) == static_cast<double>(tail) / static_cast<double>(slots));
    CHECK(std::abs(tail_ratio_macro_at_k(lists, is_tail, k) - macro / 10) < 1e-12);
  }
}

TEST_CASE("a perfect scorer recalls everything") {
  std::mt19937_64 rng(4);
  const Index m = 10, n = 40;
  const auto train = oracle::random_edges(m, n, 0.1, rng);
  const auto g = BipartiteGraph::build(train, m, n);
  std::vector<Interaction> test;
  for (const auto& x : oracle::random_edges(m, n, 0.1, rng)) {
    if (!g.has_edge(x.user, x.item)) test.push_back(x);
  }
  const auto relevant = group_by_user(test, m);
  const auto partition = partition_by_popularity(train, n);
  const UserScorer perfect = [&](Index u) {
    Vector s = Vector::Zero(n);
    for (Index i : relevant[u]) s(i) = 1.0;
    return s;
  };
  const std::vector<std::size_t> ks{20};
  const auto reports = evaluate(perfect, g, {test, filter_tail(test, partition), {}}, partition, ks);
  CHECK(reports[0].recall == 1.0);
  CHECK(reports[0].ndcg == 1.0);
  CHECK(reports[1].split == "tail");
}

TEST_CASE("evaluation matches a reference evaluator and is repeatable") {
  SyntheticSpec spec;
  spec.num_users = 30;
  spec.num_items = 80;
  spec.min_per_user = 5;
  spec.max_per_user = 20;
  const auto data = generate_interactions(spec);
  const auto splits = split(data, 30, 80, {}, 3);
  const auto g = BipartiteGraph::build(splits.train, 30, 80);
  auto state = init_embeddings(30, 80, {.layers = 2, .dim = 8});
  TrainConfig config;
  config.epochs = 5;
  config.learning_rate = 0.01;
  TrainProgress progress;
  train(state, g, splits.train, config, progress);

  const std::vector<std::size_t> ks{10, 20};
  const EvalTarget target{splits.test_overall, splits.test_tail, splits.validation};
  const auto a = evaluate(state, g, target, splits.partition, ks);
  const auto b = evaluate(state, g, target, splits.partition, ks);
  REQUIRE(a.size() == 4);
  for (std::size_t q = 0; q < ks.size(); ++q) {
    const auto ref = reference_evaluate(state, g, splits.test_overall, splits.validation, splits.partition.is_tail, ks[q]);
    const auto& overall = a[2 * q];
    CHECK(std::abs(overall.recall - ref.recall) < 1e-12);
    CHECK(std::abs(overall.ndcg - ref.ndcg) < 1e-12);
    CHECK(overall.tail_ratio == ref.tail_ratio);
    const auto tail_ref =
        reference_evaluate(state, g, splits.test_tail, splits.validation, splits.partition.is_tail, ks[q]);
    CHECK(std::abs(a[2 * q + 1].recall - tail_ref.recall) < 1e-12);
    CHECK(a[q].recall == b[q].recall);
    CHECK(a[q].ndcg == b[q].ndcg);
  }
}

TEST_CASE("permuting item ids permutes nothing in the metrics") {
  std::mt19937_64 rng(8);
  const std::vector<Index> relevant{2, 9, 14};
  auto topk = random_subset(rng, 20, 10);
  const double before = ndcg_at_k(topk, relevant, 10);
  // Relabel i -> 19 - i everywhere.
  std::vector<Index> rel2;
  for (Index i : relevant) rel2.push_back(19 - i);
  std::sort(rel2.begin(), rel2.end());
  for (auto& i : topk) i = 19 - i;
  CHECK(ndcg_at_k(topk, rel2, 10) == before);
}
