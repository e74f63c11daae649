#include "popgcn/dap.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace popgcn;

namespace {

struct Fixture {
  BipartiteGraph graph;
  EmbeddingState state;
};

Fixture random_fixture(std::uint64_t seed, Index m = 12, Index n = 15, Index layers = 2) {
  std::mt19937_64 rng(seed);
  auto edges = oracle::random_edges(m, n, 0.3, rng);
  Fixture f;
  f.graph = BipartiteGraph::build(edges, m, n);
  f.state = init_embeddings(m, n, {.layers = layers, .dim = 4, .init_scale = 1.0, .seed = seed});
  forward(f.state, f.graph);
  return f;
}

}  // namespace

TEST_CASE("a singleton cluster has no peers") {
  const std::vector<Index> assignment{0, 1, 1};
  const std::vector<Index> degrees{4, 2, 7};
  const auto peers = peer_sets(assignment, degrees, 0);
  CHECK(peers.higher.empty());
  CHECK(peers.lower.empty());
}

TEST_CASE("equal-degree peers belong to neither set") {
  // nodes: a=0 (d5), b=1 (d3), v=2 (d3), c=3 (d1), plus an outsider
  const std::vector<Index> assignment{0, 0, 0, 0, 1};
  const std::vector<Index> degrees{5, 3, 3, 1, 9};
  const auto peers = peer_sets(assignment, degrees, 2);
  CHECK(peers.higher == std::vector<Index>{0});
  CHECK(peers.lower == std::vector<Index>{3});
}

TEST_CASE("peer sets match an exhaustive comparison") {
  std::mt19937_64 rng(3);
  std::vector<Index> assignment(30);
  std::vector<Index> degrees(30);
  for (Index v = 0; v < 30; ++v) {
    assignment[v] = static_cast<Index>(rng() % 3);
    degrees[v] = static_cast<Index>(rng() % 6);
  }
  for (Index v = 0; v < 30; ++v) {
    const auto peers = peer_sets(assignment, degrees, v);
    std::vector<Index> higher;
    std::vector<Index> lower;
    for (Index j = 0; j < 30; ++j) {
      if (j == v || assignment[j] != assignment[v]) continue;
      if (degrees[j] > degrees[v]) higher.push_back(j);
      if (degrees[j] < degrees[v]) lower.push_back(j);
    }
    CHECK(peers.higher == higher);
    CHECK(peers.lower == lower);
  }
}

TEST_CASE("pooled direction normalizes a single member") {
  Matrix e(1, 2);
  e << 3, 4;
  const std::vector<Index> members{0};
  const std::vector<Index> degrees{1};
  const RowVector d = pooled_direction(e, members, Pooling::mean, degrees);
  CHECK(d(0) == doctest::Approx(0.6));
  CHECK(d(1) == doctest::Approx(0.8));
}

TEST_CASE("cancelling members pool to zero") {
  Matrix e(2, 2);
  e << 1, 0, -1, 0;
  const std::vector<Index> members{0, 1};
  const std::vector<Index> degrees{1, 1};
  CHECK(pooled_direction(e, members, Pooling::mean, degrees).norm() == 0.0);
  CHECK(pooled_direction(e, {}, Pooling::mean, degrees).norm() == 0.0);
}

TEST_CASE("degree-weighted pooling") {
  Matrix e(2, 2);
  e << 1, 0, 0, 1;
  const std::vector<Index> members{0, 1};
  const std::vector<Index> degrees{3, 1};
  const RowVector d = pooled_direction(e, members, Pooling::degree_weighted, degrees);
  CHECK(d(0) == doctest::Approx(0.9487).epsilon(1e-4));
  CHECK(d(1) == doctest::Approx(0.3162).epsilon(1e-4));
}

TEST_CASE("bias estimate examples") {
  DapConfig config;
  RowVector e(2);
  e << 1, 0;
  RowVector th(2);
  th << 0.6, 0.8;
  RowVector tl(2);
  tl << 0, 1;

  CHECK(estimate_bias(e, th, tl, config).norm() == 0.0);

  config.alpha = 0.5;
  config.beta = 0.3;
  const RowVector b = estimate_bias(e, th, tl, config);
  CHECK(b(0) == doctest::Approx(0.18));
  CHECK(b(1) == doctest::Approx(0.24));

  config.beta = 0.0;
  const RowVector parallel = estimate_bias(th, th, tl, config);
  CHECK((parallel - 0.5 * th).norm() < 1e-12);
}

TEST_CASE("similarity switches") {
  RowVector e(2);
  e << -2, 0;
  RowVector t(2);
  t << 1, 0;
  DapConfig config;
  CHECK(similarity_factor(e, t, config) == doctest::Approx(-1.0));
  config.similarity = Similarity::dot;
  CHECK(similarity_factor(e, t, config) == doctest::Approx(-2.0));
  config.clamp_negative_similarity = true;
  CHECK(similarity_factor(e, t, config) == 0.0);
  config.use_similarity = false;
  CHECK(similarity_factor(e, t, config) == 1.0);
}

TEST_CASE("zero weights reproduce the plain forward") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto f = random_fixture(seed);
    DapConfig config;
    config.clusters = 3;
    const auto revised = debiased_forward(f.state, f.graph, config);
    CHECK(oracle::max_abs_diff(revised.combined, f.state.combined) < 1e-12);
  }
}

TEST_CASE("the highest-degree node only takes the lower-peer term under one cluster") {
  auto f = random_fixture(4, 10, 12, 1);
  const auto degrees = f.graph.node_degrees();
  Index top = 0;
  for (Index v = 1; v < degrees.size(); ++v) {
    if (degrees[v] > degrees[top]) top = v;
  }
  bool unique = true;
  for (Index v = 0; v < degrees.size(); ++v) unique &= v == top || degrees[v] < degrees[top];
  REQUIRE(unique);

  const Matrix layer = propagate(f.graph, f.state.layer0);
  DapConfig only_higher;
  only_higher.alpha = 1.0;
  only_higher.clusters = 1;
  CHECK(layer_bias(layer, f.graph, degrees, only_higher, 1).row(top).norm() == 0.0);

  DapConfig only_lower = only_higher;
  only_lower.alpha = 0.0;
  only_lower.beta = 1.0;
  const Matrix bias = layer_bias(layer, f.graph, degrees, only_lower, 1);
  std::vector<Index> lower;
  for (Index v = 0; v < degrees.size(); ++v) {
    if (degrees[v] < degrees[top]) lower.push_back(v);
  }
  const RowVector tl = pooled_direction(layer, lower, Pooling::mean, degrees);
  const RowVector expected = estimate_bias(layer.row(top), RowVector::Zero(layer.cols()), tl, only_lower);
  CHECK((bias.row(top) - expected).norm() < 1e-12);
}

TEST_CASE("layer bias matches a per-node peer scan") {
  auto f = random_fixture(5, 14, 16, 1);
  const auto degrees = f.graph.node_degrees();
  const Matrix layer = propagate(f.graph, f.state.layer0);
  for (Pooling pooling : {Pooling::mean, Pooling::degree_weighted}) {
    DapConfig config;
    config.alpha = 0.7;
    config.beta = 0.4;
    config.clusters = 4;
    config.pooling = pooling;
    ClusterAssignment clusters;
    const Matrix bias = layer_bias(layer, f.graph, degrees, config, 1, &clusters);
    for (Index v = 0; v < layer.rows(); ++v) {
      const auto peers = peer_sets(clusters.assignment, degrees, v);
      const RowVector th = pooled_direction(layer, peers.higher, pooling, degrees);
      const RowVector tl = pooled_direction(layer, peers.lower, pooling, degrees);
      CHECK((bias.row(v) - estimate_bias(layer.row(v), th, tl, config)).norm() < 1e-12);
    }
  }
}

TEST_CASE("one-hop peers come from graph neighbors") {
  const std::vector<Interaction> edges{{0, 0}, {0, 1}, {1, 0}, {2, 0}};
  const auto g = BipartiteGraph::build(edges, 3, 2);
  const auto degrees = g.node_degrees();  // users 2,1,1; items 3,1
  const auto peers = one_hop_peer_sets(g, degrees, 0);
  CHECK(peers.higher == std::vector<Index>{3});
  CHECK(peers.lower == std::vector<Index>{4});
}

TEST_CASE("variants") {
  DapConfig base;
  base.alpha = 0.4;
  base.beta = 0.2;
  CHECK(apply_variant(base, "dap-kh").beta == 0.0);
  CHECK(apply_variant(base, "dap-kl").alpha == 0.0);
  CHECK(apply_variant(base, "dap-nh").neighborhood == Neighborhood::one_hop);
  CHECK(apply_variant(base, "dap-nl").alpha == 0.0);
  CHECK_FALSE(apply_variant(base, "dap-m").use_similarity);
  CHECK_THROWS_AS(apply_variant(base, "dap-x"), Error);
}

TEST_CASE("weights outside the searched range are rejected") {
  auto f = random_fixture(6);
  DapConfig config;
  config.alpha = 2.5;
  CHECK_THROWS_AS(debiased_forward(f.state, f.graph, config), Error);
}

TEST_CASE("debiasing keeps layer0 and is deterministic") {
  auto f = random_fixture(7, 12, 15, 3);
  DapConfig config;
  config.alpha = 0.3;
  config.beta = 0.6;
  config.clusters = 3;
  std::vector<ClusterAssignment> clusters;
  const auto a = debiased_forward(f.state, f.graph, config, &clusters);
  const auto b = debiased_forward(f.state, f.graph, config);
  CHECK(a.layer0 == f.state.layer0);
  CHECK(a.combined == b.combined);
  CHECK(clusters.size() == 3);
  CHECK(oracle::max_abs_diff(a.combined, f.state.combined) > 1e-6);
}
