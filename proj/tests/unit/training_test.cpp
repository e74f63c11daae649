#include "popgcn/training.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace popgcn;

namespace {

// Every user keeps at least one item unseen so negatives exist.
std::vector<Interaction> tiny_dataset() {
  return {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}, {2, 3}, {3, 3}, {3, 4}, {4, 4}, {4, 0}};
}

struct GradCase {
  BipartiteGraph graph;
  EmbeddingState state;
  std::vector<TrainSample> batch;
  TrainConfig config;
};

GradCase random_case(std::mt19937_64& rng, Index layers, LossKind loss) {
  GradCase c;
  const Index m = 2 + static_cast<Index>(rng() % 4);
  const Index n = 3 + static_cast<Index>(rng() % 5);
  const Index d = 1 + static_cast<Index>(rng() % 8);
  auto edges = oracle::random_edges(m, n, 0.4, rng);
  for (Index u = 0; u < m; ++u) edges.push_back({u, u % n});
  c.graph = BipartiteGraph::build(edges, m, n);
  c.state = init_embeddings(m, n, {.layers = layers, .dim = d, .init_scale = 0.5, .seed = rng()});
  c.config.loss = loss;
  c.config.l2_reg = 0.01;
  c.config.negatives_per_positive = 2;
  for (Index u = 0; u < m; ++u) {
    for (Index i : c.graph.user_neighbors(u)) {
      if (c.graph.user_degree(u) >= n) continue;
      c.batch.push_back({u, i, sample_negatives(c.graph, u, 2, rng)});
    }
  }
  forward(c.state, c.graph);
  return c;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST_CASE("BCE loss values") {
  CHECK(bce_loss(0.0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_loss(0.0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_loss(5.0, 1) == doctest::Approx(0.0067153).epsilon(1e-5));
  CHECK(std::isfinite(bce_loss(1e6, 0)));
  CHECK(bce_loss(1e6, 0) >= 0.0);
}

TEST_CASE("BPR loss values") {
  CHECK(bpr_loss(1.5, 1.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bpr_loss(7.0, 2.0) == doctest::Approx(0.0067153).epsilon(1e-5));
  CHECK(bpr_loss(100.0, -100.0) < 1e-15);
}

TEST_CASE("sigmoid stays strictly inside (0, 1) for moderate inputs") {
  for (double x : {-30.0, -5.0, 0.0, 5.0, 30.0}) {
    CHECK(sigmoid(x) > 0.0);
    CHECK(sigmoid(x) < 1.0);
  }
}

TEST_CASE("zero layers: user gradient is -lambda e_i") {
  const std::vector<Interaction> edges{{0, 0}, {0, 1}, {1, 1}};
  const auto g = BipartiteGraph::build(edges, 2, 2);
  auto s = init_embeddings(2, 2, {.layers = 0, .dim = 3, .init_scale = 0.7, .seed = 5});
  forward(s, g);
  const auto grad = bce_grad_wrt_embeddings(s, g, 0, 1, 1);
  const double lambda = 1.0 - sigmoid(s.user_row(0).dot(s.item_row(1)));
  CHECK((grad.wrt_user() + lambda * s.item_row(1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((grad.wrt_item() + lambda * s.user_row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient vanishes as a positive saturates") {
  const std::vector<Interaction> edges{{0, 0}};
  const auto g = BipartiteGraph::build(edges, 1, 1);
  auto s = init_embeddings(1, 1, {.layers = 1, .dim = 2});
  s.layer0 << 6, 0, 6, 0;
  forward(s, g);
  CHECK(bce_grad_wrt_embeddings(s, g, 0, 0, 1).layer0.norm() < 1e-10);
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(77);
  int configurations = 0;
  for (Index layers : {0u, 1u, 2u}) {
    for (LossKind loss : {LossKind::bce, LossKind::bpr}) {
      for (int rep = 0; rep < 4; ++rep, ++configurations) {
        auto c = random_case(rng, layers, loss);
        const Matrix analytic = batch_objective(c.state, c.graph, c.batch, c.config).grad;
        const double h = 1e-4;
        double worst = 0.0;
        for (Eigen::Index r = 0; r < c.state.layer0.rows(); ++r) {
          for (Eigen::Index k = 0; k < c.state.layer0.cols(); ++k) {
            EmbeddingState plus = c.state;
            EmbeddingState minus = c.state;
            plus.layer0(r, k) += h;
            minus.layer0(r, k) -= h;
            const double fd =
                (batch_loss(plus, c.graph, c.batch, c.config) - batch_loss(minus, c.graph, c.batch, c.config)) /
                (2 * h);
            worst = std::max(worst, relative_error(fd, analytic(r, k)));
          }
        }
        CHECK(worst < 1e-4);
      }
    }
  }
  CHECK(configurations >= 20);
}

TEST_CASE("per-interaction BCE gradient matches central differences") {
  std::mt19937_64 rng(78);
  for (Index layers : {0u, 1u, 2u}) {
    auto c = random_case(rng, layers, LossKind::bce);
    const Index u = 0;
    const Index i = c.graph.user_neighbors(0).front();
    const Matrix analytic = bce_grad_wrt_embeddings(c.state, c.graph, u, i, 1).layer0;
    for (Eigen::Index r = 0; r < c.state.layer0.rows(); ++r) {
      for (Eigen::Index k = 0; k < c.state.layer0.cols(); ++k) {
        auto eval = [&](double delta) {
          EmbeddingState s = c.state;
          s.layer0(r, k) += delta;
          forward(s, c.graph);
          return bce_loss(s.user_row(u).dot(s.item_row(i)), 1);
        };
        const double fd = (eval(1e-4) - eval(-1e-4)) / 2e-4;
        CHECK(relative_error(fd, analytic(r, k)) < 1e-4);
      }
    }
  }
}

TEST_CASE("negative sampling with a single eligible item") {
  const std::vector<Interaction> edges{{0, 0}, {0, 1}};
  const auto g = BipartiteGraph::build(edges, 1, 3);
  std::mt19937_64 rng(1);
  CHECK(sample_negatives(g, 0, 1, rng) == std::vector<Index>{2});
}

TEST_CASE("negative sampling fails when nothing is eligible") {
  const std::vector<Interaction> edges{{0, 0}, {0, 1}};
  const auto g = BipartiteGraph::build(edges, 1, 2);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_negatives(g, 0, 1, rng), Error);
}

TEST_CASE("negative sampling is reproducible and uniform") {
  std::vector<Interaction> edges;
  for (Index i = 0; i < 10; ++i) edges.push_back({0, i * 10});
  const auto g = BipartiteGraph::build(edges, 1, 100);

  std::mt19937_64 a(99);
  std::mt19937_64 b(99);
  CHECK(sample_negatives(g, 0, 50, a) == sample_negatives(g, 0, 50, b));

  std::mt19937_64 rng(123);
  const auto draws = sample_negatives(g, 0, 10000, rng);
  std::map<Index, int> counts;
  for (Index i : draws) {
    CHECK_FALSE(g.has_edge(0, i));
    ++counts[i];
  }
  CHECK(counts.size() == 90);
  const double p = 1.0 / 90.0;
  const double sigma = std::sqrt(10000 * p * (1 - p));
  for (const auto& [item, count] : counts) CHECK(std::abs(count - 10000 * p) <= 3 * sigma + 1e-9);
}

TEST_CASE("Adam with a zero gradient leaves parameters unchanged") {
  AdamOptimizer adam(0.1, 0.9, 0.999, 1e-8);
  Matrix p = Matrix::Constant(3, 2, 1.5);
  const Matrix before = p;
  for (int i = 0; i < 5; ++i) adam.step(p, Matrix::Zero(3, 2));
  CHECK(p == before);
}

TEST_CASE("zero learning rate is a no-op") {
  const auto data = tiny_dataset();
  const auto g = BipartiteGraph::build(data, 5, 5);
  auto s = init_embeddings(5, 5, {.layers = 2, .dim = 4});
  const Matrix before = s.layer0;
  TrainConfig config;
  config.learning_rate = 0.0;
  config.epochs = 5;
  TrainProgress progress;
  train(s, g, data, config, progress);
  CHECK(s.layer0 == before);
  CHECK(progress.epochs_done == 5);
}

TEST_CASE("training on a tiny dataset descends") {
  const auto data = tiny_dataset();
  const auto g = BipartiteGraph::build(data, 5, 5);
  auto s = init_embeddings(5, 5, {.layers = 2, .dim = 8});
  TrainConfig config;
  config.epochs = 200;
  config.learning_rate = 0.01;
  TrainProgress progress;
  train(s, g, data, config, progress);
  REQUIRE(progress.loss_curve.size() == 200);
  CHECK(progress.loss_curve.back() < progress.loss_curve.front());
}

TEST_CASE("a memorizable dataset is fit below 0.1") {
  const auto data = tiny_dataset();
  const auto g = BipartiteGraph::build(data, 5, 5);
  auto s = init_embeddings(5, 5, {.layers = 1, .dim = 8});
  TrainConfig config;
  config.epochs = 1000;
  config.learning_rate = 0.05;
  config.l2_reg = 0.0;
  TrainProgress progress;
  train(s, g, data, config, progress);
  CHECK(progress.loss_curve.back() < 0.1);
}

TEST_CASE("resuming reproduces an uninterrupted run") {
  const auto data = tiny_dataset();
  const auto g = BipartiteGraph::build(data, 5, 5);
  TrainConfig config;
  config.learning_rate = 0.01;
  config.batch_size = 4;

  auto whole = init_embeddings(5, 5, {.layers = 2, .dim = 4});
  auto split = whole;
  config.epochs = 10;
  TrainProgress p_whole;
  train(whole, g, data, config, p_whole);

  config.epochs = 4;
  TrainProgress p_split;
  train(split, g, data, config, p_split);
  config.epochs = 6;
  train(split, g, data, config, p_split);

  CHECK(split.layer0 == whole.layer0);
  CHECK(p_split.loss_curve == p_whole.loss_curve);
}

TEST_CASE("default configuration") {
  const TrainConfig config;
  CHECK(config.batch_size == 4096);
  CHECK(config.loss == LossKind::bce);
  CHECK(config.negatives_per_positive == 1);
  CHECK(parse_loss_kind("bpr") == LossKind::bpr);
  CHECK_THROWS_AS(parse_loss_kind("mse"), Error);
}

TEST_CASE("divergence is reported") {
  const auto data = tiny_dataset();
  const auto g = BipartiteGraph::build(data, 5, 5);
  auto s = init_embeddings(5, 5, {.layers = 1, .dim = 4});
  s.layer0(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig config;
  config.epochs = 1;
  TrainProgress progress;
  CHECK_THROWS_WITH_AS(train(s, g, data, config, progress), doctest::Contains("learning_rate"), Error);
}
