#include "popgcn/training.hpp"

#include "popgcn/util.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace popgcn {
namespace {

double clamp_score(double x) { return std::clamp(x, -kScoreClamp, kScoreClamp); }

// ln(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

std::mt19937_64 epoch_rng(std::uint64_t seed, Index epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  return std::mt19937_64(seq);
}

}  // namespace

std::string to_string(LossKind kind) { return kind == LossKind::bce ? "bce" : "bpr"; }

LossKind parse_loss_kind(const std::string& text) {
  if (text == "bce") return LossKind::bce;
  if (text == "bpr") return LossKind::bpr;
  throw Error("unknown loss '" + text + "' (expected bce or bpr)");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("train config: batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw Error("train config: learning_rate must be finite and >= 0");
  if (negatives_per_positive < 1) throw Error("train config: negatives_per_positive must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error("train config: Adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw Error("train config: adam_eps must be > 0");
  if (!(l2_reg >= 0.0)) throw Error("train config: l2_reg must be >= 0");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double bce_loss(double y_hat, int y) {
  const double x = clamp_score(y_hat);
  return y == 1 ? softplus(-x) : softplus(x);
}

double bce_loss_derivative(double y_hat, int y) {
  const double x = clamp_score(y_hat);
  return y == 1 ? sigmoid(x) - 1.0 : sigmoid(x);
}

double bpr_loss(double y_hat_pos, double y_hat_neg) { return softplus(-clamp_score(y_hat_pos - y_hat_neg)); }

double bpr_loss_derivative(double y_hat_pos, double y_hat_neg) {
  return sigmoid(clamp_score(y_hat_pos - y_hat_neg)) - 1.0;
}

Matrix backpropagate(const BipartiteGraph& graph, const Matrix& grad_combined, Index num_layers) {
  Matrix total = grad_combined;
  Matrix acc = grad_combined;
  for (Index l = 0; l < num_layers; ++l) {
    acc = propagate(graph, acc);
    total += acc;
  }
  total /= static_cast<double>(num_layers + 1);
  return total;
}

InteractionGradient bce_grad_wrt_embeddings(const EmbeddingState& state, const BipartiteGraph& graph, Index user,
                                            Index item, int y) {
  if (!state.forwarded()) throw Error("bce_grad_wrt_embeddings: forward has not run");
  const auto u = state.user_row(user);
  const auto i = state.item_row(item);
  const double g = bce_loss_derivative(u.dot(i), y);
  Matrix grad = Matrix::Zero(state.num_nodes(), state.dim());
  grad.row(user) += g * i;
  grad.row(state.num_users + item) += g * u;
  return {backpropagate(graph, grad, state.num_layers), user, state.num_users + item};
}

std::vector<Index> sample_negatives(const BipartiteGraph& graph, Index user, std::size_t k, std::mt19937_64& rng) {
  const Index n = graph.num_items();
  if (graph.user_degree(user) >= n) {
    throw Error("sample_negatives: user " + std::to_string(user) + " has interacted with every item");
  }
  std::vector<Index> out;
  out.reserve(k);
  while (out.size() < k) {
    const auto candidate = static_cast<Index>(uniform_below(rng, n));
    if (!graph.has_edge(user, candidate)) out.push_back(candidate);
  }
  return out;
}

BatchObjective batch_objective(const EmbeddingState& state, const BipartiteGraph& graph,
                               std::span<const TrainSample> batch, const TrainConfig& config) {
  if (!state.forwarded()) throw Error("batch_objective: forward has not run");
  BatchObjective out;
  out.grad = Matrix::Zero(state.num_nodes(), state.dim());
  if (batch.empty()) return out;

  const double scale = 1.0 / static_cast<double>(batch.size());
  const Index m = state.num_users;
  Matrix grad_combined = Matrix::Zero(state.num_nodes(), state.dim());
  double loss = 0.0;
  double reg = 0.0;
  auto add_reg = [&](Index node) {
    reg += state.layer0.row(node).squaredNorm();
    out.grad.row(node) += (config.l2_reg * scale) * state.layer0.row(node);
  };

  for (const auto& s : batch) {
    const auto eu = state.combined.row(s.user);
    const auto ei = state.combined.row(m + s.positive_item);
    const double pos = eu.dot(ei);
    if (config.loss == LossKind::bce) {
      loss += bce_loss(pos, 1);
      const double g = bce_loss_derivative(pos, 1) * scale;
      grad_combined.row(s.user) += g * ei;
      grad_combined.row(m + s.positive_item) += g * eu;
    }
    for (Index j : s.negative_items) {
      const auto ej = state.combined.row(m + j);
      const double neg = eu.dot(ej);
      if (config.loss == LossKind::bce) {
        loss += bce_loss(neg, 0);
        const double g = bce_loss_derivative(neg, 0) * scale;
        grad_combined.row(s.user) += g * ej;
        grad_combined.row(m + j) += g * eu;
      } else {
        loss += bpr_loss(pos, neg);
        const double g = bpr_loss_derivative(pos, neg) * scale;
        grad_combined.row(s.user) += g * (ei - ej);
        grad_combined.row(m + s.positive_item) += g * eu;
        grad_combined.row(m + j) -= g * eu;
      }
    }
    add_reg(s.user);
    add_reg(m + s.positive_item);
    for (Index j : s.negative_items) add_reg(m + j);
  }
  out.loss = loss * scale + 0.5 * config.l2_reg * reg * scale;
  out.grad += backpropagate(graph, grad_combined, state.num_layers);
  return out;
}

double batch_loss(const EmbeddingState& state, const BipartiteGraph& graph, std::span<const TrainSample> batch,
                  const TrainConfig& config) {
  EmbeddingState copy = state;
  forward(copy, graph);
  return batch_objective(copy, graph, batch, config).loss;
}

void AdamOptimizer::step(Matrix& params, const Matrix& grad) {
  if (m_.rows() != params.rows() || m_.cols() != params.cols()) {
    m_ = Matrix::Zero(params.rows(), params.cols());
    v_ = Matrix::Zero(params.rows(), params.cols());
    t_ = 0;
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

void AdamOptimizer::restore(std::uint64_t steps, Matrix m, Matrix v) {
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

void train(EmbeddingState& state, const BipartiteGraph& graph, std::span<const Interaction> train_data,
           const TrainConfig& config, TrainProgress& progress) {
  config.validate();
  // Moments carry over from a resumed run; hyper-parameters come from config.
  AdamOptimizer optimizer(config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps);
  if (progress.optimizer.steps() > 0) {
    optimizer.restore(progress.optimizer.steps(), progress.optimizer.first_moment(), progress.optimizer.second_moment());
  }

  std::vector<Interaction> order(train_data.begin(), train_data.end());
  std::vector<TrainSample> batch;
  for (Index e = 0; e < config.epochs; ++e) {
    const Index epoch = progress.epochs_done;
    auto rng = epoch_rng(config.seed, epoch);
    std::sort(order.begin(), order.end());
    shuffle(order, rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0, batch_id = 0; start < order.size(); start += config.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t r = start; r < end; ++r) {
        batch.push_back({order[r].user, order[r].item,
                         sample_negatives(graph, order[r].user, config.negatives_per_positive, rng)});
      }
      forward(state, graph);
      auto objective = batch_objective(state, graph, batch, config);
      if (!std::isfinite(objective.loss) || !objective.grad.allFinite()) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch + 1 << ", batch " << batch_id
            << " (learning_rate " << config.learning_rate << ")";
        throw Error(msg.str());
      }
      epoch_loss += objective.loss * static_cast<double>(end - start);
      optimizer.step(state.layer0, objective.grad);
    }
    progress.loss_curve.push_back(order.empty() ? 0.0 : epoch_loss / static_cast<double>(order.size()));
    ++progress.epochs_done;
  }
  progress.optimizer = optimizer;
  forward(state, graph);
}

void write_loss_curve(const std::string& path, std::span<const double> curve, Index first_epoch) {
  std::string text = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e) {
    text += std::to_string(first_epoch + e) + "," + format_double(curve[e]) + "\n";
  }
  write_text_file(path, text);
}

}  // namespace popgcn
