#pragma once

#include "popgcn/graph.hpp"
#include "popgcn/model.hpp"
#include "popgcn/types.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace popgcn {

enum class LossKind { bce, bpr };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& text);

struct TrainConfig {
  LossKind loss = LossKind::bce;
  Index epochs = 100;
  Index batch_size = 4096;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double l2_reg = 1e-4;
  Index negatives_per_positive = 1;
  std::uint64_t seed = 2023;

  /// Throws Error when an invariant is violated.
  void validate() const;
};

struct TrainSample {
  Index user = 0;
  Index positive_item = 0;
  std::vector<Index> negative_items;
};

/// Scores beyond this magnitude are clamped before entering the losses.
inline constexpr double kScoreClamp = 40.0;

double sigmoid(double x);

/// -[y ln s(y_hat) + (1-y) ln(1 - s(y_hat))] in softplus form.
double bce_loss(double y_hat, int y);

/// d bce_loss / d y_hat.
double bce_loss_derivative(double y_hat, int y);

/// -ln s(pos - neg).
double bpr_loss(double y_hat_pos, double y_hat_neg);

/// d bpr_loss / d (pos - neg).
double bpr_loss_derivative(double y_hat_pos, double y_hat_neg);

/// Gradient of one interaction's BCE term with respect to the layer-0 table,
/// back through the layer mean and every propagation step.
struct InteractionGradient {
  Matrix layer0;
  Index user_node = 0;
  Index item_node = 0;

  auto wrt_user() const { return layer0.row(user_node); }
  auto wrt_item() const { return layer0.row(item_node); }
};

/// `state` must have been forwarded on `graph`.
InteractionGradient bce_grad_wrt_embeddings(const EmbeddingState& state, const BipartiteGraph& graph, Index user,
                                            Index item, int y);

/// Maps a gradient on the combined table to one on layer0: (1/(L+1)) sum_l A^l G.
/// The normalized adjacency is symmetric, so A^T = A.
Matrix backpropagate(const BipartiteGraph& graph, const Matrix& grad_combined, Index num_layers);

/// k uniform draws (with replacement) from items the user has not interacted with.
std::vector<Index> sample_negatives(const BipartiteGraph& graph, Index user, std::size_t k, std::mt19937_64& rng);

struct BatchObjective {
  double loss = 0.0;  // mean over samples, including the L2 term
  Matrix grad;        // with respect to layer0
};

/// Batch loss and its layer-0 gradient. `state` must be forwarded.
BatchObjective batch_objective(const EmbeddingState& state, const BipartiteGraph& graph,
                               std::span<const TrainSample> batch, const TrainConfig& config);

/// Loss only; runs its own forward on a copy of `state`. Used by gradient checks.
double batch_loss(const EmbeddingState& state, const BipartiteGraph& graph, std::span<const TrainSample> batch,
                  const TrainConfig& config);

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Matrix& params, const Matrix& grad);

  std::uint64_t steps() const { return t_; }
  const Matrix& first_moment() const { return m_; }
  const Matrix& second_moment() const { return v_; }
  void restore(std::uint64_t steps, Matrix m, Matrix v);

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::uint64_t t_ = 0;
  Matrix m_;
  Matrix v_;
};

/// Everything needed to continue a run where it stopped.
struct TrainProgress {
  Index epochs_done = 0;
  std::vector<double> loss_curve;  // mean loss per completed epoch
  AdamOptimizer optimizer;
};

/// Runs config.epochs further epochs of Adam on layer0, appending to progress.
/// The RNG for epoch e is derived from (config.seed, e), so a resumed run draws
/// the same batches as an uninterrupted one. Leaves `state` forwarded.
/// Throws Error on a non-finite loss.
void train(EmbeddingState& state, const BipartiteGraph& graph, std::span<const Interaction> train_data,
           const TrainConfig& config, TrainProgress& progress);

void write_loss_curve(const std::string& path, std::span<const double> curve, Index first_epoch = 1);

}  // namespace popgcn
