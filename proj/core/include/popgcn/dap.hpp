#pragma once

#include "popgcn/graph.hpp"
#include "popgcn/kmeans.hpp"
#include "popgcn/model.hpp"
#include "popgcn/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace popgcn {

enum class Pooling { mean, degree_weighted };
enum class Similarity { cosine, dot };
enum class Neighborhood { cluster, one_hop };

std::string to_string(Pooling value);
std::string to_string(Similarity value);
std::string to_string(Neighborhood value);
Pooling parse_pooling(const std::string& text);
Similarity parse_similarity(const std::string& text);
Neighborhood parse_neighborhood(const std::string& text);

/// Inference-time popularity debiasing settings.
struct DapConfig {
  /// Weight of the bias pulled in from higher-degree peers.
  double alpha = 0.0;
  /// Weight of the bias pulled in from lower-degree peers.
  double beta = 0.0;
  Index clusters = 10;
  Pooling pooling = Pooling::mean;
  Similarity similarity = Similarity::cosine;
  Neighborhood neighborhood = Neighborhood::cluster;
  /// false replaces the similarity factor with 1.
  bool use_similarity = true;
  /// Clamp negative similarities at zero. Off by default.
  bool clamp_negative_similarity = false;
  std::uint64_t seed = 2023;
  Index kmeans_max_iters = 100;
  double kmeans_tol = 1e-8;

  void validate() const;
};

/// Named ablations: dap-kh, dap-kl, dap-nh, dap-nl, dap-m. Applies the
/// structural switches to `base` and zeroes the weight the variant drops.
DapConfig apply_variant(DapConfig base, const std::string& variant);

/// Strictly higher- and strictly lower-degree peers of one node.
struct PeerSets {
  std::vector<Index> higher;
  std::vector<Index> lower;
};

/// Peers of node v among the nodes sharing its cluster (v itself and
/// equal-degree nodes belong to neither set).
PeerSets peer_sets(std::span<const Index> assignment, std::span<const Index> degrees, Index v);

/// Peers of node v among its one-hop graph neighbors.
PeerSets one_hop_peer_sets(const BipartiteGraph& graph, std::span<const Index> degrees, Index v);

/// Mean (or degree-weighted mean) of the member rows, L2-normalized.
/// Empty sets and zero-norm pools give the zero vector.
RowVector pooled_direction(const Matrix& embeddings, std::span<const Index> members, Pooling pooling,
                           std::span<const Index> degrees);

/// b = alpha M(e, th) th + beta M(e, tl) tl.
RowVector estimate_bias(const RowVector& embedding, const RowVector& theta_higher, const RowVector& theta_lower,
                        const DapConfig& config);

/// Similarity factor M(e, theta) under the config (1 when similarity is off).
double similarity_factor(const RowVector& embedding, const RowVector& theta, const DapConfig& config);

/// Bias vectors for every node of one layer: cluster (or one-hop peers), pool,
/// estimate. `clusters_out` receives the clustering when one was run.
Matrix layer_bias(const Matrix& layer, const BipartiteGraph& graph, std::span<const Index> degrees,
                  const DapConfig& config, Index layer_index, ClusterAssignment* clusters_out = nullptr);

/// Layer-by-layer revision: E^(l) = propagate(revised E^(l-1)), then
/// revised E^(l) = E^(l) - b^(l); layer 0 is never revised. The revised layers
/// are combined exactly like the plain forward. KMeans at layer l is seeded
/// with config.seed + l.
EmbeddingState debiased_forward(const EmbeddingState& state, const BipartiteGraph& graph, const DapConfig& config,
                                 std::vector<ClusterAssignment>* clusters_out = nullptr);

/// CSV "layer,node,cluster" for every layer's assignment.
void write_cluster_assignments(const std::string& path, std::span<const ClusterAssignment> clusters);

}  // namespace popgcn
