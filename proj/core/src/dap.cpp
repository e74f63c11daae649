#include "popgcn/dap.hpp"

#include "popgcn/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace popgcn {
namespace {

// Pools below this fraction of the members' mean norm count as cancelled out.
constexpr double kZeroNormRelative = 1e-12;

double member_weight(Pooling pooling, Index degree) {
  return pooling == Pooling::mean ? 1.0 : static_cast<double>(degree);
}

RowVector normalize_pool(const RowVector& weighted_sum, double weight_total, double weighted_norm_total) {
  if (weight_total <= 0.0) return RowVector::Zero(weighted_sum.size());
  const RowVector pooled = weighted_sum / weight_total;
  const double norm = pooled.norm();
  if (norm == 0.0 || norm <= kZeroNormRelative * (weighted_norm_total / weight_total)) {
    return RowVector::Zero(weighted_sum.size());
  }
  return pooled / norm;
}

// Accumulated pool over a contiguous run of members.
struct PoolSum {
  RowVector sum;
  double weight = 0.0;
  double norm_weight = 0.0;

  explicit PoolSum(Eigen::Index dim) : sum(RowVector::Zero(dim)) {}
};

}  // namespace

std::string to_string(Pooling value) { return value == Pooling::mean ? "mean" : "degree-weighted"; }
std::string to_string(Similarity value) { return value == Similarity::cosine ? "cosine" : "dot"; }
std::string to_string(Neighborhood value) { return value == Neighborhood::cluster ? "cluster" : "one-hop"; }

Pooling parse_pooling(const std::string& text) {
  if (text == "mean") return Pooling::mean;
  if (text == "degree-weighted" || text == "degree") return Pooling::degree_weighted;
  throw Error("unknown pooling '" + text + "' (expected mean or degree-weighted)");
}

Similarity parse_similarity(const std::string& text) {
  if (text == "cosine") return Similarity::cosine;
  if (text == "dot") return Similarity::dot;
  throw Error("unknown similarity '" + text + "' (expected cosine or dot)");
}

Neighborhood parse_neighborhood(const std::string& text) {
  if (text == "cluster") return Neighborhood::cluster;
  if (text == "one-hop" || text == "one_hop") return Neighborhood::one_hop;
  throw Error("unknown neighborhood '" + text + "' (expected cluster or one-hop)");
}

void DapConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 2.0)) throw Error("dap: alpha must be in [0, 2]");
  if (!(beta >= 0.0 && beta <= 2.0)) throw Error("dap: beta must be in [0, 2]");
  if (clusters < 1) throw Error("dap: cluster count must be >= 1");
}

DapConfig apply_variant(DapConfig base, const std::string& variant) {
  if (variant.empty() || variant == "dap") return base;
  if (variant == "dap-kh") {
    base.neighborhood = Neighborhood::cluster;
    base.beta = 0.0;
  } else if (variant == "dap-kl") {
    base.neighborhood = Neighborhood::cluster;
    base.alpha = 0.0;
  } else if (variant == "dap-nh") {
    base.neighborhood = Neighborhood::one_hop;
    base.beta = 0.0;
  } else if (variant == "dap-nl") {
    base.neighborhood = Neighborhood::one_hop;
    base.alpha = 0.0;
  } else if (variant == "dap-m") {
    base.neighborhood = Neighborhood::cluster;
    base.use_similarity = false;
    base.beta = 0.0;
  } else {
    throw Error("unknown variant '" + variant + "' (expected dap-kh, dap-kl, dap-nh, dap-nl or dap-m)");
  }
  return base;
}

PeerSets peer_sets(std::span<const Index> assignment, std::span<const Index> degrees, Index v) {
  PeerSets out;
  const Index cluster = assignment[v];
  for (Index j = 0; j < assignment.size(); ++j) {
    if (j == v || assignment[j] != cluster) continue;
    if (degrees[j] > degrees[v]) out.higher.push_back(j);
    else if (degrees[j] < degrees[v]) out.lower.push_back(j);
  }
  return out;
}

PeerSets one_hop_peer_sets(const BipartiteGraph& graph, std::span<const Index> degrees, Index v) {
  PeerSets out;
  for (Index j : graph.node_neighbors(v)) {
    if (degrees[j] > degrees[v]) out.higher.push_back(j);
    else if (degrees[j] < degrees[v]) out.lower.push_back(j);
  }
  return out;
}

RowVector pooled_direction(const Matrix& embeddings, std::span<const Index> members, Pooling pooling,
                           std::span<const Index> degrees) {
  PoolSum pool(embeddings.cols());
  for (Index j : members) {
    const double w = member_weight(pooling, degrees[j]);
    pool.sum += w * embeddings.row(j);
    pool.weight += w;
    pool.norm_weight += w * embeddings.row(j).norm();
  }
  return normalize_pool(pool.sum, pool.weight, pool.norm_weight);
}

double similarity_factor(const RowVector& embedding, const RowVector& theta, const DapConfig& config) {
  if (!config.use_similarity) return 1.0;
  double m = embedding.dot(theta);
  if (config.similarity == Similarity::cosine) {
    const double denom = embedding.norm() * theta.norm();
    m = denom > 0.0 ? m / denom : 0.0;
  }
  if (config.clamp_negative_similarity) m = std::max(m, 0.0);
  return m;
}

RowVector estimate_bias(const RowVector& embedding, const RowVector& theta_higher, const RowVector& theta_lower,
                        const DapConfig& config) {
  return config.alpha * similarity_factor(embedding, theta_higher, config) * theta_higher +
         config.beta * similarity_factor(embedding, theta_lower, config) * theta_lower;
}

Matrix layer_bias(const Matrix& layer, const BipartiteGraph& graph, std::span<const Index> degrees,
                  const DapConfig& config, Index layer_index, ClusterAssignment* clusters_out) {
  const auto n = static_cast<Index>(layer.rows());
  const auto dim = layer.cols();
  Matrix theta_higher = Matrix::Zero(n, dim);
  Matrix theta_lower = Matrix::Zero(n, dim);

  if (config.neighborhood == Neighborhood::one_hop) {
    for (Index v = 0; v < n; ++v) {
      const auto peers = one_hop_peer_sets(graph, degrees, v);
      theta_higher.row(v) = pooled_direction(layer, peers.higher, config.pooling, degrees);
      theta_lower.row(v) = pooled_direction(layer, peers.lower, config.pooling, degrees);
    }
  } else {
    KMeansOptions options;
    options.clusters = config.clusters;
    options.seed = config.seed + layer_index;
    options.max_iters = config.kmeans_max_iters;
    options.tol = config.kmeans_tol;
    ClusterAssignment clusters = kmeans(layer, options);

    std::vector<std::vector<Index>> members(clusters.cluster_count());
    for (Index v = 0; v < n; ++v) members[clusters.assignment[v]].push_back(v);

    // Within a cluster, order by degree and pool strictly-lower and
    // strictly-higher runs with prefix/suffix sums over degree groups.
    for (auto& group : members) {
      std::stable_sort(group.begin(), group.end(), [&](Index a, Index b) { return degrees[a] < degrees[b]; });
      std::vector<std::size_t> starts;
      for (std::size_t r = 0; r < group.size(); ++r) {
        if (r == 0 || degrees[group[r]] != degrees[group[r - 1]]) starts.push_back(r);
      }
      starts.push_back(group.size());
      const std::size_t runs = starts.size() - 1;

      std::vector<PoolSum> run_sums(runs, PoolSum(dim));
      for (std::size_t g = 0; g < runs; ++g) {
        for (std::size_t r = starts[g]; r < starts[g + 1]; ++r) {
          const Index j = group[r];
          const double w = member_weight(config.pooling, degrees[j]);
          run_sums[g].sum += w * layer.row(j);
          run_sums[g].weight += w;
          run_sums[g].norm_weight += w * layer.row(j).norm();
        }
      }

      PoolSum below(dim);
      std::vector<PoolSum> above(runs + 1, PoolSum(dim));
      for (std::size_t g = runs; g-- > 0;) {
        above[g].sum = above[g + 1].sum + run_sums[g].sum;
        above[g].weight = above[g + 1].weight + run_sums[g].weight;
        above[g].norm_weight = above[g + 1].norm_weight + run_sums[g].norm_weight;
      }
      for (std::size_t g = 0; g < runs; ++g) {
        const RowVector lower_dir = normalize_pool(below.sum, below.weight, below.norm_weight);
        const RowVector higher_dir = normalize_pool(above[g + 1].sum, above[g + 1].weight, above[g + 1].norm_weight);
        for (std::size_t r = starts[g]; r < starts[g + 1]; ++r) {
          theta_lower.row(group[r]) = lower_dir;
          theta_higher.row(group[r]) = higher_dir;
        }
        below.sum += run_sums[g].sum;
        below.weight += run_sums[g].weight;
        below.norm_weight += run_sums[g].norm_weight;
      }
    }
    if (clusters_out != nullptr) *clusters_out = std::move(clusters);
  }

  Matrix bias(n, dim);
  for (Index v = 0; v < n; ++v) {
    bias.row(v) = estimate_bias(layer.row(v), theta_higher.row(v), theta_lower.row(v), config);
  }
  return bias;
}

EmbeddingState debiased_forward(const EmbeddingState& state, const BipartiteGraph& graph, const DapConfig& config,
                                 std::vector<ClusterAssignment>* clusters_out) {
  config.validate();
  if (graph.num_users() != state.num_users || graph.num_items() != state.num_items) {
    throw Error("debiased_forward: graph does not match the embedding table");
  }
  const auto degrees = graph.node_degrees();
  EmbeddingState out;
  out.num_users = state.num_users;
  out.num_items = state.num_items;
  out.num_layers = state.num_layers;
  out.layer0 = state.layer0;
  if (clusters_out != nullptr) clusters_out->clear();

  for (Index l = 1; l <= state.num_layers; ++l) {
    Matrix layer = propagate(graph, l == 1 ? out.layer0 : out.layers.back());
    ClusterAssignment clusters;
    layer -= layer_bias(layer, graph, degrees, config, l, &clusters);
    if (clusters_out != nullptr && config.neighborhood == Neighborhood::cluster) {
      clusters_out->push_back(std::move(clusters));
    }
    out.layers.push_back(std::move(layer));
  }
  out.combined = combine_layers(out.layer0, out.layers);
  return out;
}

void write_cluster_assignments(const std::string& path, std::span<const ClusterAssignment> clusters) {
  std::string text = "layer,node,cluster\n";
  for (std::size_t l = 0; l < clusters.size(); ++l) {
    const auto& a = clusters[l].assignment;
    for (std::size_t v = 0; v < a.size(); ++v) {
      text += std::to_string(l + 1) + "," + std::to_string(v) + "," + std::to_string(a[v]) + "\n";
    }
  }
  write_text_file(path, text);
}

}  // namespace popgcn
