#pragma once

#include "popgcn/types.hpp"

#include <cstdint>
#include <vector>

namespace popgcn {

struct KMeansOptions {
  Index clusters = 10;
  std::uint64_t seed = 2023;
  Index max_iters = 100;
  /// Stop once no centroid moves farther than this (Euclidean).
  double tol = 1e-8;
};

struct ClusterAssignment {
  std::vector<Index> assignment;  // per row
  Matrix centroids;               // clusters x D
  double inertia = 0.0;
  /// Inertia after each assignment step, one entry per Lloyd iteration.
  std::vector<double> inertia_history;
  Index iterations = 0;

  Index cluster_count() const { return static_cast<Index>(centroids.rows()); }
};

/// Lloyd's algorithm with k-means++ seeding.
///
/// Assignment ties go to the lowest centroid index. A centroid left empty
/// after an assignment step is moved onto the point farthest from its own
/// centroid (lowest row index on ties). On return every nonempty cluster's
/// centroid is the mean of its members.
ClusterAssignment kmeans(const Matrix& points, const KMeansOptions& options);

}  // namespace popgcn
