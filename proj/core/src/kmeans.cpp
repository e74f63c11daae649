#include "popgcn/kmeans.hpp"

#include "popgcn/util.hpp"

#include <limits>
#include <random>
#include <string>

namespace popgcn {
namespace {

Matrix seed_plus_plus(const Matrix& points, Index k, std::mt19937_64& rng) {
  const auto n = static_cast<Index>(points.rows());
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  Index pick = static_cast<Index>(uniform_below(rng, n));
  for (Index c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (Index x = 0; x < n; ++x) total += nearest[x];
      if (total > 0.0) {
        const double target = uniform01(rng) * total;
        double cumulative = 0.0;
        pick = n;
        Index last_positive = 0;
        for (Index x = 0; x < n; ++x) {
          if (nearest[x] <= 0.0) continue;
          last_positive = x;
          cumulative += nearest[x];
          if (cumulative > target) {
            pick = x;
            break;
          }
        }
        if (pick == n) pick = last_positive;
      } else {
        // Every point coincides with a centroid: take the first unused row.
        pick = 0;
        while (pick < n && chosen[pick]) ++pick;
        if (pick == n) pick = 0;
      }
    }
    chosen[pick] = true;
    centroids.row(c) = points.row(pick);
    for (Index x = 0; x < n; ++x) {
      nearest[x] = std::min(nearest[x], (points.row(x) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

}  // namespace

ClusterAssignment kmeans(const Matrix& points, const KMeansOptions& options) {
  const auto n = static_cast<Index>(points.rows());
  const Index k = options.clusters;
  if (k == 0) throw Error("kmeans: cluster count must be >= 1");
  if (k > n) throw Error("kmeans: " + std::to_string(k) + " clusters requested for " + std::to_string(n) + " points");

  std::mt19937_64 rng(options.seed);
  ClusterAssignment out;
  out.centroids = seed_plus_plus(points, k, rng);
  out.assignment.assign(n, 0);

  std::vector<double> dist(n, 0.0);
  std::vector<std::size_t> counts(k);
  Matrix sums(k, points.cols());
  for (Index it = 0; it < options.max_iters; ++it) {
    double inertia = 0.0;
    for (Index x = 0; x < n; ++x) {
      Index best = 0;
      double best_d = (points.row(x) - out.centroids.row(0)).squaredNorm();
      for (Index c = 1; c < k; ++c) {
        const double d = (points.row(x) - out.centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      out.assignment[x] = best;
      dist[x] = best_d;
      inertia += best_d;
    }
    out.inertia_history.push_back(inertia);
    out.iterations = it + 1;

    sums.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Index x = 0; x < n; ++x) {
      sums.row(out.assignment[x]) += points.row(x);
      ++counts[out.assignment[x]];
    }
    Matrix next = out.centroids;
    std::vector<bool> used(n, false);
    for (Index c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        next.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      Index far = n;
      for (Index x = 0; x < n; ++x) {
        if (used[x]) continue;
        if (far == n || dist[x] > dist[far]) far = x;
      }
      if (far == n) far = 0;
      used[far] = true;
      next.row(c) = points.row(far);
    }

    double shift = 0.0;
    for (Index c = 0; c < k; ++c) shift = std::max(shift, (next.row(c) - out.centroids.row(c)).norm());
    out.centroids = std::move(next);
    if (shift <= options.tol) break;
  }

  out.inertia = 0.0;
  for (Index x = 0; x < n; ++x) out.inertia += (points.row(x) - out.centroids.row(out.assignment[x])).squaredNorm();
  return out;
}

}  // namespace popgcn
