#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "artsearch/analytics/points.hpp"

namespace artsearch::analytics {

struct KMeansParams {
  size_t k = 8;
  uint64_t seed = 0;
  size_t max_iter = 100;
  // Stop when (previous SSE - SSE) / previous SSE < tol.
  double tol = 1e-4;
};

struct ClusterAssignment {
  size_t k = 0;
  std::vector<std::string> ids;         // sorted
  std::vector<uint32_t> assignments;    // parallel to ids
  std::vector<std::vector<double>> centroids;
  double sse = 0.0;
  // SSE after the initial assignment and after every update and assignment step.
  std::vector<double> sse_history;
  size_t iterations = 0;
  uint64_t seed = 0;
};

/// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Greedy k-means++ seeding over the rows of `m`: each new centre is the best
/// (lowest total potential) of 2 + floor(ln k) D^2-weighted candidates.
/// Returns row indices.
std::vector<size_t> kmeanspp_init(const Matrix& m, size_t k, std::mt19937_64& rng);

/// Lloyd iterations from kmeanspp_init. Empty clusters are reseeded to the
/// point farthest from its centroid. Throws Error(kValidation) unless 1 <= k <= n.
ClusterAssignment kmeans(const PointSet& points, const KMeansParams& params);

/// k = min(8, ceil(sqrt(n / 2))), at least 1.
size_t default_cluster_count(size_t n);

}  // namespace artsearch::analytics
