#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "artsearch/analytics/pca.hpp"
#include "artsearch/analytics/points.hpp"

namespace artsearch::analytics {

enum class Metric { kCosine, kEuclidean };

Metric parse_metric(std::string_view s);
std::string_view to_string(Metric m);

struct NeighborEmbedParams {
  size_t n_neighbors = 15;
  double min_dist = 0.1;
  double spread = 1.0;
  size_t epochs = 200;
  uint64_t seed = 0;
  Metric metric = Metric::kCosine;
  double negative_sample_rate = 5.0;
  double learning_rate = 1.0;
  double repulsion_strength = 1.0;
};

/// Least-squares fit of 1 / (1 + a x^(2b)) to the target membership curve
/// (1 below min_dist, exp(-(x - min_dist) / spread) above) on 300 points of
/// [0, 3 * spread].
std::pair<double, double> fit_curve(double min_dist, double spread);

/// Fuzzy neighbourhood graph: for each point its n_neighbors nearest others
/// (exact), weights exp(-(d - rho_i) / sigma_i) with sigma_i chosen so each
/// row sums to log2(n_neighbors), then symmetrized as a + b - ab.
/// Returned as sorted (i, j, w) triples with i != j.
struct GraphEdge {
  uint32_t i = 0;
  uint32_t j = 0;
  double w = 0.0;
};
std::vector<GraphEdge> fuzzy_graph(const Matrix& m, size_t n_neighbors, Metric metric);

/// Neighbour-embedding layout seeded from PCA (scaled to [-10, 10]) and
/// refined by sequential SGD with negative sampling; the output is centred.
/// Pure function of (points, params). Throws Error(kValidation) when
/// n < max(n_neighbors + 1, 10); use pca2d for smaller inputs.
Projection2D neighbor_embed_2d(const PointSet& points, const NeighborEmbedParams& params);

}  // namespace artsearch::analytics
