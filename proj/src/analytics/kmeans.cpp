#include "artsearch/analytics/kmeans.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "artsearch/common/error.hpp"

namespace artsearch::analytics {
namespace {

// Index of the first element whose running sum exceeds `target`.
size_t sample_index(const std::vector<double>& weights, double target) {
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (acc > target) return i;
  }
  // Rounding left target at the very end; take the last positive weight.
  for (size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

// Nearest centroid, lower index on ties.
std::pair<uint32_t, double> nearest(const double* x, const std::vector<std::vector<double>>& centroids, size_t dim) {
  uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(x, centroids[c].data(), dim);
    if (d < best_d) {
      best_d = d;
      best = static_cast<uint32_t>(c);
    }
  }
  return {best, best_d};
}

}  // namespace

size_t default_cluster_count(size_t n) {
  const auto k = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(n) / 2.0)));
  return std::clamp<size_t>(k, 1, 8);
}

std::vector<size_t> kmeanspp_init(const Matrix& m, size_t k, std::mt19937_64& rng) {
  const size_t n = m.rows;
  const size_t trials = 2 + static_cast<size_t>(std::log(static_cast<double>(k)));
  std::vector<size_t> centers;
  centers.push_back(static_cast<size_t>(unit_uniform(rng) * static_cast<double>(n)));
  std::vector<double> closest(n);
  for (size_t i = 0; i < n; ++i) closest[i] = squared_distance(m.row(i), m.row(centers[0]), m.cols);

  while (centers.size() < k) {
    double potential = 0.0;
    for (double d : closest) potential += d;
    size_t best = 0;
    double best_potential = std::numeric_limits<double>::infinity();
    std::vector<double> best_closest;
    for (size_t t = 0; t < trials; ++t) {
      const double u = unit_uniform(rng);
      // All remaining points coincide with a centre: any choice is as good.
      const size_t cand = potential > 0.0 ? sample_index(closest, u * potential)
                                          : static_cast<size_t>(u * static_cast<double>(n));
      std::vector<double> next(n);
      double total = 0.0;
      for (size_t i = 0; i < n; ++i) {
        next[i] = std::min(closest[i], squared_distance(m.row(i), m.row(cand), m.cols));
        total += next[i];
      }
      if (total < best_potential) {
        best_potential = total;
        best = cand;
        best_closest = std::move(next);
      }
    }
    centers.push_back(best);
    closest = std::move(best_closest);
  }
  return centers;
}

ClusterAssignment kmeans(const PointSet& points, const KMeansParams& params) {
  const Matrix m = canonical_matrix(points);
  const size_t n = m.rows, dim = m.cols, k = params.k;
  if (k < 1 || k > n) {
    throw_validation(fmt::format("k must be between 1 and the number of points ({}), got {}", n, k), {{"field", "k"}});
  }
  std::mt19937_64 rng(params.seed);
  ClusterAssignment out;
  out.k = k;
  out.ids = m.ids;
  out.seed = params.seed;
  for (size_t c : kmeanspp_init(m, k, rng)) out.centroids.emplace_back(m.row(c), m.row(c) + dim);
  out.assignments.assign(n, 0);

  std::vector<double> dist(n);
  const auto assign = [&] {
    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const auto [c, d] = nearest(m.row(i), out.centroids, dim);
      out.assignments[i] = c;
      dist[i] = d;
      sse += d;
    }
    return sse;
  };

  double previous = assign();
  out.sse_history.push_back(previous);
  for (size_t iter = 0; iter < params.max_iter; ++iter) {
    // Update step: centroids become cluster means.
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      auto& s = sums[out.assignments[i]];
      const double* x = m.row(i);
      for (size_t j = 0; j < dim; ++j) s[j] += x[j];
      ++counts[out.assignments[i]];
    }
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (size_t j = 0; j < dim; ++j) out.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
      dist[i] = squared_distance(m.row(i), out.centroids[out.assignments[i]].data(), dim);
      sse += dist[i];
    }
    // Empty clusters move onto the points worst served by their centroid;
    // this leaves the SSE unchanged until the next assignment step.
    std::vector<bool> taken(n, false);
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      size_t far = n;
      for (size_t i = 0; i < n; ++i) {
        if (!taken[i] && (far == n || dist[i] > dist[far])) far = i;
      }
      taken[far] = true;
      out.centroids[c].assign(m.row(far), m.row(far) + dim);
    }
    out.sse_history.push_back(sse);
    out.iterations = iter + 1;
    const double reassigned = assign();
    out.sse_history.push_back(reassigned);
    const double improvement = previous > 0.0 ? (previous - reassigned) / previous : 0.0;
    previous = reassigned;
    if (improvement < params.tol) break;
  }
  // Assignments now hold the argmin over the final centroids.
  out.sse = previous;
  return out;
}

}  // namespace artsearch::analytics
