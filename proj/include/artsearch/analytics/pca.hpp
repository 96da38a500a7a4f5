#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "artsearch/analytics/points.hpp"

namespace artsearch::analytics {

struct Projection2D {
  std::string method;             // "pca" or "neighbor-embed"
  std::vector<std::string> ids;   // sorted
  std::vector<std::array<double, 2>> coords;
  uint64_t seed = 0;
  // Set when the input has no variance; all coords are then (0, 0).
  bool degenerate = false;
};

struct PcaResult {
  Projection2D projection;
  // Unit component directions, each with its largest-magnitude loading positive.
  std::array<std::vector<double>, 2> components;
  std::array<double, 2> explained_variance{};  // eigenvalues of the 1/(n-1) covariance
  double total_variance = 0.0;
};

/// Projects centred data onto the top two covariance eigenvectors. With a
/// single input dimension the second component is zero. Throws
/// Error(kValidation) for fewer than two points.
PcaResult pca2d(const PointSet& points);
PcaResult pca2d(const Matrix& m);

}  // namespace artsearch::analytics
