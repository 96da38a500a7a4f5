#pragma once

#include <string>
#include <utility>
#include <vector>

namespace artsearch::analytics {

/// doc_id -> vector. Every analytics routine first sorts by doc_id, so
/// results never depend on input order.
using PointSet = std::vector<std::pair<std::string, std::vector<float>>>;

/// Row-major double copy of a PointSet sorted by id.
struct Matrix {
  std::vector<std::string> ids;
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  const double* row(size_t i) const { return data.data() + i * cols; }
  double* row(size_t i) { return data.data() + i * cols; }
};

/// Throws Error(kValidation) for duplicate ids, ragged or empty vectors and
/// non-finite components.
Matrix canonical_matrix(const PointSet& points);

double squared_distance(const double* a, const double* b, size_t n);

}  // namespace artsearch::analytics
