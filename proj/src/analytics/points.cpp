#include "artsearch/analytics/points.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "artsearch/common/error.hpp"

namespace artsearch::analytics {

Matrix canonical_matrix(const PointSet& points) {
  std::vector<const std::pair<std::string, std::vector<float>>*> order;
  order.reserve(points.size());
  for (const auto& p : points) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->first < b->first; });
  Matrix m;
  m.rows = points.size();
  m.cols = points.empty() ? 0 : points.front().second.size();
  if (m.rows > 0 && m.cols == 0) throw_validation("analytics input vectors must not be empty");
  m.data.reserve(m.rows * m.cols);
  for (size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && order[i]->first == order[i - 1]->first) {
      throw_validation(fmt::format("duplicate id '{}' in analytics input", order[i]->first));
    }
    if (order[i]->second.size() != m.cols) throw_validation("analytics input vectors differ in dimension");
    for (float x : order[i]->second) {
      if (!std::isfinite(x)) throw_validation("analytics input contains a non-finite value");
      m.data.push_back(x);
    }
    m.ids.push_back(order[i]->first);
  }
  return m;
}

double squared_distance(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace artsearch::analytics
