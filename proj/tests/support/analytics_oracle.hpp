#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace artsearch::testing {

using Rows = std::vector<std::vector<double>>;

/// Plain Lloyd iterations from given initial centres, written independently
/// of the library. Ties go to the lower centroid index; an empty cluster moves
/// to the not-yet-used point farthest from its centroid.
struct LloydResult {
  std::vector<uint32_t> assign;
  Rows centroids;
  double sse = 0;
};

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline LloydResult lloyd_oracle(const Rows& x, Rows centroids, size_t max_iter, double tol) {
  const size_t n = x.size(), k = centroids.size();
  LloydResult r;
  r.assign.assign(n, 0);
  auto step_assign = [&] {
    double sse = 0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (size_t c = 0; c < k; ++c) {
        const double d = sqdist(x[i], centroids[c]);
        if (d < best) {
          best = d;
          r.assign[i] = static_cast<uint32_t>(c);
        }
      }
      sse += best;
    }
    return sse;
  };
  double prev = step_assign();
  for (size_t it = 0; it < max_iter; ++it) {
    Rows sum(k, std::vector<double>(x[0].size(), 0.0));
    std::vector<size_t> cnt(k, 0);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < x[i].size(); ++j) sum[r.assign[i]][j] += x[i][j];
      cnt[r.assign[i]]++;
    }
    for (size_t c = 0; c < k; ++c)
      if (cnt[c])
        for (size_t j = 0; j < sum[c].size(); ++j) centroids[c][j] = sum[c][j] / static_cast<double>(cnt[c]);
    std::vector<double> d(n);
    for (size_t i = 0; i < n; ++i) d[i] = sqdist(x[i], centroids[r.assign[i]]);
    std::vector<bool> used(n, false);
    for (size_t c = 0; c < k; ++c) {
      if (cnt[c]) continue;
      size_t far = n;
      for (size_t i = 0; i < n; ++i)
        if (!used[i] && (far == n || d[i] > d[far])) far = i;
      used[far] = true;
      centroids[c] = x[far];
    }
    const double now = step_assign();
    const double rel = prev > 0 ? (prev - now) / prev : 0;
    prev = now;
    if (rel < tol) break;
  }
  r.centroids = centroids;
  r.sse = prev;
  return r;
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues descending, eigenvectors as rows).
inline std::pair<std::vector<double>, Rows> jacobi_eigen(Rows a) {
  const size_t n = a.size();
  Rows v(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return a[i][i] > a[j][j]; });
  std::vector<double> values;
  Rows vectors;
  for (size_t i : order) {
    values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (size_t k = 0; k < n; ++k) col[k] = v[k][i];
    vectors.push_back(col);
  }
  return {values, vectors};
}

/// Mean silhouette coefficient with Euclidean distance.
inline double silhouette(const Rows& x, const std::vector<int>& labels) {
  const size_t n = x.size();
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  double total = 0;
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> sum(k, 0.0);
    std::vector<size_t> cnt(k, 0);
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sum[labels[j]] += std::sqrt(sqdist(x[i], x[j]));
      cnt[labels[j]]++;
    }
    if (cnt[labels[i]] == 0) continue;
    const double a = sum[labels[i]] / static_cast<double>(cnt[labels[i]]);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != labels[i] && cnt[c]) b = std::min(b, sum[c] / static_cast<double>(cnt[c]));
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

/// Trustworthiness of `low` as an embedding of `high` (Euclidean in both):
/// 1 - 2 / (n k (2n - 3k - 1)) * sum over i, j in low-kNN(i) \ high-kNN(i) of (rank_high(i, j) - k).
inline double trustworthiness(const Rows& high, const Rows& low, size_t k) {
  const size_t n = high.size();
  double penalty = 0;
  for (size_t i = 0; i < n; ++i) {
    std::vector<size_t> by_high, by_low;
    for (size_t j = 0; j < n; ++j)
      if (j != i) by_high.push_back(j), by_low.push_back(j);
    std::sort(by_high.begin(), by_high.end(), [&](size_t a, size_t b) {
      const double da = sqdist(high[i], high[a]), db = sqdist(high[i], high[b]);
      return da != db ? da < db : a < b;
    });
    std::sort(by_low.begin(), by_low.end(), [&](size_t a, size_t b) {
      const double da = sqdist(low[i], low[a]), db = sqdist(low[i], low[b]);
      return da != db ? da < db : a < b;
    });
    std::vector<size_t> rank(n, 0);
    for (size_t r = 0; r < by_high.size(); ++r) rank[by_high[r]] = r + 1;
    for (size_t r = 0; r < k; ++r) {
      const size_t j = by_low[r];
      if (rank[j] > k) penalty += static_cast<double>(rank[j] - k);
    }
  }
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  return 1.0 - 2.0 / (nn * kk * (2 * nn - 3 * kk - 1)) * penalty;
}

}  // namespace artsearch::testing
