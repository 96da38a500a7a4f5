#include "artsearch/analytics/neighbor_embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <fmt/format.h>
#include <unsupported/Eigen/NonLinearOptimization>

#include "artsearch/analytics/kmeans.hpp"
#include "artsearch/common/error.hpp"

namespace artsearch::analytics {
namespace {

constexpr double kClip = 4.0;
constexpr double kSmoothTolerance = 1e-5;
constexpr double kMinScale = 1e-3;

double clip(double v) { return std::clamp(v, -kClip, kClip); }

struct CurveFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::vector<double> xs, ys;

  int inputs() const { return 2; }
  int values() const { return static_cast<int>(xs.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (size_t i = 0; i < xs.size(); ++i) {
      f(static_cast<Eigen::Index>(i)) = 1.0 / (1.0 + p(0) * std::pow(xs[i], 2.0 * p(1))) - ys[i];
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    for (size_t i = 0; i < xs.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double x = xs[i];
      if (x <= 0.0) {
        j(r, 0) = j(r, 1) = 0.0;
        continue;
      }
      const double p2b = std::pow(x, 2.0 * p(1));
      const double denom = (1.0 + p(0) * p2b) * (1.0 + p(0) * p2b);
      j(r, 0) = -p2b / denom;
      j(r, 1) = -p(0) * p2b * 2.0 * std::log(x) / denom;
    }
    return 0;
  }
};

// Exact k nearest others for every row; distances ascending, index ascending on ties.
void exact_knn(const Matrix& m, size_t k, Metric metric, std::vector<uint32_t>& idx, std::vector<double>& dist) {
  const size_t n = m.rows, d = m.cols;
  std::vector<double> norms(n, 1.0);
  if (metric == Metric::kCosine) {
    for (size_t i = 0; i < n; ++i) norms[i] = std::sqrt(squared_distance(m.row(i), std::vector<double>(d, 0.0).data(), d));
  }
  idx.assign(n * k, 0);
  dist.assign(n * k, 0.0);
  std::vector<std::pair<double, uint32_t>> row(n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      double dij;
      if (metric == Metric::kEuclidean) {
        dij = std::sqrt(squared_distance(m.row(i), m.row(j), d));
      } else {
        double dot = 0.0;
        for (size_t c = 0; c < d; ++c) dot += m.row(i)[c] * m.row(j)[c];
        const double denom = norms[i] * norms[j];
        dij = denom > 0.0 ? std::max(0.0, 1.0 - dot / denom) : 1.0;
      }
      row[j] = {i == j ? std::numeric_limits<double>::infinity() : dij, static_cast<uint32_t>(j)};
    }
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
    for (size_t t = 0; t < k; ++t) {
      idx[i * k + t] = row[t].second;
      dist[i * k + t] = row[t].first;
    }
  }
}

}  // namespace

Metric parse_metric(std::string_view s) {
  if (s == "cosine") return Metric::kCosine;
  if (s == "euclidean") return Metric::kEuclidean;
  throw_validation(fmt::format("unknown metric '{}'", s), {{"field", "metric"}});
}

std::string_view to_string(Metric m) { return m == Metric::kCosine ? "cosine" : "euclidean"; }

std::pair<double, double> fit_curve(double min_dist, double spread) {
  CurveFunctor f;
  for (int i = 0; i < 300; ++i) {
    const double x = 3.0 * spread * i / 299.0;
    f.xs.push_back(x);
    f.ys.push_back(x < min_dist ? 1.0 : std::exp(-(x - min_dist) / spread));
  }
  Eigen::VectorXd p(2);
  p << 1.0, 1.0;
  Eigen::LevenbergMarquardt<CurveFunctor> lm(f);
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  lm.parameters.maxfev = 10000;
  lm.minimize(p);
  return {p(0), p(1)};
}

std::vector<GraphEdge> fuzzy_graph(const Matrix& m, size_t k, Metric metric) {
  const size_t n = m.rows;
  std::vector<uint32_t> idx;
  std::vector<double> dist;
  exact_knn(m, k, metric, idx, dist);

  double mean_all = 0.0;
  for (double x : dist) mean_all += x;
  mean_all /= static_cast<double>(dist.size());

  const double target = std::log2(static_cast<double>(k));
  std::map<std::pair<uint32_t, uint32_t>, double> directed;
  for (size_t i = 0; i < n; ++i) {
    const double* di = &dist[i * k];
    double rho = 0.0;
    for (size_t t = 0; t < k; ++t) {
      if (di[t] > 0.0) {
        rho = di[t];
        break;
      }
    }
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
    for (int iter = 0; iter < 64; ++iter) {
      double psum = 0.0;
      for (size_t t = 0; t < k; ++t) {
        const double gap = di[t] - rho;
        psum += gap > 0.0 ? std::exp(-gap / mid) : 1.0;
      }
      if (std::abs(psum - target) < kSmoothTolerance) break;
      if (psum > target) {
        hi = mid;
        mid = (lo + hi) / 2.0;
      } else {
        lo = mid;
        mid = std::isinf(hi) ? mid * 2.0 : (lo + hi) / 2.0;
      }
    }
    // Keep bandwidths away from zero for points in very dense spots.
    double mean_i = 0.0;
    for (size_t t = 0; t < k; ++t) mean_i += di[t];
    mean_i /= static_cast<double>(k);
    const double floor = kMinScale * (rho > 0.0 ? mean_i : mean_all);
    const double sigma = std::max(mid, floor);
    for (size_t t = 0; t < k; ++t) {
      const double gap = di[t] - rho;
      const double w = gap > 0.0 ? std::exp(-gap / sigma) : 1.0;
      directed[{static_cast<uint32_t>(i), idx[i * k + t]}] = w;
    }
  }
  std::vector<GraphEdge> edges;
  for (const auto& [key, w] : directed) {
    const auto back = directed.find({key.second, key.first});
    const double wt = back == directed.end() ? 0.0 : back->second;
    edges.push_back({key.first, key.second, w + wt - w * wt});
  }
  // Edges only present in the reverse direction.
  for (const auto& [key, w] : directed) {
    if (!directed.count({key.second, key.first})) edges.push_back({key.second, key.first, w});
  }
  std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return edges;
}

Projection2D neighbor_embed_2d(const PointSet& points, const NeighborEmbedParams& params) {
  const Matrix m = canonical_matrix(points);
  const size_t n = m.rows;
  const size_t minimum = std::max<size_t>(params.n_neighbors + 1, 10);
  if (params.n_neighbors < 2) throw_validation("n_neighbors must be at least 2", {{"field", "n_neighbors"}});
  if (n < minimum) {
    throw_validation(fmt::format("neighbor embedding needs at least {} points (got {}); use the pca projection", minimum, n),
                     {{"field", "points"}});
  }
  if (!(params.min_dist >= 0.0) || !(params.spread > 0.0) || params.min_dist > params.spread) {
    throw_validation("min_dist must lie in [0, spread]", {{"field", "min_dist"}});
  }
  const auto [a, b] = fit_curve(params.min_dist, params.spread);

  // Initial layout: PCA scaled so the largest coordinate magnitude is 10.
  const PcaResult init = pca2d(m);
  std::vector<double> emb(n * 2, 0.0);
  double peak = 0.0;
  for (const auto& c : init.projection.coords) peak = std::max({peak, std::abs(c[0]), std::abs(c[1])});
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) emb[i * 2 + c] = peak > 0.0 ? 10.0 * init.projection.coords[i][c] / peak : 0.0;
  }

  const auto edges = fuzzy_graph(m, params.n_neighbors, params.metric);
  const size_t epochs = params.epochs;
  double w_max = 0.0;
  for (const auto& e : edges) w_max = std::max(w_max, e.w);
  struct Sched {
    uint32_t head, tail;
    double per_sample, next_sample, per_negative, next_negative;
  };
  std::vector<Sched> sched;
  for (const auto& e : edges) {
    // Edges too weak to be sampled even once are dropped.
    if (epochs > 0 && e.w < w_max / static_cast<double>(epochs)) continue;
    const double per = w_max / e.w;
    sched.push_back({e.i, e.j, per, per, per / params.negative_sample_rate, per / params.negative_sample_rate});
  }

  std::mt19937_64 rng(params.seed);
  for (size_t epoch = 0; epoch < epochs; ++epoch) {
    const double alpha = params.learning_rate * (1.0 - static_cast<double>(epoch) / static_cast<double>(epochs));
    const double now = static_cast<double>(epoch);
    for (auto& s : sched) {
      if (s.next_sample > now) continue;
      double* cur = &emb[s.head * 2];
      double* oth = &emb[s.tail * 2];
      double d2 = (cur[0] - oth[0]) * (cur[0] - oth[0]) + (cur[1] - oth[1]) * (cur[1] - oth[1]);
      double coeff = 0.0;
      if (d2 > 0.0) coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
      for (int c = 0; c < 2; ++c) {
        const double g = clip(coeff * (cur[c] - oth[c]));
        cur[c] += g * alpha;
        oth[c] -= g * alpha;
      }
      s.next_sample += s.per_sample;

      const auto negatives = static_cast<size_t>((now - s.next_negative) / s.per_negative);
      for (size_t p = 0; p < negatives; ++p) {
        const auto k = static_cast<uint32_t>(rng() % n);
        if (k == s.head) continue;
        oth = &emb[k * 2];
        d2 = (cur[0] - oth[0]) * (cur[0] - oth[0]) + (cur[1] - oth[1]) * (cur[1] - oth[1]);
        coeff = d2 > 0.0 ? 2.0 * params.repulsion_strength * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0)) : 0.0;
        for (int c = 0; c < 2; ++c) {
          const double g = coeff > 0.0 ? clip(coeff * (cur[c] - oth[c])) : kClip;
          cur[c] += g * alpha;
        }
      }
      s.next_negative += static_cast<double>(negatives) * s.per_negative;
    }
  }

  Projection2D out;
  out.method = "neighbor-embed";
  out.ids = m.ids;
  out.seed = params.seed;
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += emb[i * 2];
    my += emb[i * 2 + 1];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) out.coords.push_back({emb[i * 2] - mx, emb[i * 2 + 1] - my});
  out.degenerate = init.projection.degenerate;
  return out;
}

}  // namespace artsearch::analytics
