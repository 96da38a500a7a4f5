#include "artsearch/index/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "artsearch/common/error.hpp"

namespace artsearch::index {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void normalize_row(std::span<double> v, std::span<float> out) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
}

std::string bench_id(size_t i) { return fmt::format("v{:08d}", i); }

// Row indices of the k rows with the largest dot product with `q` (rows and
// q are unit vectors), ties to the lower index, which matches id order.
std::vector<size_t> exact_top_k(std::span<const float> rows, uint32_t dim, std::span<const float> q, size_t k) {
  const size_t n = rows.size() / dim;
  std::vector<std::pair<double, size_t>> scored(n);
  for (size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    const float* r = rows.data() + i * dim;
    for (uint32_t d = 0; d < dim; ++d) dot += static_cast<double>(r[d]) * q[d];
    scored[i] = {-dot, i};
  }
  k = std::min(k, n);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
  std::vector<size_t> out;
  for (size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
  return out;
}

}  // namespace

Distribution parse_distribution(std::string_view s) {
  if (s == "uniform") return Distribution::kUniform;
  if (s == "clustered") return Distribution::kClustered;
  throw_validation(fmt::format("unknown distribution '{}'; expected uniform or clustered", s));
}

std::string_view to_string(Distribution d) { return d == Distribution::kUniform ? "uniform" : "clustered"; }

std::vector<float> synthetic_vectors(size_t n, uint32_t dim, Distribution distribution, uint64_t seed) {
  if (dim == 0) throw_validation("dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> out(n * dim);
  std::vector<double> row(dim);
  const auto gaussian_unit = [&](std::span<float> dst) {
    double sq = 0.0;
    do {
      sq = 0.0;
      for (auto& x : row) {
        x = normal(rng);
        sq += x * x;
      }
    } while (sq == 0.0);
    normalize_row(row, dst);
  };

  if (distribution == Distribution::kUniform) {
    for (size_t i = 0; i < n; ++i) gaussian_unit(std::span(out).subspan(i * dim, dim));
    return out;
  }
  const size_t centres = std::max<size_t>(8, n / 1000);
  std::vector<float> c(centres * dim);
  for (size_t j = 0; j < centres; ++j) gaussian_unit(std::span(c).subspan(j * dim, dim));
  const double sigma = 0.5 / std::sqrt(static_cast<double>(dim));
  for (size_t i = 0; i < n; ++i) {
    const float* centre = c.data() + (rng() % centres) * dim;
    double sq = 0.0;
    for (uint32_t d = 0; d < dim; ++d) {
      row[d] = centre[d] + sigma * normal(rng);
      sq += row[d] * row[d];
    }
    if (sq == 0.0) row[0] = 1.0;
    normalize_row(row, std::span(out).subspan(i * dim, dim));
  }
  return out;
}

LatencyStats latency_stats(std::vector<double> samples) {
  LatencyStats s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  // Nearest-rank percentiles.
  const auto pct = [&](double p) {
    const size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * samples.size()));
    return samples[std::clamp<size_t>(rank, 1, samples.size()) - 1];
  };
  s.p50_ms = pct(50);
  s.p95_ms = pct(95);
  s.p99_ms = pct(99);
  s.mean_ms = std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
  return s;
}

const EfResult& BenchReport::at_default() const {
  for (const auto& r : graph) {
    if (r.ef == default_ef) return r;
  }
  throw Error(ErrorCode::kInternal, "bench report lacks the default ef");
}

BenchReport run_bench(const BenchOptions& o, const BenchProgress& progress) {
  if (o.n == 0 || o.queries == 0 || o.k == 0) throw_validation("n, queries and k must be positive");
  BenchReport report;
  report.options = o;
  report.default_ef = o.graph.ef_search;

  // Queries are the trailing rows of one stream so that clustered queries
  // share the data's centres.
  const auto stream = synthetic_vectors(o.n + o.queries, o.dim, o.distribution, o.seed);
  const std::span<const float> data(stream.data(), o.n * o.dim);
  const auto query = [&](size_t q) { return std::span<const float>(stream).subspan((o.n + q) * o.dim, o.dim); };

  VectorIndex graph(IndexConfig{.plugin = "bench", .dim = o.dim, .structure = Structure::kGraph, .graph = o.graph});
  auto t0 = Clock::now();
  const size_t step = std::max<size_t>(1, o.n / 100);
  for (size_t i = 0; i < o.n; ++i) {
    graph.insert(bench_id(i), data.subspan(i * o.dim, o.dim));
    if (progress && (i + 1) % step == 0) progress("build", i + 1, o.n);
  }
  report.graph_build_seconds = ms_since(t0) / 1000.0;

  std::vector<std::set<std::string>> truth(o.queries);
  if (o.build_flat) {
    VectorIndex flat(IndexConfig{.plugin = "bench", .dim = o.dim, .structure = Structure::kFlat});
    t0 = Clock::now();
    for (size_t i = 0; i < o.n; ++i) flat.insert(bench_id(i), data.subspan(i * o.dim, o.dim));
    report.flat_build_seconds = ms_since(t0) / 1000.0;
    std::vector<double> flat_ms;
    for (size_t q = 0; q < o.queries; ++q) {
      t0 = Clock::now();
      const auto hits = flat.search(query(q), o.k);
      flat_ms.push_back(ms_since(t0));
      for (const auto& h : hits) truth[q].insert(h.doc_id);
      if (progress) progress("exact", q + 1, o.queries);
    }
    report.flat_latency = latency_stats(flat_ms);
  } else {
    for (size_t q = 0; q < o.queries; ++q) {
      for (const size_t i : exact_top_k(data, o.dim, query(q), o.k)) truth[q].insert(bench_id(i));
      if (progress) progress("exact", q + 1, o.queries);
    }
  }

  std::set<uint32_t> efs(o.ef_values.begin(), o.ef_values.end());
  efs.insert(o.graph.ef_search);
  for (uint32_t ef : efs) {
    EfResult r{.ef = ef};
    std::vector<double> ms;
    double recall = 0.0;
    for (size_t q = 0; q < o.queries; ++q) {
      t0 = Clock::now();
      const auto hits = graph.search(query(q), o.k, std::nullopt, ef);
      ms.push_back(ms_since(t0));
      size_t found = 0;
      for (const auto& h : hits) found += truth[q].count(h.doc_id);
      recall += truth[q].empty() ? 1.0 : static_cast<double>(found) / truth[q].size();
    }
    r.recall = recall / o.queries;
    r.latency = latency_stats(std::move(ms));
    report.graph.push_back(r);
    if (progress) progress("sweep", report.graph.size(), efs.size());
  }
  return report;
}

nlohmann::json to_json(const BenchReport& r) {
  const auto lat = [](const LatencyStats& s) {
    return nlohmann::json{{"p50_ms", s.p50_ms}, {"p95_ms", s.p95_ms}, {"p99_ms", s.p99_ms}, {"mean_ms", s.mean_ms}};
  };
  nlohmann::json graph = nlohmann::json::array();
  for (const auto& g : r.graph) graph.push_back({{"ef_search", g.ef}, {"recall", g.recall}, {"latency", lat(g.latency)}});
  return {{"n", r.options.n},
          {"dim", r.options.dim},
          {"queries", r.options.queries},
          {"k", r.options.k},
          {"distribution", to_string(r.options.distribution)},
          {"seed", r.options.seed},
          {"default_ef_search", r.default_ef},
          {"graph_build_seconds", r.graph_build_seconds},
          {"flat_build_seconds", r.flat_build_seconds},
          {"flat_latency", lat(r.flat_latency)},
          {"graph", graph}};
}

}  // namespace artsearch::index
