#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "artsearch/index/vector_index.hpp"

namespace artsearch::index {

enum class Distribution {
  kUniform,    // uniform on the unit sphere
  kClustered,  // Gaussian blobs around random centres, then normalized
};

Distribution parse_distribution(std::string_view s);
std::string_view to_string(Distribution d);

/// `n` unit vectors of dimension `dim`, row-major. Clustered data uses
/// max(8, n / 1000) centres and per-coordinate noise 0.5 / sqrt(dim)
/// relative to unit-norm centres. Deterministic for a seed.
std::vector<float> synthetic_vectors(size_t n, uint32_t dim, Distribution distribution, uint64_t seed);

struct BenchOptions {
  size_t n = 10'000;
  uint32_t dim = 128;
  size_t queries = 100;
  size_t k = 10;
  Distribution distribution = Distribution::kUniform;
  uint64_t seed = 1;
  GraphParams graph;
  // ef_search values to sweep; the configured default is always included.
  std::vector<uint32_t> ef_values = {16, 32, 64, 128, 256};
  // Build and time a flat index as the exact baseline. When false, ground
  // truth comes from a direct scan in double precision and the flat figures stay 0.
  bool build_flat = true;
};

struct LatencyStats {
  double p50_ms = 0, p95_ms = 0, p99_ms = 0, mean_ms = 0;
};

struct EfResult {
  uint32_t ef = 0;
  double recall = 0;  // mean recall@k against exact (flat) top-k
  LatencyStats latency;
};

struct BenchReport {
  BenchOptions options;
  double graph_build_seconds = 0;
  double flat_build_seconds = 0;
  LatencyStats flat_latency;
  std::vector<EfResult> graph;  // ascending ef
  uint32_t default_ef = 0;
  const EfResult& at_default() const;
};

using BenchProgress = std::function<void(std::string_view stage, size_t done, size_t total)>;

/// Builds a graph (and optionally a flat) index over the same synthetic data,
/// takes exact top-k and measures graph recall and latency per ef.
/// Query vectors are further draws from the data's distribution.
BenchReport run_bench(const BenchOptions& options, const BenchProgress& progress = nullptr);

LatencyStats latency_stats(std::vector<double> samples_ms);
nlohmann::json to_json(const BenchReport& report);

}  // namespace artsearch::index
