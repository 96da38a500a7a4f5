#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace artsearch::query {

struct WeightedEmbedding {
  std::span<const float> embedding;
  double weight = 1.0;
};

/// Below this norm the weighted sum counts as cancelled.
inline constexpr double kMinFusedNorm = 1e-8;

/// v = sum_t w_t * e_t accumulated in double in term order, returned as
/// v / |v|; nullopt when `terms` is empty or |v| < kMinFusedNorm.
std::optional<std::vector<double>> fuse(std::span<const WeightedEmbedding> terms);

/// Cosine in double, summed in index order.
double cosine(std::span<const double> a, std::span<const float> b);

/// Plug-in scores live on a grid of 2^-32 so that cosines which agree up to
/// summation-order rounding compare equal.
inline constexpr double kScoreScale = 4294967296.0;

/// (1 + cos) / 2, clamped to [0, 1] and rounded to the score grid.
double plugin_score(double cos);

/// sum_p (W_p / sum_q W_q) * s_p, iterated in name order. Normalizing the
/// weights first makes a single plug-in's final score equal its own score
/// exactly. A plug-in missing from `scores` contributes 0 but still counts
/// in the denominator when listed in `weights`.
double combine(const std::map<std::string, double>& weights, const std::map<std::string, double>& scores);

}  // namespace artsearch::query
