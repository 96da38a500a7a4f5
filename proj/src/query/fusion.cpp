#include "artsearch/query/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "artsearch/common/error.hpp"

namespace artsearch::query {

std::optional<std::vector<double>> fuse(std::span<const WeightedEmbedding> terms) {
  if (terms.empty()) return std::nullopt;
  const size_t dim = terms.front().embedding.size();
  std::vector<double> v(dim, 0.0);
  for (const auto& t : terms) {
    if (t.embedding.size() != dim) throw Error(ErrorCode::kInternal, "term embeddings differ in dimension");
    for (size_t j = 0; j < dim; ++j) v[j] += t.weight * static_cast<double>(t.embedding[j]);
  }
  double sq = 0.0;
  for (const double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (!(norm >= kMinFusedNorm)) return std::nullopt;
  for (double& x : v) x /= norm;
  return v;
}

double cosine(std::span<const double> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInternal, "cosine of vectors with different dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double y = b[i];
    dot += a[i] * y;
    na += a[i] * a[i];
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double plugin_score(double cos) {
  const double s = std::clamp((1.0 + cos) / 2.0, 0.0, 1.0);
  return std::nearbyint(s * kScoreScale) / kScoreScale;
}

double combine(const std::map<std::string, double>& weights, const std::map<std::string, double>& scores) {
  double den = 0.0;
  for (const auto& [plugin, w] : weights) den += w;
  if (!(den > 0.0)) return 0.0;
  double out = 0.0;
  for (const auto& [plugin, w] : weights) {
    if (const auto it = scores.find(plugin); it != scores.end()) out += (w / den) * it->second;
  }
  return out;
}

}  // namespace artsearch::query
