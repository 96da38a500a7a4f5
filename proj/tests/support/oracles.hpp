#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

namespace artsearch::testing {

struct ScoredId {
  std::string id;
  double score;
};

/// Brute-force top-k by cosine over raw vectors, long-double accumulation,
/// ties broken by ascending id.
inline std::vector<ScoredId> brute_force_topk(const std::vector<std::pair<std::string, std::vector<float>>>& items,
                                              const std::vector<float>& query, size_t k) {
  long double qn = 0;
  for (float x : query) qn += static_cast<long double>(x) * x;
  std::vector<ScoredId> scored;
  for (const auto& [id, v] : items) {
    long double dot = 0, vn = 0;
    for (size_t i = 0; i < v.size(); ++i) {
      dot += static_cast<long double>(v[i]) * query[i];
      vn += static_cast<long double>(v[i]) * v[i];
    }
    scored.push_back({id, static_cast<double>(dot / (std::sqrt(qn) * std::sqrt(vn)))});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredId& a, const ScoredId& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

}  // namespace artsearch::testing
