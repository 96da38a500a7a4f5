#include "artsearch/index/kernels.hpp"

#include <cmath>
#include <cstring>

namespace artsearch::index {
namespace {

// Eight float lanes; maps onto one AVX register (or two SSE registers).
using Lanes = float __attribute__((vector_size(32)));

inline Lanes load(const float* p) noexcept {
  Lanes v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline float horizontal_sum(Lanes v) noexcept {
  return ((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7]));
}

}  // namespace

float dot(const float* a, const float* b, size_t n) noexcept {
  Lanes acc0 = {};
  Lanes acc1 = {};
  size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 += load(a + i) * load(b + i);
    acc1 += load(a + i + 8) * load(b + i + 8);
  }
  if (i + 8 <= n) {
    acc0 += load(a + i) * load(b + i);
    i += 8;
  }
  float tail = 0.0f;
  for (; i < n; ++i) tail += a[i] * b[i];
  return horizontal_sum(acc0 + acc1) + tail;
}

double dot_exact(std::span<const float> a, std::span<const float> b) noexcept {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

double l2_norm(std::span<const float> v) noexcept { return std::sqrt(dot_exact(v, v)); }

bool normalize(std::span<float> v) noexcept {
  const double norm = l2_norm(v);
  if (!(norm > 0.0) || !std::isfinite(norm)) return false;
  for (auto& x : v) x = static_cast<float>(x / norm);
  return true;
}

}  // namespace artsearch::index
