#pragma once

#include <cstddef>
#include <span>

namespace artsearch::index {

/// Inner product over two 8-lane float accumulators (vector extensions, so
/// the loop body is two fused multiply-adds per 16 components).
float dot(const float* a, const float* b, size_t n) noexcept;

inline float dot(std::span<const float> a, std::span<const float> b) noexcept {
  return dot(a.data(), b.data(), a.size());
}

/// Sequential double-precision reference kernel. Slow; kept for differential
/// testing of `dot`.
double dot_exact(std::span<const float> a, std::span<const float> b) noexcept;

double l2_norm(std::span<const float> v) noexcept;

/// Scales `v` to unit length in place. Returns false (and leaves `v`
/// untouched) when the norm is zero or not finite.
bool normalize(std::span<float> v) noexcept;

}  // namespace artsearch::index
