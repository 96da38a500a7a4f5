#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace artsearch {

std::string sha256_hex(std::span<const uint8_t> bytes);
std::string sha256_hex(std::string_view text);

uint32_t crc32(std::span<const uint8_t> bytes, uint32_t seed = 0);

/// 64-bit FNV-1a.
constexpr uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// SplitMix64 step: advances `state` and returns the next output.
constexpr uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string base64_encode(std::span<const uint8_t> bytes);
/// Throws Error(kValidation) on malformed input.
std::vector<uint8_t> base64_decode(std::string_view text);

std::string random_token(size_t bytes = 16);

}  // namespace artsearch
