#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace artsearch::plugins {

/// 8-bit interleaved RGB.
struct RgbImage {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<uint8_t> pixels;  // width * height * 3

  const uint8_t* at(uint32_t x, uint32_t y) const { return &pixels[(static_cast<size_t>(y) * width + x) * 3]; }
  uint8_t* at(uint32_t x, uint32_t y) { return &pixels[(static_cast<size_t>(y) * width + x) * 3]; }
};

inline constexpr uint32_t kMinImageSide = 8;

RgbImage solid_image(uint32_t width, uint32_t height, uint8_t r, uint8_t g, uint8_t b);

/// Decodes PNG or JPEG (sniffed from the leading bytes). Throws
/// Error(kValidation) for unknown or corrupt data and for images smaller than
/// kMinImageSide on either side.
RgbImage decode_image(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_png(const RgbImage& image);
std::vector<uint8_t> encode_jpeg(const RgbImage& image, int quality = 90);

}  // namespace artsearch::plugins
