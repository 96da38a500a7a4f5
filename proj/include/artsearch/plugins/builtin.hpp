#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "artsearch/plugins/image.hpp"
#include "artsearch/plugins/manifest.hpp"

namespace artsearch::plugins {

/// Model-free extractors with fixed, documented outputs.
///
/// colorgram  (image, dim 48)  Joint RGB histogram with 4 red x 4 green x 3
///                             blue levels; bin = 12*(r*4/256) + 3*(g*4/256) + b*3/256.
/// hashproj   (image+text, 64) Text: sum over tokens of a 64-d vector drawn
///                             from SplitMix64 seeded by fnv1a64(token) ^
///                             0x9E3779B97F4A7C15. Image: 8x8 grid of mean
///                             intensities, centred on 127.5. render_embedding_image
///                             maps a text vector to an image with the same embedding.
/// colorrules (image, dim 6)   Classifier labelling red/green/blue/dark/bright
///                             pixel fractions of at least 0.1.
std::vector<std::string> builtin_names();
/// Throws Error(kNotFound) for an unknown id.
std::shared_ptr<Extractor> make_builtin(std::string_view id);

std::vector<float> colorgram_vector(const RgbImage& image);
std::vector<float> hashproj_text_vector(std::string_view text);
std::vector<float> hashproj_image_vector(const RgbImage& image);
ClassifierOutput colorrules_classify(const RgbImage& image);

/// 64x64 grayscale image whose 8x8 cells encode `v` (dim 64), so that
/// hashproj_image_vector(render_embedding_image(v)) is close to v.
RgbImage render_embedding_image(std::span<const float> v);

}  // namespace artsearch::plugins
