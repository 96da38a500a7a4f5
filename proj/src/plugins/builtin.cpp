#include "artsearch/plugins/builtin.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "artsearch/common/hashing.hpp"
#include "artsearch/common/text.hpp"

namespace artsearch::plugins {
namespace {

constexpr uint32_t kHashprojDim = 64;
constexpr uint32_t kGrid = 8;

std::vector<float> to_unit(const std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) return {};
  std::vector<float> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

class BuiltinExtractor : public Extractor {
 public:
  using Fn = std::function<ItemOutcome(const ExtractionInput&)>;

  BuiltinExtractor(PluginManifest manifest, std::string taxonomy, Fn fn)
      : manifest_(std::move(manifest)), taxonomy_(std::move(taxonomy)), fn_(std::move(fn)) {}

  const PluginManifest& manifest() const override { return manifest_; }
  std::string taxonomy() const override { return taxonomy_; }

  std::vector<ItemOutcome> extract(std::span<const ExtractionInput> inputs) override {
    std::vector<ItemOutcome> out;
    out.reserve(inputs.size());
    for (const auto& in : inputs) {
      try {
        out.push_back(fn_(in));
      } catch (const Error& e) {
        out.push_back(ItemOutcome::failure(e.code(), e.what()));
      }
    }
    return out;
  }

 private:
  PluginManifest manifest_;
  std::string taxonomy_;
  Fn fn_;
};

ItemOutcome vector_outcome(std::vector<float> v) {
  if (v.empty()) return ItemOutcome::failure(ErrorCode::kValidation, "input has no usable signal (zero vector)");
  return {std::move(v), {}, std::nullopt, {}};
}

}  // namespace

std::vector<float> colorgram_vector(const RgbImage& image) {
  std::vector<double> hist(48, 0.0);
  for (size_t i = 0; i < image.pixels.size(); i += 3) {
    const unsigned r = image.pixels[i] * 4u / 256u;
    const unsigned g = image.pixels[i + 1] * 4u / 256u;
    const unsigned b = image.pixels[i + 2] * 3u / 256u;
    hist[12 * r + 3 * g + b] += 1.0;
  }
  return to_unit(hist);
}

std::vector<float> hashproj_text_vector(std::string_view text) {
  auto tokens = tokenize(text);
  if (tokens.empty()) {
    const auto whole = to_lower(trim(text));
    if (whole.empty()) return {};
    tokens.push_back(whole);
  }
  std::vector<double> acc(kHashprojDim, 0.0);
  for (const auto& t : tokens) {
    uint64_t state = fnv1a64(t) ^ 0x9E3779B97F4A7C15ULL;
    for (auto& a : acc) {
      const uint64_t z = splitmix64(state);
      a += static_cast<double>(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
  }
  return to_unit(acc);
}

std::vector<float> hashproj_image_vector(const RgbImage& image) {
  std::vector<double> cells(kHashprojDim, 0.0);
  for (uint32_t gy = 0; gy < kGrid; ++gy) {
    const uint32_t y0 = gy * image.height / kGrid, y1 = (gy + 1) * image.height / kGrid;
    for (uint32_t gx = 0; gx < kGrid; ++gx) {
      const uint32_t x0 = gx * image.width / kGrid, x1 = (gx + 1) * image.width / kGrid;
      uint64_t sum = 0;
      for (uint32_t y = y0; y < y1; ++y) {
        for (uint32_t x = x0; x < x1; ++x) {
          const uint8_t* p = image.at(x, y);
          sum += p[0] + p[1] + p[2];
        }
      }
      const double mean = static_cast<double>(sum) / (3.0 * (y1 - y0) * (x1 - x0));
      cells[gy * kGrid + gx] = (mean - 127.5) / 127.5;
    }
  }
  return to_unit(cells);
}

RgbImage render_embedding_image(std::span<const float> v) {
  if (v.size() != kHashprojDim) throw_validation("render_embedding_image expects a 64-d vector");
  float peak = 0.0f;
  for (float x : v) peak = std::max(peak, std::abs(x));
  RgbImage img = solid_image(64, 64, 128, 128, 128);
  if (peak == 0.0f) return img;
  for (uint32_t y = 0; y < 64; ++y) {
    for (uint32_t x = 0; x < 64; ++x) {
      const float value = v[(y / kGrid) * kGrid + x / kGrid];
      const auto level = static_cast<uint8_t>(std::lround(127.5 + 127.0 * value / peak));
      uint8_t* p = img.at(x, y);
      p[0] = p[1] = p[2] = level;
    }
  }
  return img;
}

ClassifierOutput colorrules_classify(const RgbImage& image) {
  // Fractions of pixels that are red/green/blue dominant, dark or bright.
  static const char* kNames[] = {"red", "green", "blue", "dark", "bright"};
  double counts[5] = {0, 0, 0, 0, 0};
  const double n = static_cast<double>(image.width) * image.height;
  for (size_t i = 0; i < image.pixels.size(); i += 3) {
    const int r = image.pixels[i], g = image.pixels[i + 1], b = image.pixels[i + 2];
    if (r >= 96 && r > g + 48 && r > b + 48) counts[0] += 1;
    if (g >= 96 && g > r + 48 && g > b + 48) counts[1] += 1;
    if (b >= 96 && b > r + 48 && b > g + 48) counts[2] += 1;
    const double luma = 0.299 * r + 0.587 * g + 0.114 * b;
    if (luma < 64.0) counts[3] += 1;
    if (luma > 192.0) counts[4] += 1;
  }
  ClassifierOutput out;
  out.taxonomy = "color-rules";
  for (int k = 0; k < 5; ++k) {
    const float confidence = static_cast<float>(counts[k] / n);
    if (confidence >= 0.1f) out.labels.push_back({kNames[k], confidence});
  }
  canonicalize(out.labels);
  return out;
}

std::vector<std::string> builtin_names() { return {"colorgram", "colorrules", "hashproj"}; }

std::shared_ptr<Extractor> make_builtin(std::string_view id) {
  if (id == "colorgram") {
    return std::make_shared<BuiltinExtractor>(
        PluginManifest{"colorgram", "1", {Modality::kImage}, 48, PluginKind::kFeature, true}, "",
        [](const ExtractionInput& in) { return vector_outcome(colorgram_vector(decode_image(in.image))); });
  }
  if (id == "hashproj") {
    return std::make_shared<BuiltinExtractor>(
        PluginManifest{"hashproj", "1", {Modality::kImage, Modality::kText}, kHashprojDim, PluginKind::kFeature, true},
        "", [](const ExtractionInput& in) {
          return vector_outcome(in.kind == Modality::kText ? hashproj_text_vector(in.text)
                                                           : hashproj_image_vector(decode_image(in.image)));
        });
  }
  if (id == "colorrules") {
    return std::make_shared<BuiltinExtractor>(
        PluginManifest{"colorrules", "1", {Modality::kImage}, 6, PluginKind::kClassifier, true}, "color-rules",
        [](const ExtractionInput& in) {
          const RgbImage img = decode_image(in.image);
          auto result = colorrules_classify(img);
          // Vector: the five label fractions plus the share of pixels matching no rule,
          // which keeps it non-zero for neutral images.
          std::vector<double> v(6, 0.0);
          for (const auto& l : result.labels) {
            static const std::vector<std::string> order = {"red", "green", "blue", "dark", "bright"};
            v[std::find(order.begin(), order.end(), l.keyword) - order.begin()] = l.confidence;
          }
          double matched = 0;
          for (int k = 0; k < 5; ++k) matched += v[k];
          v[5] = std::max(0.0, 1.0 - matched) + 1e-3;
          return ItemOutcome{to_unit(v), std::move(result.labels), std::nullopt, {}};
        });
  }
  throw_not_found(fmt::format("no builtin plugin '{}'", id));
}

}  // namespace artsearch::plugins
