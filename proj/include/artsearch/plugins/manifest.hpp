#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "artsearch/common/error.hpp"

namespace artsearch::plugins {

enum class Modality { kImage, kText };
enum class PluginKind { kFeature, kClassifier };

std::string_view to_string(Modality m);
std::string_view to_string(PluginKind k);
Modality parse_modality(std::string_view s);
PluginKind parse_plugin_kind(std::string_view s);

struct PluginManifest {
  std::string name;
  std::string version;
  std::vector<Modality> modalities;  // sorted, unique
  uint32_t vector_dim = 0;
  PluginKind kind = PluginKind::kFeature;
  // Remote plug-ins may declare that repeated calls can return different vectors.
  bool deterministic = true;

  bool supports(Modality m) const;
  bool cross_modal() const { return modalities.size() == 2; }

  friend bool operator==(const PluginManifest&, const PluginManifest&) = default;
};

/// Names become file names and "auto:<name>" facet fields, so they are
/// restricted to [A-Za-z0-9_.-], 1-64 characters, not starting with '.'.
bool valid_plugin_name(std::string_view name);

/// Throws Error(kValidation) unless name, version, modalities and dim are usable.
void validate(const PluginManifest& m);

nlohmann::json to_json(const PluginManifest& m);
PluginManifest manifest_from_json(const nlohmann::json& j);

struct ExtractionInput {
  Modality kind = Modality::kText;
  std::string text;            // kText
  std::vector<uint8_t> image;  // kImage, encoded PNG or JPEG

  static ExtractionInput of_text(std::string t) { return {Modality::kText, std::move(t), {}}; }
  static ExtractionInput of_image(std::vector<uint8_t> bytes) { return {Modality::kImage, {}, std::move(bytes)}; }
};

struct Label {
  std::string keyword;
  float confidence = 0.0f;

  friend bool operator==(const Label&, const Label&) = default;
};

struct ClassifierOutput {
  std::vector<Label> labels;  // confidence desc, keyword asc
  std::string taxonomy;

  friend bool operator==(const ClassifierOutput&, const ClassifierOutput&) = default;
};

/// Sorts by confidence desc then keyword; throws Error(kValidation) on a
/// confidence outside [0, 1] or a repeated keyword.
void canonicalize(std::vector<Label>& labels);

/// Result for one input of a batch. A failed item carries an error instead of
/// a vector; the rest of the batch is unaffected.
struct ItemOutcome {
  std::vector<float> vector;
  std::vector<Label> labels;
  std::optional<ErrorCode> error;
  std::string error_message;

  bool ok() const { return !error.has_value(); }
  static ItemOutcome failure(ErrorCode code, std::string message) { return {{}, {}, code, std::move(message)}; }
};

/// A feature or classifier backend. Implementations must be safe to call
/// from several threads at once.
class Extractor {
 public:
  virtual ~Extractor() = default;
  virtual const PluginManifest& manifest() const = 0;
  virtual std::string taxonomy() const { return {}; }
  /// One outcome per input, in order. Whole-batch failures (for example a
  /// remote timeout) throw instead.
  virtual std::vector<ItemOutcome> extract(std::span<const ExtractionInput> inputs) = 0;
};

}  // namespace artsearch::plugins
