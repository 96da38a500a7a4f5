#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "artsearch/plugins/manifest.hpp"
#include "artsearch/plugins/remote.hpp"

namespace artsearch::plugins {

/// Thread-safe name -> extractor map. Every vector handed out has the
/// plug-in's dimension and unit norm (within 1e-4); labels are canonical.
class PluginRegistry {
 public:
  /// Adds or replaces a plug-in. Re-registering a name with a different
  /// vector_dim throws Error(kValidation).
  void add(std::shared_ptr<Extractor> extractor);
  void register_builtin(std::string_view id);
  /// Health-checks `endpoint` and registers plug-in `name` with the manifest
  /// the endpoint advertises. Throws Error(kRegistration) when the endpoint is
  /// unreachable, unhealthy or does not serve `name`.
  void register_remote(const std::string& name, const std::string& endpoint, const RemoteOptions& options = {});

  bool contains(std::string_view name) const;
  /// Throws Error(kNotFound).
  std::shared_ptr<Extractor> get(std::string_view name) const;
  std::vector<PluginManifest> list() const;  // sorted by name

  /// Throws Error(kValidation) if an input's modality is unsupported.
  std::vector<ItemOutcome> extract(std::string_view name, std::span<const ExtractionInput> inputs) const;
  /// Single input; a failed item is rethrown as Error.
  std::vector<float> extract_one(std::string_view name, const ExtractionInput& input) const;
  /// Throws Error(kValidation) for a plug-in that is not a classifier.
  ClassifierOutput classify(std::string_view name, const ExtractionInput& input) const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Extractor>, std::less<>> plugins_;
};

}  // namespace artsearch::plugins
