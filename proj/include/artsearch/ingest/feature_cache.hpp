#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "artsearch/plugins/manifest.hpp"

namespace artsearch {
class RecordLog;
}

namespace artsearch::ingest {

/// Extractor output for one (plug-in, version, image content) triple.
struct CachedFeature {
  std::vector<float> vector;
  std::vector<plugins::Label> labels;

  friend bool operator==(const CachedFeature&, const CachedFeature&) = default;
};

/// Content-addressed store of extractor outputs, keyed by plug-in name,
/// plug-in version and the sha256 of the image bytes. Persistent caches
/// append to "features.log" ("IARTFEA1" record log); a later record for the
/// same key wins. Thread-safe.
class FeatureCache {
 public:
  FeatureCache();  // in-memory
  FeatureCache(const std::filesystem::path& dir, bool sync = false);
  ~FeatureCache();

  FeatureCache(const FeatureCache&) = delete;
  FeatureCache& operator=(const FeatureCache&) = delete;

  std::optional<CachedFeature> lookup(const std::string& plugin, const std::string& version,
                                      const std::string& content_hash) const;
  void store(const std::string& plugin, const std::string& version, const std::string& content_hash,
             CachedFeature feature);

  size_t size() const;

 private:
  using Key = std::tuple<std::string, std::string, std::string>;
  mutable std::mutex mu_;
  std::map<Key, CachedFeature> entries_;
  std::unique_ptr<RecordLog> log_;
};

}  // namespace artsearch::ingest
