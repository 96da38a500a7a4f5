#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "artsearch/catalog/catalog.hpp"
#include "artsearch/common/shared_mutex.hpp"
#include "artsearch/index/index_set.hpp"
#include "artsearch/ingest/feature_cache.hpp"
#include "artsearch/ingest/jobs.hpp"
#include "artsearch/plugins/registry.hpp"
#include "artsearch/query/engine.hpp"
#include "artsearch/service/config.hpp"

namespace artsearch::service {

/// Everything that lives in one data directory:
///
///   <data>/catalog/catalog.log     documents
///   <data>/indexes/<plugin>.idx    vector indexes, rewritten after every ingest job
///   <data>/features/features.log   extraction cache
///   <data>/collections.json        collection id -> directory image refs resolve against
///   <data>/collections/<id>/       default image directory for manifests posted over HTTP
///
/// Used by the HTTP service and by the CLI's embedded mode alike.
class Workspace {
 public:
  /// Creates the directory layout, registers the configured plug-ins (remote
  /// ones are health-checked) and loads persisted state.
  explicit Workspace(ServerConfig config);
  ~Workspace();

  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const ServerConfig& config() const noexcept { return config_; }
  catalog::Catalog& catalog() { return *catalog_; }
  index::IndexSet& indexes() { return indexes_; }
  const plugins::PluginRegistry& plugins() const { return plugins_; }
  SharedMutex& commit_mutex() { return commit_; }
  const query::QueryEngine& engine() const { return *engine_; }
  ingest::JobManager& jobs() { return *jobs_; }

  /// Starts an ingest job over `manifest`, remembering its base directory so
  /// document images can be served later.
  std::string ingest(ingest::CollectionManifest manifest, std::vector<std::string> plugins = {});

  /// Where image refs of a collection ingested over HTTP resolve.
  std::filesystem::path collection_dir(const std::string& collection_id) const;

  /// Image bytes of a catalogued document. Throws Error(kNotFound) or Error(kIo).
  std::vector<uint8_t> load_image(const catalog::ImageDocument& doc) const;

 private:
  void save_collections() const;

  ServerConfig config_;
  std::unique_ptr<catalog::Catalog> catalog_;
  index::IndexSet indexes_;
  plugins::PluginRegistry plugins_;
  std::unique_ptr<ingest::FeatureCache> cache_;
  SharedMutex commit_;
  std::unique_ptr<query::QueryEngine> engine_;
  mutable std::mutex collections_mu_;
  std::map<std::string, std::string> collections_;
  std::unique_ptr<ingest::JobManager> jobs_;
};

/// Collection ids are 1..64 characters from [A-Za-z0-9._-]; throws Error(kValidation).
void validate_collection_id(const std::string& id);

}  // namespace artsearch::service
