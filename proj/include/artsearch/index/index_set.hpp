#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "artsearch/index/vector_index.hpp"

namespace artsearch::index {

/// One VectorIndex per plug-in. Index objects live as long as the set, so
/// returned pointers stay valid.
class IndexSet {
 public:
  /// `defaults` supplies structure and graph parameters for indexes created
  /// on demand; plugin and dim are filled in per call.
  explicit IndexSet(IndexConfig defaults = {});

  /// Returns nullptr when no index exists for the plug-in.
  VectorIndex* find(const std::string& plugin) const;

  /// Creates the index on first use. A dimension mismatch with an existing
  /// index is a validation error.
  VectorIndex& get_or_create(const std::string& plugin, uint32_t dim);

  std::vector<std::string> plugins() const;

  /// Writes `<dir>/<plugin>.idx` for every index.
  void persist_all(const std::filesystem::path& dir) const;

  /// Loads every `*.idx` file in `dir`; a missing directory is not an error.
  void load_all(const std::filesystem::path& dir);

 private:
  IndexConfig defaults_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::unique_ptr<VectorIndex>> indexes_;
};

}  // namespace artsearch::index
