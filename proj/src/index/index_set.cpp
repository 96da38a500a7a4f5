#include "artsearch/index/index_set.hpp"

#include <mutex>

#include <fmt/format.h>

#include "artsearch/common/error.hpp"

namespace artsearch::index {

IndexSet::IndexSet(IndexConfig defaults) : defaults_(std::move(defaults)) {}

VectorIndex* IndexSet::find(const std::string& plugin) const {
  std::shared_lock lock(mutex_);
  const auto it = indexes_.find(plugin);
  return it == indexes_.end() ? nullptr : it->second.get();
}

VectorIndex& IndexSet::get_or_create(const std::string& plugin, uint32_t dim) {
  std::unique_lock lock(mutex_);
  auto& slot = indexes_[plugin];
  if (!slot) {
    IndexConfig config = defaults_;
    config.plugin = plugin;
    config.dim = dim;
    slot = std::make_unique<VectorIndex>(config);
  } else if (slot->config().dim != dim) {
    throw_validation(fmt::format("index for plug-in '{}' has dimension {}, got {}", plugin, slot->config().dim, dim));
  }
  return *slot;
}

std::vector<std::string> IndexSet::plugins() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, index] : indexes_) out.push_back(name);
  return out;
}

void IndexSet::persist_all(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::shared_lock lock(mutex_);
  for (const auto& [name, index] : indexes_) index->persist(dir / (name + ".idx"));
}

void IndexSet::load_all(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return;
  std::map<std::string, std::unique_ptr<VectorIndex>> loaded;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".idx") continue;
    auto index = VectorIndex::load(entry.path());
    const std::string name = index->config().plugin;
    loaded[name] = std::move(index);
  }
  std::unique_lock lock(mutex_);
  for (auto& [name, index] : loaded) indexes_[name] = std::move(index);
}

}  // namespace artsearch::index
