#include "artsearch/service/workspace.hpp"

#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "artsearch/common/error.hpp"
#include "artsearch/plugins/builtin.hpp"

namespace artsearch::service {
namespace fs = std::filesystem;

void validate_collection_id(const std::string& id) {
  const bool ok = !id.empty() && id.size() <= 64 && id != "." && id != ".." &&
                  std::all_of(id.begin(), id.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
                  });
  if (!ok) throw_validation(fmt::format("invalid collection id '{}'", id), {{"pointer", "/collection_id"}});
}

Workspace::Workspace(ServerConfig config)
    : config_(std::move(config)),
      indexes_(index::IndexConfig{.structure = config_.index_structure, .graph = config_.graph}) {
  const fs::path dir = config_.data_dir;
  std::error_code ec;
  for (const char* sub : {"catalog", "indexes", "features", "collections"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot create data directory: {}", ec.message()));
  }

  if (config_.plugins.empty()) {
    for (const auto& name : plugins::builtin_names()) plugins_.register_builtin(name);
  }
  for (const auto& p : config_.plugins) {
    if (p.backend == "builtin") {
      plugins_.register_builtin(p.name);
    } else {
      plugins::RemoteOptions opts;
      opts.timeout = p.timeout;
      plugins_.register_remote(p.name, p.backend, opts);
    }
  }

  catalog_ = std::make_unique<catalog::Catalog>(dir / "catalog", catalog::FacetRegistry(config_.facets));
  indexes_.load_all(dir / "indexes");
  cache_ = std::make_unique<ingest::FeatureCache>(dir / "features");

  if (std::ifstream in(dir / "collections.json"); in) {
    try {
      collections_ = nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, fmt::format("collections.json is malformed: {}", e.what()));
    }
  }

  engine_ = std::make_unique<query::QueryEngine>(
      query::QueryEngine::Sources{catalog_.get(), &indexes_, &plugins_, &commit_},
      query::EngineOptions{.min_depth = config_.min_depth, .layout_cap = config_.layout_cap});
  jobs_ = std::make_unique<ingest::JobManager>(
      ingest::IngestTargets{catalog_.get(), &indexes_, &plugins_, cache_.get(), &commit_, dir / "indexes"});
  spdlog::info("workspace open: {} documents, indexes [{}]", catalog_->snapshot()->size(),
               fmt::join(indexes_.plugins(), ", "));
}

Workspace::~Workspace() { jobs_.reset(); }

fs::path Workspace::collection_dir(const std::string& collection_id) const {
  validate_collection_id(collection_id);
  return fs::absolute(config_.data_dir) / "collections" / collection_id;
}

std::string Workspace::ingest(ingest::CollectionManifest manifest, std::vector<std::string> plugins) {
  validate_collection_id(manifest.collection_id);
  {
    std::lock_guard lock(collections_mu_);
    const std::string base = fs::absolute(manifest.base_dir).lexically_normal().string();
    auto [it, inserted] = collections_.try_emplace(manifest.collection_id, base);
    if (!inserted && it->second != base) it->second = base;
    save_collections();
  }
  return jobs_->submit(std::move(manifest), {.plugins = std::move(plugins),
                                             .parallelism = config_.ingest_parallelism,
                                             .max_retries = config_.ingest_max_retries});
}

void Workspace::save_collections() const {
  const fs::path path = config_.data_dir / "collections.json";
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << nlohmann::json(collections_).dump(2) << "\n";
    if (!out) throw Error(ErrorCode::kIo, "cannot write collections.json");
  }
  fs::rename(tmp, path);
}

std::vector<uint8_t> Workspace::load_image(const catalog::ImageDocument& doc) const {
  fs::path base;
  {
    std::lock_guard lock(collections_mu_);
    const auto it = collections_.find(doc.collection_id);
    if (it == collections_.end()) throw_not_found(fmt::format("no image source known for collection '{}'", doc.collection_id));
    base = it->second;
  }
  return ingest::default_image_loader(doc.image_ref, base);
}

}  // namespace artsearch::service
