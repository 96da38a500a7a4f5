#include "artsearch/ingest/feature_cache.hpp"

#include <fmt/format.h>

#include "artsearch/common/binary_io.hpp"
#include "artsearch/common/error.hpp"
#include "artsearch/common/record_log.hpp"

namespace artsearch::ingest {
namespace {

constexpr uint8_t kFeatureRecord = 1;
constexpr uint32_t kCacheVersion = 1;

}  // namespace

FeatureCache::FeatureCache() = default;
FeatureCache::~FeatureCache() = default;

FeatureCache::FeatureCache(const std::filesystem::path& dir, bool sync) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot create cache directory '{}'", dir.string()));
  log_ = std::make_unique<RecordLog>(
      dir / "features.log", "IARTFEA1", kCacheVersion, RecordLog::Options{sync},
      [this](uint8_t type, std::span<const uint8_t> payload) {
        if (type != kFeatureRecord) throw Error(ErrorCode::kFormat, "unknown record type in feature cache");
        ByteReader r(payload);
        auto plugin = r.get_string();
        auto version = r.get_string();
        auto hash = r.get_string();
        CachedFeature f;
        f.vector.resize(r.get<uint32_t>());
        r.get_floats(f.vector);
        const auto labels = r.get<uint32_t>();
        for (uint32_t i = 0; i < labels; ++i) {
          auto keyword = r.get_string();
          f.labels.push_back({std::move(keyword), r.get<float>()});
        }
        entries_[{std::move(plugin), std::move(version), std::move(hash)}] = std::move(f);
      });
}

std::optional<CachedFeature> FeatureCache::lookup(const std::string& plugin, const std::string& version,
                                                  const std::string& content_hash) const {
  std::lock_guard lock(mu_);
  const auto it = entries_.find({plugin, version, content_hash});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FeatureCache::store(const std::string& plugin, const std::string& version, const std::string& content_hash,
                         CachedFeature feature) {
  std::lock_guard lock(mu_);
  if (log_) {
    ByteWriter w;
    w.put_string(plugin);
    w.put_string(version);
    w.put_string(content_hash);
    w.put(static_cast<uint32_t>(feature.vector.size()));
    w.put_floats(feature.vector);
    w.put(static_cast<uint32_t>(feature.labels.size()));
    for (const auto& l : feature.labels) {
      w.put_string(l.keyword);
      w.put(l.confidence);
    }
    log_->append(kFeatureRecord, w.bytes());
  }
  entries_[{plugin, version, content_hash}] = std::move(feature);
}

size_t FeatureCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace artsearch::ingest
