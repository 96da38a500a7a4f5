#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>

#include "artsearch/plugins/manifest.hpp"
#include "artsearch/plugins/protocol.hpp"

namespace artsearch::plugins {

struct RemoteOptions {
  std::chrono::milliseconds timeout{30'000};
  size_t max_in_flight = 4;  // concurrent requests per endpoint
  size_t max_batch = 16;     // inputs per request
};

/// Fetches GET {endpoint}/v1/health. Throws Error(kTransient) when the
/// endpoint cannot be reached and Error(kFormat) for a malformed answer.
protocol::HealthResponse fetch_health(const std::string& endpoint, const RemoteOptions& options = {});

/// Client for one plug-in behind the inference wire protocol.
///
/// A batch the server rejects as invalid is retried one item at a time so a
/// single undecodable image only fails its own slot. Timeouts, connection
/// failures and 5xx answers throw Error(kTransient); 4xx answers are
/// validation errors. Vectors of non-deterministic plug-ins are memoized by
/// content hash so repeated inputs get stable embeddings.
class RemoteExtractor : public Extractor {
 public:
  RemoteExtractor(std::string endpoint, PluginManifest manifest, RemoteOptions options = {});

  const PluginManifest& manifest() const override { return manifest_; }
  std::vector<ItemOutcome> extract(std::span<const ExtractionInput> inputs) override;

  const std::string& endpoint() const noexcept { return endpoint_; }
  /// Number of HTTP extract calls issued so far.
  uint64_t requests() const noexcept { return requests_.load(); }

 private:
  std::vector<ItemOutcome> call(std::span<const ExtractionInput> inputs);
  std::vector<ItemOutcome> extract_uncached(std::span<const ExtractionInput> inputs);

  std::string endpoint_;
  PluginManifest manifest_;
  RemoteOptions options_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  std::atomic<uint64_t> requests_{0};
  std::mutex cache_mu_;
  std::map<std::string, ItemOutcome> cache_;
};

}  // namespace artsearch::plugins
