#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "artsearch/catalog/catalog.hpp"
#include "artsearch/common/shared_mutex.hpp"
#include "artsearch/common/time.hpp"
#include "artsearch/index/index_set.hpp"
#include "artsearch/ingest/feature_cache.hpp"
#include "artsearch/ingest/manifest.hpp"
#include "artsearch/plugins/registry.hpp"

namespace artsearch::ingest {

enum class JobState { kPending, kRunning, kCompleted, kPartiallyCompleted, kFailed };

std::string_view to_string(JobState s);
inline bool terminal(JobState s) { return s != JobState::kPending && s != JobState::kRunning; }

struct JobStatus {
  std::string job_id;
  std::string collection_id;
  JobState state = JobState::kPending;
  size_t total = 0;
  size_t processed = 0;  // committed or already up to date
  size_t failed = 0;
  size_t unchanged = 0;  // subset of processed that needed no write
  size_t extraction_calls = 0;
  size_t cache_hits = 0;
  std::vector<EntryError> errors;  // manifest order
  std::string message;             // why a job failed as a whole
  std::optional<Timestamp> started_at;
  std::optional<Timestamp> finished_at;
};

nlohmann::json to_json(const JobStatus& s);

/// Reads image bytes for a manifest entry. Throws Error on failure.
using ImageLoader = std::function<std::vector<uint8_t>(const std::string& image, const std::filesystem::path& base_dir)>;

/// Files (relative to the manifest directory or absolute) and http:// URLs.
std::vector<uint8_t> default_image_loader(const std::string& image, const std::filesystem::path& base_dir);

struct IngestTargets {
  catalog::Catalog* catalog = nullptr;
  index::IndexSet* indexes = nullptr;
  const plugins::PluginRegistry* plugins = nullptr;
  FeatureCache* cache = nullptr;
  // Writers take it exclusively for each entry's commit; queries hold it shared.
  SharedMutex* commit_mutex = nullptr;
  // Indexes are persisted here at the end of every job when set.
  std::optional<std::filesystem::path> index_dir;
  ImageLoader loader = default_image_loader;
};

struct IngestOptions {
  // Plug-ins to run; empty means every registered plug-in.
  std::vector<std::string> plugins;
  size_t parallelism = 4;
  // Transient extractor errors are retried this many times, sleeping
  // backoff * 2^attempt between tries.
  int max_retries = 3;
  std::chrono::milliseconds backoff{100};
};

/// Runs ingest jobs on background threads. Each entry goes through
/// load -> sha256 -> (cache or decode + extract per plug-in) -> commit. Workers
/// process entries in any order but commit strictly in manifest order, so
/// the final catalog and indexes do not depend on parallelism. A commit
/// writes the catalog record and then every vector while holding the commit
/// mutex, so queries never see an entry with only some of its vectors.
class JobManager {
 public:
  explicit JobManager(IngestTargets targets);
  ~JobManager();  // cancels running jobs and joins them

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  /// Validates the plug-in list (Error(kValidation) for an unknown name) and
  /// starts the job.
  std::string submit(CollectionManifest manifest, IngestOptions options = {});
  /// An unreadable manifest yields a job in state failed rather than an exception.
  std::string submit_file(const std::filesystem::path& manifest, const std::string& collection_id,
                          IngestOptions options = {});

  /// Throws Error(kNotFound).
  JobStatus status(const std::string& job_id) const;
  JobStatus wait(const std::string& job_id) const;
  std::vector<JobStatus> list() const;

  /// Stops scheduling new entries; entries already committed stay. The job
  /// ends as failed with message "cancelled".
  void cancel(const std::string& job_id);

 private:
  struct Job;
  std::shared_ptr<Job> find(const std::string& job_id) const;
  std::string start(std::shared_ptr<Job> job);
  void run(Job& job);

  IngestTargets targets_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  uint64_t next_id_ = 1;
};

/// Synchronous convenience wrapper: submit and wait.
JobStatus run_ingest(const IngestTargets& targets, CollectionManifest manifest, IngestOptions options = {});

}  // namespace artsearch::ingest
