#include "artsearch/ingest/jobs.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "artsearch/common/error.hpp"
#include "artsearch/common/hashing.hpp"
#include "artsearch/plugins/image.hpp"

namespace artsearch::ingest {

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::kPending: return "pending";
    case JobState::kRunning: return "running";
    case JobState::kCompleted: return "completed";
    case JobState::kPartiallyCompleted: return "partially-completed";
    case JobState::kFailed: return "failed";
  }
  return "unknown";
}

nlohmann::json to_json(const JobStatus& s) {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : s.errors) errors.push_back({{"line", e.line}, {"id", e.id}, {"message", e.message}});
  nlohmann::json j{{"job_id", s.job_id},
                   {"collection_id", s.collection_id},
                   {"state", to_string(s.state)},
                   {"total", s.total},
                   {"processed", s.processed},
                   {"failed", s.failed},
                   {"unchanged", s.unchanged},
                   {"extraction_calls", s.extraction_calls},
                   {"cache_hits", s.cache_hits},
                   {"errors", std::move(errors)}};
  if (!s.message.empty()) j["message"] = s.message;
  if (s.started_at) j["started_at"] = format_timestamp(*s.started_at);
  if (s.finished_at) j["finished_at"] = format_timestamp(*s.finished_at);
  return j;
}

std::vector<uint8_t> default_image_loader(const std::string& image, const std::filesystem::path& base_dir) {
  if (image.rfind("https://", 0) == 0) throw_validation("https image URLs are not supported; use http:// or a file");
  if (image.rfind("http://", 0) == 0) {
    const auto slash = image.find('/', 7);
    const std::string origin = image.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : image.substr(slash);
    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    const auto res = client.Get(path);
    if (!res) throw Error(ErrorCode::kTransient, fmt::format("cannot fetch '{}': {}", image, httplib::to_string(res.error())));
    if (res->status != 200) throw Error(ErrorCode::kIo, fmt::format("fetching '{}' returned HTTP {}", image, res->status));
    return {res->body.begin(), res->body.end()};
  }
  std::filesystem::path p(image);
  if (p.is_relative()) p = base_dir / p;
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read image '{}'", image));
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, fmt::format("error while reading image '{}'", image));
  return bytes;
}

namespace {

struct Prepared {
  size_t line = 0;
  std::optional<EntryError> error;
  catalog::ImageDocument doc;
  std::map<std::string, std::vector<float>> vectors;  // feature plug-ins
  size_t extraction_calls = 0;
  size_t cache_hits = 0;
};

void insert_error(std::vector<EntryError>& errors, EntryError e) {
  const auto at = std::upper_bound(errors.begin(), errors.end(), e.line,
                                   [](size_t line, const EntryError& x) { return line < x.line; });
  errors.insert(at, std::move(e));
}

}  // namespace

struct JobManager::Job {
  CollectionManifest manifest;
  IngestOptions options;
  std::vector<plugins::PluginManifest> plugins;  // sorted by name, image-capable

  mutable std::mutex mu;
  mutable std::condition_variable cv;
  JobStatus status;
  std::atomic<bool> cancelled{false};
  std::thread thread;

  // Ordered commit.
  std::mutex order_mu;
  std::vector<std::optional<Prepared>> slots;
  size_t next_commit = 0;
  bool committing = false;
};

JobManager::JobManager(IngestTargets targets) : targets_(std::move(targets)) {
  if (!targets_.catalog || !targets_.indexes || !targets_.plugins || !targets_.cache || !targets_.commit_mutex) {
    throw Error(ErrorCode::kInternal, "ingestion needs a catalog, indexes, plug-ins, a cache and a commit mutex");
  }
  if (!targets_.loader) targets_.loader = default_image_loader;
}

JobManager::~JobManager() {
  std::vector<std::shared_ptr<Job>> jobs;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, job] : jobs_) jobs.push_back(job);
  }
  for (auto& job : jobs) job->cancelled = true;
  for (auto& job : jobs) {
    if (job->thread.joinable()) job->thread.join();
  }
}

std::string JobManager::submit(CollectionManifest manifest, IngestOptions options) {
  auto job = std::make_shared<Job>();
  const auto available = targets_.plugins->list();
  if (options.plugins.empty()) {
    for (const auto& m : available) {
      if (m.supports(plugins::Modality::kImage)) job->plugins.push_back(m);
    }
  } else {
    for (const auto& name : options.plugins) {
      const auto it = std::find_if(available.begin(), available.end(), [&](const auto& m) { return m.name == name; });
      if (it == available.end()) throw_validation(fmt::format("unknown plug-in '{}'", name), {{"plugin", name}});
      if (!it->supports(plugins::Modality::kImage)) {
        throw_validation(fmt::format("plug-in '{}' cannot process images", name), {{"plugin", name}});
      }
      if (std::none_of(job->plugins.begin(), job->plugins.end(), [&](const auto& m) { return m.name == name; })) {
        job->plugins.push_back(*it);
      }
    }
    std::sort(job->plugins.begin(), job->plugins.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  }
  options.parallelism = std::max<size_t>(options.parallelism, 1);
  job->status.collection_id = manifest.collection_id;
  job->status.total = manifest.total();
  job->manifest = std::move(manifest);
  job->options = std::move(options);
  return start(std::move(job));
}

std::string JobManager::submit_file(const std::filesystem::path& manifest, const std::string& collection_id,
                                    IngestOptions options) {
  try {
    return submit(load_manifest(manifest, collection_id), std::move(options));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kIo) throw;
    auto job = std::make_shared<Job>();
    job->status.collection_id = collection_id;
    job->status.state = JobState::kFailed;
    job->status.message = e.what();
    job->status.started_at = job->status.finished_at = now_utc();
    std::lock_guard lock(mu_);
    const std::string id = fmt::format("job-{:06d}", next_id_++);
    job->status.job_id = id;
    jobs_[id] = std::move(job);
    return id;
  }
}

std::string JobManager::start(std::shared_ptr<Job> job) {
  std::lock_guard lock(mu_);
  const std::string id = fmt::format("job-{:06d}", next_id_++);
  job->status.job_id = id;
  jobs_[id] = job;
  job->thread = std::thread([this, job] { run(*job); });
  return id;
}

std::shared_ptr<JobManager::Job> JobManager::find(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw_not_found(fmt::format("job '{}' not found", job_id));
  return it->second;
}

JobStatus JobManager::status(const std::string& job_id) const {
  const auto job = find(job_id);
  std::lock_guard lock(job->mu);
  return job->status;
}

JobStatus JobManager::wait(const std::string& job_id) const {
  const auto job = find(job_id);
  std::unique_lock lock(job->mu);
  job->cv.wait(lock, [&] { return terminal(job->status.state); });
  return job->status;
}

std::vector<JobStatus> JobManager::list() const {
  std::vector<std::shared_ptr<Job>> jobs;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, job] : jobs_) jobs.push_back(job);
  }
  std::vector<JobStatus> out;
  for (const auto& job : jobs) {
    std::lock_guard lock(job->mu);
    out.push_back(job->status);
  }
  return out;
}

void JobManager::cancel(const std::string& job_id) { find(job_id)->cancelled = true; }

void JobManager::run(Job& job) {
  {
    std::lock_guard lock(job.mu);
    job.status.state = JobState::kRunning;
    job.status.started_at = now_utc();
    job.status.failed = job.manifest.errors.size();
    for (const auto& e : job.manifest.errors) insert_error(job.status.errors, e);
  }
  job.cv.notify_all();

  const auto& entries = job.manifest.entries;
  job.slots.resize(entries.size());

  const auto prepare = [&](const ManifestEntry& entry) {
    Prepared r;
    r.line = entry.line;
    const auto fail = [&](const std::string& message) {
      r.error = EntryError{entry.line, entry.id, fmt::format("line {} ({}): {}", entry.line, entry.id, message)};
      return std::move(r);
    };
    std::vector<uint8_t> bytes;
    try {
      bytes = targets_.loader(entry.image, job.manifest.base_dir);
    } catch (const std::exception& e) {
      return fail(e.what());
    }
    const std::string hash = sha256_hex(std::span<const uint8_t>(bytes));
    bool decoded = false;
    r.doc = {.doc_id = entry.id,
             .collection_id = job.manifest.collection_id,
             .image_ref = entry.image,
             .title = entry.title,
             .metadata = entry.metadata,
             .content_hash = hash};
    for (const auto& plugin : job.plugins) {
      auto cached = targets_.cache->lookup(plugin.name, plugin.version, hash);
      if (cached) {
        ++r.cache_hits;
      } else {
        if (!decoded) {
          try {
            plugins::decode_image(bytes);
          } catch (const Error& e) {
            return fail(fmt::format("undecodable image: {}", e.what()));
          }
          decoded = true;
        }
        const plugins::ExtractionInput input = plugins::ExtractionInput::of_image(bytes);
        for (int attempt = 0;; ++attempt) {
          ErrorCode code = ErrorCode::kInternal;
          std::string message;
          ++r.extraction_calls;
          try {
            auto outcome = targets_.plugins->extract(plugin.name, std::span(&input, 1)).at(0);
            if (outcome.ok()) {
              cached = CachedFeature{std::move(outcome.vector), std::move(outcome.labels)};
              break;
            }
            code = *outcome.error;
            message = outcome.error_message;
          } catch (const Error& e) {
            code = e.code();
            message = e.what();
          }
          if (code != ErrorCode::kTransient || attempt >= job.options.max_retries || job.cancelled) {
            return fail(fmt::format("plug-in '{}' failed after {} attempt(s): {}", plugin.name, attempt + 1, message));
          }
          std::this_thread::sleep_for(job.options.backoff * (1 << attempt));
        }
        targets_.cache->store(plugin.name, plugin.version, hash, *cached);
      }
      if (plugin.kind == plugins::PluginKind::kClassifier) {
        if (!cached->labels.empty()) {
          auto& field = r.doc.metadata["auto:" + plugin.name];
          for (const auto& l : cached->labels) field.push_back(l.keyword);
        }
      } else {
        r.vectors[plugin.name] = std::move(cached->vector);
      }
    }
    catalog::normalize(r.doc);
    return r;
  };

  const auto commit = [&](Prepared& r) {
    bool unchanged = false;
    std::optional<EntryError> error = std::move(r.error);
    if (!error) {
      std::unique_lock lock(*targets_.commit_mutex);
      const auto snap = targets_.catalog->snapshot();
      if (const auto* old = snap->find(r.doc.doc_id)) {
        unchanged = old->collection_id == r.doc.collection_id && old->image_ref == r.doc.image_ref &&
                    old->title == r.doc.title && old->metadata == r.doc.metadata &&
                    old->content_hash == r.doc.content_hash;
        for (const auto& [name, v] : r.vectors) {
          if (!unchanged) break;
          const auto* idx = targets_.indexes->find(name);
          unchanged = idx && idx->get(r.doc.doc_id) == v;
        }
      }
      if (!unchanged) {
        try {
          for (const auto& [name, v] : r.vectors) {
            const auto* idx = targets_.indexes->find(name);
            if (idx && idx->config().dim != v.size()) {
              throw_validation(fmt::format("plug-in '{}' produced dimension {} but its index holds {}", name, v.size(),
                                           idx->config().dim));
            }
          }
          r.doc.ingested_at = now_utc();
          targets_.catalog->upsert(r.doc);
          for (const auto& [name, v] : r.vectors) {
            targets_.indexes->get_or_create(name, static_cast<uint32_t>(v.size())).insert(r.doc.doc_id, v);
          }
        } catch (const Error& e) {
          error = EntryError{r.line, r.doc.doc_id, fmt::format("{}: commit failed: {}", r.doc.doc_id, e.what())};
        }
      }
    }
    {
      std::lock_guard lock(job.mu);
      job.status.extraction_calls += r.extraction_calls;
      job.status.cache_hits += r.cache_hits;
      if (error) {
        ++job.status.failed;
        insert_error(job.status.errors, std::move(*error));
      } else {
        ++job.status.processed;
        job.status.unchanged += unchanged;
      }
    }
    job.cv.notify_all();
  };

  std::atomic<size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= entries.size() || job.cancelled) return;
      Prepared r = prepare(entries[i]);
      std::unique_lock lock(job.order_mu);
      job.slots[i] = std::move(r);
      if (job.committing) continue;
      job.committing = true;
      while (job.next_commit < entries.size() && job.slots[job.next_commit]) {
        Prepared ready = std::move(*job.slots[job.next_commit]);
        job.slots[job.next_commit].reset();
        ++job.next_commit;
        lock.unlock();
        commit(ready);
        lock.lock();
      }
      job.committing = false;
    }
  };
  std::vector<std::thread> workers;
  const size_t n = std::min(job.options.parallelism, std::max<size_t>(entries.size(), 1));
  for (size_t t = 0; t < n; ++t) workers.emplace_back(worker);
  for (auto& w : workers) w.join();

  std::string persist_error;
  if (targets_.index_dir) {
    try {
      std::shared_lock lock(*targets_.commit_mutex);
      targets_.indexes->persist_all(*targets_.index_dir);
    } catch (const Error& e) {
      persist_error = fmt::format("persisting indexes failed: {}", e.what());
    }
  }

  {
    std::lock_guard lock(job.mu);
    auto& s = job.status;
    if (job.cancelled) {
      s.state = JobState::kFailed;
      s.message = "cancelled";
    } else if (!persist_error.empty()) {
      s.state = JobState::kFailed;
      s.message = persist_error;
    } else if (s.failed == 0) {
      s.state = JobState::kCompleted;
    } else {
      s.state = s.processed == 0 ? JobState::kFailed : JobState::kPartiallyCompleted;
    }
    s.finished_at = now_utc();
    spdlog::info("ingest {} ({}): {} processed, {} failed, {} unchanged, {} extraction calls", s.job_id,
                 to_string(s.state), s.processed, s.failed, s.unchanged, s.extraction_calls);
  }
  job.cv.notify_all();
}

JobStatus run_ingest(const IngestTargets& targets, CollectionManifest manifest, IngestOptions options) {
  JobManager jobs(targets);
  return jobs.wait(jobs.submit(std::move(manifest), std::move(options)));
}

}  // namespace artsearch::ingest
