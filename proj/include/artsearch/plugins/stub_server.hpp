#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "artsearch/plugins/manifest.hpp"

namespace httplib {
class Server;
}

namespace artsearch::plugins {

/// Fixture plug-ins served by the stub next to the builtins.
///   fixture-labels  classifier, image+text, dim 4: vector (0.5, 0.5, 0.5, 0.5)
///                   and labels [("saint", 0.75), ("arrow", 0.5)] for every input.
///   fixture-drift   feature, image+text, dim 4, declared non-deterministic: the
///                   vector rotates with every request the stub answers.
inline const std::vector<float> kFixtureVector = {0.5f, 0.5f, 0.5f, 0.5f};
inline const std::vector<Label> kFixtureLabels = {{"saint", 0.75f}, {"arrow", 0.5f}};
std::shared_ptr<Extractor> make_fixture_labels();

/// In-process inference server speaking the wire protocol, for tests and the
/// `stub-server` CLI command. Supports latency and failure injection.
class InferenceStubServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
    bool builtins = true;
    bool fixtures = true;
  };

  InferenceStubServer();
  explicit InferenceStubServer(Options options);
  ~InferenceStubServer();

  InferenceStubServer(const InferenceStubServer&) = delete;
  InferenceStubServer& operator=(const InferenceStubServer&) = delete;

  void add(std::shared_ptr<Extractor> extractor);

  /// Binds and serves on a background thread.
  void start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

  int port() const noexcept { return port_; }
  std::string endpoint() const;

  /// The next `n` extract requests answer `status` without doing any work.
  void fail_next(size_t n, int status = 503);
  /// Delay applied before answering every extract request.
  void set_latency(std::chrono::milliseconds latency);
  void set_healthy(bool healthy);
  uint64_t extract_requests() const noexcept { return extract_requests_.load(); }
  uint64_t extracted_items() const noexcept { return extracted_items_.load(); }
  /// Highest number of extract requests observed in flight at once.
  uint64_t peak_concurrency() const noexcept { return peak_.load(); }

 private:
  void bind();
  void install_routes();

  Options options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Extractor>> plugins_;
  std::atomic<size_t> failures_left_{0};
  std::atomic<int> failure_status_{503};
  std::atomic<int64_t> latency_ms_{0};
  std::atomic<bool> healthy_{true};
  std::atomic<uint64_t> extract_requests_{0};
  std::atomic<uint64_t> extracted_items_{0};
  std::atomic<uint64_t> active_{0};
  std::atomic<uint64_t> peak_{0};
};

}  // namespace artsearch::plugins
