#include "artsearch/plugins/stub_server.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "artsearch/plugins/builtin.hpp"
#include "artsearch/plugins/protocol.hpp"

namespace artsearch::plugins {
namespace {

class FixtureExtractor : public Extractor {
 public:
  FixtureExtractor(PluginManifest m, bool drift) : manifest_(std::move(m)), drift_(drift) {}

  const PluginManifest& manifest() const override { return manifest_; }
  std::string taxonomy() const override { return manifest_.kind == PluginKind::kClassifier ? "iconclass-style" : ""; }

  std::vector<ItemOutcome> extract(std::span<const ExtractionInput> inputs) override {
    std::vector<float> v = kFixtureVector;
    if (drift_) {
      const uint64_t turn = calls_++ % 4;
      v = {0.0f, 0.0f, 0.0f, 0.0f};
      v[turn] = 1.0f;
    }
    std::vector<ItemOutcome> out;
    for (size_t i = 0; i < inputs.size(); ++i) {
      out.push_back({v, drift_ ? std::vector<Label>{} : kFixtureLabels, std::nullopt, {}});
    }
    return out;
  }

 private:
  PluginManifest manifest_;
  bool drift_;
  std::atomic<uint64_t> calls_{0};
};

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
}

}  // namespace

std::shared_ptr<Extractor> make_fixture_labels() {
  return std::make_shared<FixtureExtractor>(
      PluginManifest{"fixture-labels", "1", {Modality::kImage, Modality::kText}, 4, PluginKind::kClassifier, true},
      false);
}

InferenceStubServer::InferenceStubServer() : InferenceStubServer(Options{}) {}

InferenceStubServer::InferenceStubServer(Options options) : options_(std::move(options)) {
  if (options_.builtins) {
    for (const auto& id : builtin_names()) add(make_builtin(id));
  }
  if (options_.fixtures) {
    add(make_fixture_labels());
    add(std::make_shared<FixtureExtractor>(
        PluginManifest{"fixture-drift", "1", {Modality::kImage, Modality::kText}, 4, PluginKind::kFeature, false},
        true));
  }
}

InferenceStubServer::~InferenceStubServer() { stop(); }

void InferenceStubServer::add(std::shared_ptr<Extractor> extractor) {
  std::lock_guard lock(mu_);
  plugins_[extractor->manifest().name] = std::move(extractor);
}

std::string InferenceStubServer::endpoint() const { return fmt::format("http://{}:{}", options_.host, port_); }

void InferenceStubServer::fail_next(size_t n, int status) {
  failure_status_ = status;
  failures_left_ = n;
}

void InferenceStubServer::set_latency(std::chrono::milliseconds latency) { latency_ms_ = latency.count(); }
void InferenceStubServer::set_healthy(bool healthy) { healthy_ = healthy; }

void InferenceStubServer::install_routes() {
  server_->Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    protocol::HealthResponse h;
    h.status = healthy_ ? "ok" : "degraded";
    {
      std::lock_guard lock(mu_);
      for (const auto& [name, ext] : plugins_) h.plugins.push_back(ext->manifest());
    }
    res.set_content(protocol::encode(h).dump(), "application/json");
  });

  server_->Post("/v1/extract", [this](const httplib::Request& req, httplib::Response& res) {
    ++extract_requests_;
    const uint64_t now = ++active_;
    uint64_t peak = peak_.load();
    while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
    }
    struct Leave {
      std::atomic<uint64_t>& a;
      ~Leave() { --a; }
    } leave{active_};

    if (const auto ms = latency_ms_.load(); ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    for (size_t left = failures_left_.load(); left > 0;) {
      if (failures_left_.compare_exchange_weak(left, left - 1)) {
        reply_error(res, failure_status_, "injected failure");
        return;
      }
    }
    try {
      const auto request = protocol::decode_request(nlohmann::json::parse(req.body));
      std::shared_ptr<Extractor> ext;
      {
        std::lock_guard lock(mu_);
        const auto it = plugins_.find(request.plugin);
        if (it == plugins_.end()) return reply_error(res, 400, fmt::format("plugin '{}' is not served", request.plugin));
        ext = it->second;
      }
      const auto& m = ext->manifest();
      for (const auto& in : request.inputs) {
        if (!m.supports(in.kind)) return reply_error(res, 400, fmt::format("plugin '{}' does not accept {} input", m.name, to_string(in.kind)));
      }
      auto outcomes = ext->extract(request.inputs);
      protocol::ExtractResponse response;
      response.dim = m.vector_dim;
      response.model_version = m.version;
      bool any_labels = m.kind == PluginKind::kClassifier;
      for (size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok()) {
          return reply_error(res, 400, fmt::format("input {}: {}", i, outcomes[i].error_message));
        }
        any_labels = any_labels || !outcomes[i].labels.empty();
      }
      if (any_labels) response.labels.emplace();
      for (auto& o : outcomes) {
        response.vectors.push_back(std::move(o.vector));
        if (any_labels) response.labels->push_back(std::move(o.labels));
      }
      extracted_items_ += outcomes.size();
      res.set_content(protocol::encode(response).dump(), "application/json");
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, std::string("request is not valid JSON: ") + e.what());
    } catch (const Error& e) {
      reply_error(res, e.code() == ErrorCode::kValidation ? 400 : 503, e.what());
    }
  });
}

void InferenceStubServer::bind() {
  server_ = std::make_unique<httplib::Server>();
  install_routes();
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else {
    port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) throw Error(ErrorCode::kIo, fmt::format("stub server cannot bind {}:{}", options_.host, options_.port));
}

void InferenceStubServer::start() {
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void InferenceStubServer::run() {
  bind();
  spdlog::info("inference stub listening on {}", endpoint());
  server_->listen_after_bind();
}

void InferenceStubServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace artsearch::plugins
