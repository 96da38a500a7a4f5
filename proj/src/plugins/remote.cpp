#include "artsearch/plugins/remote.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include "artsearch/common/hashing.hpp"

namespace artsearch::plugins {
namespace {

// Splits "http://host:port/prefix" into the client origin and a path prefix.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  const auto path = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) return {endpoint, ""};
  std::string prefix = endpoint.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {endpoint.substr(0, path), prefix};
}

std::unique_ptr<httplib::Client> make_client(const std::string& origin, std::chrono::milliseconds timeout) {
  auto client = std::make_unique<httplib::Client>(origin);
  if (!client->is_valid()) throw_validation(fmt::format("invalid plugin endpoint '{}'", origin));
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return client;
}

std::string error_text(const httplib::Response& res) {
  try {
    const auto j = nlohmann::json::parse(res.body);
    if (j.contains("error") && j["error"].is_string()) return j["error"].get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return fmt::format("HTTP {}", res.status);
}

[[noreturn]] void throw_for_status(const std::string& what, const httplib::Response& res) {
  const auto code = res.status >= 500 ? ErrorCode::kTransient
                    : res.status >= 400 ? ErrorCode::kValidation
                                        : ErrorCode::kFormat;
  throw Error(code, fmt::format("{}: {}", what, error_text(res)), {{"status", std::to_string(res.status)}});
}

std::string content_key(const ExtractionInput& in) {
  return in.kind == Modality::kText ? "t:" + sha256_hex(in.text) : "i:" + sha256_hex(in.image);
}

}  // namespace

protocol::HealthResponse fetch_health(const std::string& endpoint, const RemoteOptions& options) {
  const auto [origin, prefix] = split_endpoint(endpoint);
  auto client = make_client(origin, options.timeout);
  const auto res = client->Get(prefix + "/v1/health");
  if (!res) {
    throw Error(ErrorCode::kTransient, fmt::format("plugin endpoint unreachable: {}", httplib::to_string(res.error())));
  }
  if (res->status != 200) throw_for_status("health check failed", *res);
  try {
    return protocol::decode_health(nlohmann::json::parse(res->body));
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::kFormat, "health response is not JSON");
  }
}

RemoteExtractor::RemoteExtractor(std::string endpoint, PluginManifest manifest, RemoteOptions options)
    : endpoint_(std::move(endpoint)),
      manifest_(std::move(manifest)),
      options_(options),
      in_flight_(std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(std::max<size_t>(1, options.max_in_flight)))) {
  if (options_.max_batch == 0) options_.max_batch = 1;
}

std::vector<ItemOutcome> RemoteExtractor::call(std::span<const ExtractionInput> inputs) {
  const auto [origin, prefix] = split_endpoint(endpoint_);
  const std::string body = protocol::encode(protocol::ExtractRequest{manifest_.name, {inputs.begin(), inputs.end()}}).dump();

  in_flight_->acquire();
  httplib::Result res = [&] {
    struct Release {
      std::counting_semaphore<>* s;
      ~Release() { s->release(); }
    } release{in_flight_.get()};
    ++requests_;
    return make_client(origin, options_.timeout)->Post(prefix + "/v1/extract", body, "application/json");
  }();
  const std::string what = fmt::format("remote plugin '{}'", manifest_.name);
  if (!res) {
    throw Error(ErrorCode::kTransient, fmt::format("{} unreachable: {}", what, httplib::to_string(res.error())));
  }
  if (res->status != 200) throw_for_status(what, *res);

  protocol::ExtractResponse response;
  try {
    response = protocol::decode_response(nlohmann::json::parse(res->body));
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::kFormat, what + " returned invalid JSON");
  }
  if (response.dim != manifest_.vector_dim) {
    throw Error(ErrorCode::kFormat, fmt::format("{} returned dim {} (registered {})", what, response.dim, manifest_.vector_dim));
  }
  if (response.vectors.size() != inputs.size()) {
    throw Error(ErrorCode::kFormat, fmt::format("{} returned {} vectors for {} inputs", what, response.vectors.size(), inputs.size()));
  }
  std::vector<ItemOutcome> out(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    out[i].vector = std::move(response.vectors[i]);
    if (response.labels) out[i].labels = std::move((*response.labels)[i]);
  }
  return out;
}

std::vector<ItemOutcome> RemoteExtractor::extract_uncached(std::span<const ExtractionInput> inputs) {
  std::vector<ItemOutcome> out;
  out.reserve(inputs.size());
  for (size_t start = 0; start < inputs.size(); start += options_.max_batch) {
    const auto batch = inputs.subspan(start, std::min(options_.max_batch, inputs.size() - start));
    try {
      auto part = call(batch);
      std::move(part.begin(), part.end(), std::back_inserter(out));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kValidation) throw;
      if (batch.size() == 1) {
        out.push_back(ItemOutcome::failure(e.code(), e.what()));
        continue;
      }
      // Isolate the offending items.
      for (size_t i = 0; i < batch.size(); ++i) {
        try {
          out.push_back(std::move(call(batch.subspan(i, 1))[0]));
        } catch (const Error& single) {
          if (single.code() != ErrorCode::kValidation) throw;
          out.push_back(ItemOutcome::failure(single.code(), single.what()));
        }
      }
    }
  }
  return out;
}

std::vector<ItemOutcome> RemoteExtractor::extract(std::span<const ExtractionInput> inputs) {
  if (manifest_.deterministic) return extract_uncached(inputs);

  std::vector<ItemOutcome> out(inputs.size());
  std::vector<std::string> keys(inputs.size());
  std::vector<size_t> missing;
  {
    std::lock_guard lock(cache_mu_);
    for (size_t i = 0; i < inputs.size(); ++i) {
      keys[i] = content_key(inputs[i]);
      const auto it = cache_.find(keys[i]);
      if (it != cache_.end()) {
        out[i] = it->second;
      } else {
        missing.push_back(i);
      }
    }
  }
  if (missing.empty()) return out;
  std::vector<ExtractionInput> todo;
  for (size_t i : missing) todo.push_back(inputs[i]);
  auto fresh = extract_uncached(todo);
  std::lock_guard lock(cache_mu_);
  for (size_t j = 0; j < missing.size(); ++j) {
    const size_t i = missing[j];
    if (fresh[j].ok()) {
      // First answer wins if another thread raced us to the same input.
      out[i] = cache_.try_emplace(keys[i], std::move(fresh[j])).first->second;
    } else {
      out[i] = std::move(fresh[j]);
    }
  }
  return out;
}

}  // namespace artsearch::plugins
