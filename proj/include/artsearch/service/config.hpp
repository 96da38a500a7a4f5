#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artsearch/catalog/facets.hpp"
#include "artsearch/index/vector_index.hpp"

namespace artsearch::service {

struct PluginConfig {
  std::string name;
  // "builtin" or the base URL of an inference endpoint.
  std::string backend = "builtin";
  std::chrono::milliseconds timeout{30'000};
};

/// Default facets when a config names none: artist, genre, year.
std::vector<catalog::FacetDefinition> default_facets();

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::vector<PluginConfig> plugins;  // empty: every builtin
  std::vector<catalog::FacetDefinition> facets = default_facets();
  size_t max_upload_bytes = 16u << 20;
  size_t max_page_size = 500;
  std::chrono::seconds upload_ttl{3600};
  index::Structure index_structure = index::Structure::kGraph;
  index::GraphParams graph;
  size_t min_depth = 200;
  size_t layout_cap = 1000;
  size_t ingest_parallelism = 4;
  int ingest_max_retries = 3;
  size_t http_threads = 16;
};

/// Parses the YAML config format documented in docs/config.md. Errors are
/// Error(kValidation) with messages of the form "<source>:<line>: ...";
/// relative data_dir values resolve against `base_dir`.
ServerConfig parse_config(std::string_view yaml, const std::string& source = "config",
                          const std::filesystem::path& base_dir = {});
ServerConfig load_config(const std::filesystem::path& path);

/// ARTSEARCH_LISTEN ("host:port") and ARTSEARCH_DATA_DIR take precedence over
/// the file. `getenv` is injectable for tests.
using EnvLookup = std::function<std::optional<std::string>(const char*)>;
void apply_env_overrides(ServerConfig& config, const EnvLookup& getenv);
void apply_env_overrides(ServerConfig& config);

/// "host:port" or ":port"; throws Error(kValidation).
void parse_listen(std::string_view listen, ServerConfig& config);

}  // namespace artsearch::service
