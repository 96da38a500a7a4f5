#include "artsearch/service/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "artsearch/common/error.hpp"

namespace artsearch::service {
namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
    const auto mark = at.Mark();
    const int line = mark.line >= 0 ? mark.line + 1 : 1;
    throw_validation(fmt::format("{}:{}: {}", source_, line, message), {{"line", std::to_string(line)}});
  }

  void only_keys(const YAML::Node& map, const std::string& where, std::initializer_list<const char*> keys) const {
    if (!map.IsMap()) fail(map, fmt::format("{} must be a mapping", where));
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool known = false;
      for (const char* k : keys) known = known || key == k;
      if (!known) fail(kv.first, fmt::format("unknown key '{}' in {}", key, where));
    }
  }

  std::string str(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, fmt::format("{} must be a string", what));
    return n.Scalar();
  }

  int64_t integer(const YAML::Node& n, const std::string& what, int64_t lo, int64_t hi) const {
    int64_t v = 0;
    if (!n.IsScalar() || !YAML::convert<int64_t>::decode(n, v)) fail(n, fmt::format("{} must be an integer", what));
    if (v < lo || v > hi) fail(n, fmt::format("{} must lie in [{}, {}]", what, lo, hi));
    return v;
  }

 private:
  std::string source_;
};

}  // namespace

std::vector<catalog::FacetDefinition> default_facets() {
  return {{"artist", catalog::FacetKind::kCategorical, "Artist"},
          {"genre", catalog::FacetKind::kCategorical, "Genre"},
          {"year", catalog::FacetKind::kNumericYear, "Year"}};
}

void parse_listen(std::string_view listen, ServerConfig& config) {
  const auto colon = listen.rfind(':');
  if (colon == std::string_view::npos) throw_validation(fmt::format("listen address '{}' needs host:port", listen));
  const std::string port(listen.substr(colon + 1));
  char* end = nullptr;
  const long p = std::strtol(port.c_str(), &end, 10);
  if (port.empty() || *end != '\0' || p < 0 || p > 65535)
    throw_validation(fmt::format("listen address '{}' has an invalid port", listen));
  const auto host = listen.substr(0, colon);
  config.host = host.empty() ? "0.0.0.0" : std::string(host);
  config.port = static_cast<int>(p);
}

ServerConfig parse_config(std::string_view yaml, const std::string& source, const std::filesystem::path& base_dir) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw_validation(fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg), {{"line", std::to_string(e.mark.line + 1)}});
  }
  ServerConfig c;
  if (root.IsNull()) return c;
  r.only_keys(root, "the config", {"listen", "data_dir", "plugins", "facets", "limits", "index", "query", "ingest", "http"});

  if (const auto n = root["listen"]) {
    try {
      parse_listen(r.str(n, "listen"), c);
    } catch (const Error& e) {
      r.fail(n, e.what());
    }
  }
  if (const auto n = root["data_dir"]) {
    c.data_dir = r.str(n, "data_dir");
    if (c.data_dir.is_relative() && !base_dir.empty()) c.data_dir = base_dir / c.data_dir;
  }
  if (const auto n = root["plugins"]) {
    if (!n.IsSequence()) r.fail(n, "plugins must be a list");
    std::set<std::string> seen;
    for (const auto& p : n) {
      r.only_keys(p, "a plugin entry", {"name", "backend", "timeout_ms"});
      if (!p["name"]) r.fail(p, "plugin entry needs a name");
      PluginConfig pc;
      pc.name = r.str(p["name"], "plugin name");
      if (!seen.insert(pc.name).second) r.fail(p["name"], fmt::format("plugin '{}' listed twice", pc.name));
      if (const auto b = p["backend"]) {
        pc.backend = r.str(b, "backend");
        if (pc.backend != "builtin" && pc.backend.rfind("http://", 0) != 0)
          r.fail(b, "backend must be 'builtin' or an http:// URL");
      }
      if (const auto t = p["timeout_ms"]) pc.timeout = std::chrono::milliseconds(r.integer(t, "timeout_ms", 1, 600'000));
      c.plugins.push_back(std::move(pc));
    }
  }
  if (const auto n = root["facets"]) {
    if (!n.IsSequence()) r.fail(n, "facets must be a list");
    c.facets.clear();
    std::set<std::string> seen;
    for (const auto& f : n) {
      r.only_keys(f, "a facet entry", {"field", "kind", "display_name"});
      if (!f["field"]) r.fail(f, "facet entry needs a field");
      catalog::FacetDefinition def;
      def.field = r.str(f["field"], "facet field");
      if (def.field.empty() || def.field.rfind("auto:", 0) == 0) r.fail(f["field"], "facet field must be non-empty and not start with 'auto:'");
      if (!seen.insert(def.field).second) r.fail(f["field"], fmt::format("facet '{}' listed twice", def.field));
      if (const auto k = f["kind"]) {
        const auto kind = r.str(k, "facet kind");
        if (kind == "categorical") def.kind = catalog::FacetKind::kCategorical;
        else if (kind == "numeric-year") def.kind = catalog::FacetKind::kNumericYear;
        else r.fail(k, "facet kind must be 'categorical' or 'numeric-year'");
      }
      def.display_name = f["display_name"] ? r.str(f["display_name"], "display_name") : def.field;
      c.facets.push_back(std::move(def));
    }
  }
  if (const auto n = root["limits"]) {
    r.only_keys(n, "limits", {"max_upload_bytes", "max_page_size", "upload_ttl_seconds"});
    if (const auto v = n["max_upload_bytes"]) c.max_upload_bytes = r.integer(v, "max_upload_bytes", 1, int64_t{1} << 32);
    if (const auto v = n["max_page_size"]) c.max_page_size = r.integer(v, "max_page_size", 1, 500);
    if (const auto v = n["upload_ttl_seconds"]) c.upload_ttl = std::chrono::seconds(r.integer(v, "upload_ttl_seconds", 1, 86'400 * 30));
  }
  if (const auto n = root["index"]) {
    r.only_keys(n, "index", {"structure", "max_degree", "ef_construction", "ef_search", "seed"});
    if (const auto v = n["structure"]) {
      const auto s = r.str(v, "structure");
      if (s == "graph") c.index_structure = index::Structure::kGraph;
      else if (s == "flat") c.index_structure = index::Structure::kFlat;
      else r.fail(v, "structure must be 'graph' or 'flat'");
    }
    if (const auto v = n["max_degree"]) c.graph.max_degree = r.integer(v, "max_degree", 2, 256);
    if (const auto v = n["ef_construction"]) c.graph.ef_construction = r.integer(v, "ef_construction", 1, 10'000);
    if (const auto v = n["ef_search"]) c.graph.ef_search = r.integer(v, "ef_search", 1, 10'000);
    if (const auto v = n["seed"]) c.graph.seed = r.integer(v, "seed", 0, INT64_MAX);
  }
  if (const auto n = root["query"]) {
    r.only_keys(n, "query", {"min_depth", "layout_cap"});
    if (const auto v = n["min_depth"]) c.min_depth = r.integer(v, "min_depth", 1, 1'000'000);
    if (const auto v = n["layout_cap"]) c.layout_cap = r.integer(v, "layout_cap", 1, 100'000);
  }
  if (const auto n = root["ingest"]) {
    r.only_keys(n, "ingest", {"parallelism", "max_retries"});
    if (const auto v = n["parallelism"]) c.ingest_parallelism = r.integer(v, "parallelism", 1, 256);
    if (const auto v = n["max_retries"]) c.ingest_max_retries = r.integer(v, "max_retries", 0, 20);
  }
  if (const auto n = root["http"]) {
    r.only_keys(n, "http", {"threads"});
    if (const auto v = n["threads"]) c.http_threads = r.integer(v, "threads", 1, 1024);
  }
  return c;
}

ServerConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.filename().string(), path.parent_path());
}

void apply_env_overrides(ServerConfig& config, const EnvLookup& getenv) {
  if (const auto listen = getenv("ARTSEARCH_LISTEN")) {
    try {
      parse_listen(*listen, config);
    } catch (const Error& e) {
      throw_validation(fmt::format("ARTSEARCH_LISTEN: {}", e.what()));
    }
  }
  if (const auto dir = getenv("ARTSEARCH_DATA_DIR")) {
    if (dir->empty()) throw_validation("ARTSEARCH_DATA_DIR is empty");
    config.data_dir = *dir;
  }
}

void apply_env_overrides(ServerConfig& config) {
  apply_env_overrides(config, [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    return v ? std::optional<std::string>(v) : std::nullopt;
  });
}

}  // namespace artsearch::service
