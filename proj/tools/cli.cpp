#include "cli.hpp"

#include <csignal>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "artsearch/common/error.hpp"
#include "artsearch/index/bench.hpp"
#include "artsearch/ingest/demo.hpp"
#include "artsearch/ingest/jobs.hpp"
#include "artsearch/ingest/manifest.hpp"
#include "artsearch/plugins/stub_server.hpp"
#include "artsearch/query/engine.hpp"
#include "artsearch/service/api.hpp"
#include "artsearch/service/config.hpp"
#include "artsearch/service/http_server.hpp"
#include "artsearch/service/workspace.hpp"

namespace artsearch::cli {
namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
    case ErrorCode::kNotFound: return 1;
    case ErrorCode::kIo:
    case ErrorCode::kFormat:
    case ErrorCode::kIntegrity:
    case ErrorCode::kTransient:
    case ErrorCode::kRegistration: return 2;
    default: return 3;
  }
}

struct Common {
  std::string config;
  std::string data_dir;
  std::string log_level;
};

service::ServerConfig load(const Common& c) {
  auto config = c.config.empty() ? service::ServerConfig{} : service::load_config(c.config);
  service::apply_env_overrides(config);
  if (!c.data_dir.empty()) config.data_dir = c.data_dir;
  return config;
}

std::vector<uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read '{}'", path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// "value" or "value@weight".
std::pair<std::string, double> split_weight(const std::string& arg) {
  const auto at = arg.rfind('@');
  if (at != std::string::npos && at + 1 < arg.size()) {
    const std::string w = arg.substr(at + 1);
    char* end = nullptr;
    const double weight = std::strtod(w.c_str(), &end);
    if (*end == '\0') return {arg.substr(0, at), weight};
  }
  return {arg, 1.0};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct SearchArgs {
  std::vector<std::string> texts, images, docs, weights, filters, ranges;
  std::string keyword, layout;
  size_t limit = 20, offset = 0;
  bool json = false;
};

query::QuerySpec build_spec(const SearchArgs& a) {
  query::QuerySpec spec;
  for (const auto& t : a.texts) {
    auto [text, w] = split_weight(t);
    spec.terms.push_back({query::TextSource{text}, w});
  }
  for (const auto& i : a.images) {
    auto [path, w] = split_weight(i);
    spec.terms.push_back({query::ImageSource{read_bytes(path)}, w});
  }
  for (const auto& d : a.docs) {
    auto [id, w] = split_weight(d);
    spec.terms.push_back({query::DocSource{id}, w});
  }
  for (const auto& pw : a.weights) {
    for (const auto& item : split(pw, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw_validation(fmt::format("--weights expects plugin=weight, got '{}'", item));
      char* end = nullptr;
      const double w = std::strtod(item.c_str() + eq + 1, &end);
      if (*end != '\0' || eq + 1 == item.size()) throw_validation(fmt::format("bad weight in '{}'", item));
      spec.plugin_weights[item.substr(0, eq)] = w;
    }
  }
  for (const auto& f : a.filters) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw_validation(fmt::format("--filter expects field=v1|v2, got '{}'", f));
    spec.filters.push_back({f.substr(0, eq), split(f.substr(eq + 1), '|')});
  }
  for (const auto& r : a.ranges) {
    const auto eq = r.find('=');
    const auto colon = r.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos)
      throw_validation(fmt::format("--range expects field=lo:hi, got '{}'", r));
    try {
      spec.filters.push_back(
          {r.substr(0, eq), catalog::YearRange{std::stoll(r.substr(eq + 1, colon - eq - 1)), std::stoll(r.substr(colon + 1))}});
    } catch (const std::logic_error&) {
      throw_validation(fmt::format("--range bounds must be integers in '{}'", r));
    }
  }
  if (!a.keyword.empty()) spec.keyword_query = a.keyword;
  spec.limit = a.limit;
  spec.offset = a.offset;
  if (a.layout == "clusters") spec.layout = query::ClusterLayout{};
  if (a.layout == "canvas") spec.layout = query::CanvasLayout{};
  query::validate(spec);
  return spec;
}

void print_page(const query::ResultPage& page, std::ostream& out) {
  std::vector<std::string> plugins;
  for (const auto& p : page.diagnostics.plugins) {
    if (p.fused) plugins.push_back(p.plugin);
  }
  fmt::print(out, "{:>5}  {:<24} {:>10}", "rank", "doc_id", "score");
  for (const auto& p : plugins) fmt::print(out, " {:>12}", p);
  if (page.layout) fmt::print(out, "  {}", page.layout->kind == "clusters" ? "cluster" : "x, y");
  fmt::print(out, "\n");
  for (const auto& r : page.results) {
    fmt::print(out, "{:>5}  {:<24} {:>10.6f}", r.rank, r.doc_id, r.final_score);
    for (const auto& p : plugins) {
      const auto it = r.per_plugin.find(p);
      if (it == r.per_plugin.end()) {
        fmt::print(out, " {:>12}", "-");
      } else {
        fmt::print(out, " {:>12.6f}", it->second);
      }
    }
    if (r.cluster_id) fmt::print(out, "  {}", *r.cluster_id);
    if (r.coords) fmt::print(out, "  {:.4f}, {:.4f}", (*r.coords)[0], (*r.coords)[1]);
    fmt::print(out, "\n");
  }
  fmt::print(out, "{} of {} results ({} ranking)\n", page.results.size(), page.total, page.diagnostics.ranking);
}

int cmd_index(const Common& common, const std::string& manifest, std::string collection,
              const std::vector<std::string>& plugins, size_t parallelism, std::ostream& out, std::ostream& err) {
  auto config = load(common);
  if (parallelism) config.ingest_parallelism = parallelism;
  service::Workspace ws(config);
  if (collection.empty()) collection = "default";
  const auto id = ws.ingest(ingest::load_manifest(manifest, collection), plugins);
  const auto s = ws.jobs().wait(id);
  fmt::print(out, "{} {}: {} of {} processed ({} unchanged), {} failed, {} extraction calls, {} cache hits\n", s.job_id,
             ingest::to_string(s.state), s.processed, s.total, s.unchanged, s.failed, s.extraction_calls, s.cache_hits);
  for (const auto& e : s.errors) fmt::print(err, "error: {}\n", e.message);
  if (!s.message.empty()) fmt::print(err, "error: {}\n", s.message);
  return s.state == ingest::JobState::kFailed ? 2 : 0;
}

int cmd_search(const Common& common, const SearchArgs& args, std::ostream& out, std::ostream& err) {
  const auto spec = build_spec(args);
  service::Workspace ws(load(common));
  const auto page = ws.engine().execute(spec);
  for (const auto& w : page.diagnostics.warnings) fmt::print(err, "warning: {}\n", w);
  if (args.json) {
    fmt::print(out, "{}\n", query::to_json(page).dump(2));
  } else {
    print_page(page, out);
  }
  return 0;
}

sigset_t termination_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

// Serves until SIGINT or SIGTERM.
template <typename Server>
void serve_until_signal(Server& server) {
  const sigset_t set = termination_signals();
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  server.start();
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("signal {}, shutting down", sig);
  server.stop();
}

int cmd_serve(const Common& common, const std::string& listen) {
  auto config = load(common);
  if (!listen.empty()) service::parse_listen(listen, config);
  service::Workspace ws(config);
  service::Api api(ws);
  service::HttpServer server(api, config.host, config.port, config.http_threads, config.max_upload_bytes);
  struct Runner {
    service::HttpServer& s;
    const service::ServerConfig& c;
    void start() {
      s.start();
      spdlog::info("listening on http://{}:{} (data: {})", c.host, s.port(), c.data_dir.string());
    }
    void stop() { s.stop(); }
  } runner{server, config};
  serve_until_signal(runner);
  return 0;
}

int cmd_bench(const index::BenchOptions& opts, bool json, std::ostream& out) {
  const auto report = index::run_bench(opts, [](std::string_view stage, size_t done, size_t total) {
    if (stage == "build" && done % (total / 10 == 0 ? 1 : total / 10) == 0) spdlog::info("graph build {}/{}", done, total);
  });
  if (json) {
    fmt::print(out, "{}\n", index::to_json(report).dump(2));
    return 0;
  }
  fmt::print(out, "n={} dim={} queries={} k={} distribution={}\n", opts.n, opts.dim, opts.queries, opts.k,
             index::to_string(opts.distribution));
  fmt::print(out, "build: graph {:.2f} s, flat {:.2f} s\n", report.graph_build_seconds, report.flat_build_seconds);
  fmt::print(out, "{:<14} {:>10} {:>10} {:>10} {:>10}\n", "index", "recall@" + std::to_string(opts.k), "p50 ms",
             "p95 ms", "p99 ms");
  if (opts.build_flat) {
    const auto& f = report.flat_latency;
    fmt::print(out, "{:<14} {:>10.4f} {:>10.3f} {:>10.3f} {:>10.3f}\n", "flat", 1.0, f.p50_ms, f.p95_ms, f.p99_ms);
  }
  for (const auto& g : report.graph) {
    const std::string label = fmt::format("graph ef={}{}", g.ef, g.ef == report.default_ef ? "*" : "");
    fmt::print(out, "{:<14} {:>10.4f} {:>10.3f} {:>10.3f} {:>10.3f}\n", label, g.recall, g.latency.p50_ms,
               g.latency.p95_ms, g.latency.p99_ms);
  }
  fmt::print(out, "* default ef_search\n");
  return 0;
}

void configure_logging(const std::string& level) {
  spdlog::drop("artsearch");
  auto logger = spdlog::stderr_color_mt("artsearch");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal search over art image collections"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "YAML config file");
  app.add_option("--data-dir", common.data_dir, "Data directory (overrides config and ARTSEARCH_DATA_DIR)");
  app.add_option("--log-level", common.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  auto* index_cmd = app.add_subcommand("index", "Ingest a collection manifest into the data directory");
  std::string manifest, collection;
  std::vector<std::string> plugins;
  size_t parallelism = 0;
  index_cmd->add_option("--manifest", manifest, "JSON-lines manifest; image paths resolve against its directory")
      ->required()
      ->check(CLI::ExistingFile);
  index_cmd->add_option("--collection", collection, "Collection id (default: 'default')");
  index_cmd->add_option("--plugins", plugins, "Plug-ins to run (default: all)")->delimiter(',');
  index_cmd->add_option("--parallelism", parallelism, "Worker threads");

  auto* search_cmd = app.add_subcommand("search", "Query the data directory");
  SearchArgs sa;
  search_cmd->add_option("--text", sa.texts, "Text term, optionally TEXT@WEIGHT");
  search_cmd->add_option("--image", sa.images, "Image file term, optionally PATH@WEIGHT");
  search_cmd->add_option("--doc", sa.docs, "Catalogued document term, optionally ID@WEIGHT");
  search_cmd->add_option("--weights", sa.weights, "Plug-in weights p=w[,q=w]");
  search_cmd->add_option("--filter", sa.filters, "Facet filter field=v1|v2");
  search_cmd->add_option("--range", sa.ranges, "Year filter field=lo:hi");
  search_cmd->add_option("--keyword", sa.keyword, "Keyword constraint");
  search_cmd->add_option("--limit", sa.limit, "Page size")->capture_default_str();
  search_cmd->add_option("--offset", sa.offset, "Page offset")->capture_default_str();
  search_cmd->add_option("--layout", sa.layout, "grid, clusters or canvas")->check(CLI::IsMember({"grid", "clusters", "canvas"}));
  search_cmd->add_flag("--json", sa.json, "Print the result page as JSON");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  std::string listen;
  serve_cmd->add_option("--listen", listen, "host:port (overrides config and ARTSEARCH_LISTEN)");

  auto* bench_cmd = app.add_subcommand("bench", "Graph vs flat index recall and latency on synthetic vectors");
  index::BenchOptions bo;
  std::string distribution = "uniform";
  bool bench_json = false, no_flat = false;
  bench_cmd->add_option("--n", bo.n, "Vectors")->capture_default_str();
  bench_cmd->add_option("--dim", bo.dim, "Dimension")->capture_default_str();
  bench_cmd->add_option("--queries", bo.queries, "Queries")->capture_default_str();
  bench_cmd->add_option("--k", bo.k, "Neighbours per query")->capture_default_str();
  bench_cmd->add_option("--seed", bo.seed, "Data seed")->capture_default_str();
  bench_cmd->add_option("--distribution", distribution, "uniform or clustered")
      ->check(CLI::IsMember({"uniform", "clustered"}))
      ->capture_default_str();
  bench_cmd->add_option("--ef", bo.ef_values, "ef_search values to sweep")->delimiter(',');
  bench_cmd->add_option("--ef-search", bo.graph.ef_search, "Default ef_search")->capture_default_str();
  bench_cmd->add_option("--ef-construction", bo.graph.ef_construction, "Graph ef_construction")->capture_default_str();
  bench_cmd->add_option("--max-degree", bo.graph.max_degree, "Graph links per node")->capture_default_str();
  bench_cmd->add_flag("--no-flat", no_flat, "Skip the flat index; exact neighbours come from a direct scan");
  bench_cmd->add_flag("--json", bench_json, "Print the report as JSON");

  auto* stub_cmd = app.add_subcommand("stub-server", "Run the inference protocol stub with the builtin plug-ins");
  plugins::InferenceStubServer::Options so;
  so.port = 8081;
  stub_cmd->add_option("--host", so.host)->capture_default_str();
  stub_cmd->add_option("--port", so.port)->capture_default_str();

  auto* fixture_cmd = app.add_subcommand("fixture", "Write a demo collection (manifest and PNG images)");
  std::string fixture_out;
  size_t fixture_n = 48;
  uint64_t fixture_seed = 1;
  fixture_cmd->add_option("--out", fixture_out, "Output directory")->required();
  fixture_cmd->add_option("--n", fixture_n, "Documents")->capture_default_str();
  fixture_cmd->add_option("--seed", fixture_seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    fmt::print(err, "error: {}\n{}", e.what(), app.help());
    return 1;
  }

  try {
    const bool chatty = serve_cmd->parsed() || index_cmd->parsed() || stub_cmd->parsed();
    configure_logging(!common.log_level.empty() ? common.log_level : (chatty ? "info" : "warn"));
    if (index_cmd->parsed()) return cmd_index(common, manifest, collection, plugins, parallelism, out, err);
    if (search_cmd->parsed()) {
      if (sa.texts.empty() && sa.images.empty() && sa.docs.empty() && sa.keyword.empty()) {
        fmt::print(err, "error: search needs at least one --text, --image, --doc or --keyword\n{}", search_cmd->help());
        return 1;
      }
      return cmd_search(common, sa, out, err);
    }
    if (serve_cmd->parsed()) return cmd_serve(common, listen);
    if (bench_cmd->parsed()) {
      bo.distribution = index::parse_distribution(distribution);
      bo.build_flat = !no_flat;
      return cmd_bench(bo, bench_json, out);
    }
    if (stub_cmd->parsed()) {
      plugins::InferenceStubServer stub(so);
      struct Runner {
        plugins::InferenceStubServer& s;
        void start() {
          s.start();
          spdlog::info("inference stub listening on {}", s.endpoint());
        }
        void stop() { s.stop(); }
      } runner{stub};
      serve_until_signal(runner);
      return 0;
    }
    if (fixture_cmd->parsed()) {
      const auto demo = ingest::write_demo_collection(fixture_out, fixture_n, fixture_seed);
      fmt::print(out, "wrote {} documents to {}\n", demo.documents, demo.manifest.string());
      for (const auto& [subject, id] : demo.exemplars) fmt::print(out, "  {:<16} {}\n", subject, id);
      return 0;
    }
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return 3;
  }
  return 3;
}

}  // namespace artsearch::cli
