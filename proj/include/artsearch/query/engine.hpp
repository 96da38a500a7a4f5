#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artsearch/catalog/catalog.hpp"
#include "artsearch/common/shared_mutex.hpp"
#include "artsearch/index/index_set.hpp"
#include "artsearch/plugins/registry.hpp"
#include "artsearch/query/query_spec.hpp"

namespace artsearch::query {

struct ResultEntry {
  std::string doc_id;
  double final_score = 0.0;
  std::map<std::string, double> per_plugin;  // active plug-ins only; uncovered ones are absent
  size_t rank = 0;
  std::optional<uint32_t> cluster_id;
  std::optional<std::array<double, 2>> coords;
};

struct PluginDiagnostics {
  std::string plugin;
  double weight = 0.0;
  bool fused = false;
  size_t terms_used = 0;
  size_t depth = 0;      // K_p handed to the index
  size_t retrieved = 0;  // hits returned by the index
  size_t uncovered = 0;  // results without a vector for this plug-in
};

struct Diagnostics {
  std::string ranking;  // "vector" or "keyword"
  size_t candidates = 0;
  bool candidates_restricted = false;
  std::vector<PluginDiagnostics> plugins;
  std::vector<std::string> warnings;
};

struct LayoutPayload {
  std::string kind;  // "clusters" or "canvas"
  std::string plugin;
  size_t points = 0;
  size_t k = 0;                  // clusters
  std::vector<size_t> sizes;     // clusters
  std::string method;            // canvas: "pca" or "neighbor-embed"
  bool degenerate = false;       // canvas
  // Every laid-out document, in result order.
  std::vector<std::string> ids;
  std::vector<uint32_t> cluster_ids;
  std::vector<std::array<double, 2>> coords;
};

struct ResultPage {
  std::vector<ResultEntry> results;
  size_t total = 0;
  size_t offset = 0;
  size_t limit = 0;
  uint64_t generation = 0;
  Diagnostics diagnostics;
  std::optional<LayoutPayload> layout;
  // Sorted candidate ids (filters and keyword constraint applied); empty
  // `candidates_restricted == false` means the whole catalog.
  std::vector<std::string> candidate_ids;
  // The catalog state the page was computed from.
  std::shared_ptr<const catalog::CatalogSnapshot> snapshot;
};

struct PluginBreakdown {
  std::string plugin;
  double weight = 0.0;
  bool fused = false;
  bool covered = false;
  std::optional<double> score;
};

struct FilterOutcome {
  catalog::FacetFilter filter;
  bool passed = false;
};

struct Explanation {
  std::string doc_id;
  std::vector<PluginBreakdown> plugins;
  std::vector<FilterOutcome> filters;
  std::optional<bool> keyword_match;
  bool candidate = false;
  double final_score = 0.0;
  std::vector<std::string> warnings;
};

struct EngineOptions {
  // K_p = max(4 * limit * (offset / limit + 1), min_depth).
  size_t min_depth = 200;
  // Retrieve every indexed document: execute then equals a linear scan.
  bool full_depth = false;
  size_t layout_cap = 1000;
};

/// Stateless over its sources; execute and explain may run concurrently.
class QueryEngine {
 public:
  struct Sources {
    const catalog::Catalog* catalog = nullptr;
    const index::IndexSet* indexes = nullptr;
    const plugins::PluginRegistry* plugins = nullptr;
    // Held shared for the duration of a query so catalog and indexes are
    // read at one commit point. Optional.
    SharedMutex* commit_mutex = nullptr;
  };

  QueryEngine(Sources sources, EngineOptions options = {});

  ResultPage execute(const QuerySpec& spec) const;
  /// Throws Error(kNotFound) for an unknown document.
  Explanation explain(const QuerySpec& spec, const std::string& doc_id) const;
  /// Fused query vector per weighted plug-in; nullopt where it is absent.
  std::map<std::string, std::optional<std::vector<double>>> fused_vectors(const QuerySpec& spec) const;

  const EngineOptions& options() const noexcept { return options_; }

 private:
  struct Prepared;
  Prepared prepare(const QuerySpec& spec, const catalog::CatalogSnapshot& snap) const;
  std::shared_lock<SharedMutex> lock() const;

  Sources sources_;
  EngineOptions options_;
};

nlohmann::json to_json(const ResultEntry& e);
nlohmann::json to_json(const Diagnostics& d);
nlohmann::json to_json(const LayoutPayload& l);
nlohmann::json to_json(const ResultPage& page);
nlohmann::json to_json(const Explanation& e);

}  // namespace artsearch::query
