#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "artsearch/catalog/document.hpp"
#include "artsearch/catalog/facets.hpp"

namespace artsearch {
class RecordLog;
}

namespace artsearch::catalog {

struct KeywordHit {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const KeywordHit&, const KeywordHit&) = default;
};

/// Immutable view of the catalog at one point in time. Safe to share across
/// threads; later writes never show through.
///
/// Keyword score for query tokens Q (deduplicated, summed in sorted order):
///
///   score(d) = sum_{t in Q, tf(t,d) > 0} (1 + ln tf(t,d)) * ln(1 + N / df(t)) / sqrt(len(d))
///
/// where N is the catalog size, len(d) the token count of searchable_text(d).
class CatalogSnapshot {
 public:
  size_t size() const noexcept { return docs_.size(); }
  uint64_t generation() const noexcept { return generation_; }
  const FacetRegistry& facets() const noexcept { return *facets_; }

  const ImageDocument* find(std::string_view doc_id) const;
  /// Throws Error(kNotFound).
  const ImageDocument& get(std::string_view doc_id) const;
  const std::map<std::string, ImageDocument, std::less<>>& documents() const noexcept { return docs_; }

  /// Sorted ids of documents satisfying every filter. Empty filters: all documents.
  std::vector<std::string> match_set(const std::vector<FacetFilter>& filters) const;

  /// Documents sharing at least one token with `query`, filtered, best first.
  std::vector<KeywordHit> keyword_search(std::string_view query, const std::vector<FacetFilter>& filters,
                                         size_t limit) const;

  /// Sorted ids of every document sharing at least one token with `query`.
  std::vector<std::string> keyword_matches(std::string_view query) const;

  /// Per-value document counts of `field` over documents matching `filters`.
  /// Numeric-year keys are canonical integers; unparseable years are skipped.
  std::map<std::string, size_t> facet_counts(const std::vector<FacetFilter>& filters, std::string_view field) const;
  /// Same counts restricted to `ids` (sorted).
  std::map<std::string, size_t> facet_counts_within(std::span<const std::string> ids, std::string_view field) const;

 private:
  friend class Catalog;

  using IdSet = std::set<std::string, std::less<>>;

  void add(ImageDocument doc);
  void erase(std::string_view doc_id);
  std::vector<std::string> matching(const FacetFilter& filter, const FacetDefinition& facet) const;
  std::map<std::string, double> score_all(std::string_view query) const;
  std::map<std::string, size_t> count_values(const std::span<const std::string>* within, std::string_view field) const;

  std::shared_ptr<const FacetRegistry> facets_;
  uint64_t generation_ = 0;
  std::map<std::string, ImageDocument, std::less<>> docs_;
  // field -> value -> doc ids
  std::unordered_map<std::string, std::map<std::string, IdSet>> postings_;
  // token -> doc id -> term frequency
  std::unordered_map<std::string, std::map<std::string, uint32_t, std::less<>>> text_postings_;
  std::unordered_map<std::string, uint32_t> doc_lengths_;
};

/// Document store with a single serialized writer and snapshot readers.
/// Persistent catalogs keep an append-only log ("catalog.log") in their
/// directory; each write is durable before it becomes visible.
class Catalog {
 public:
  struct Options {
    bool sync = true;
    // Compact on open when the log holds more than this many dead records.
    size_t compact_slack = 1024;
  };

  /// In-memory catalog.
  explicit Catalog(FacetRegistry facets);
  /// Opens or creates a catalog directory.
  Catalog(const std::filesystem::path& dir, FacetRegistry facets, Options options);
  Catalog(const std::filesystem::path& dir, FacetRegistry facets) : Catalog(dir, std::move(facets), Options{}) {}
  ~Catalog();

  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  /// Normalizes, validates and stores `doc`, replacing any document with the same id.
  void upsert(ImageDocument doc);
  /// Returns false when the id was absent.
  bool remove(std::string_view doc_id);
  /// Rewrites the log to hold exactly the live documents.
  void compact();

  std::shared_ptr<const CatalogSnapshot> snapshot() const;
  const FacetRegistry& facets() const noexcept { return *facets_; }
  size_t log_records() const;

 private:
  // Runs `mutate` on the live state in place when no reader holds it,
  // otherwise on a copy that is then swapped in.
  template <typename Fn>
  void apply(Fn&& mutate);

  std::shared_ptr<const FacetRegistry> facets_;
  std::unique_ptr<RecordLog> log_;
  std::mutex write_mu_;
  mutable std::mutex snapshot_mu_;
  std::shared_ptr<CatalogSnapshot> current_;
};

}  // namespace artsearch::catalog
