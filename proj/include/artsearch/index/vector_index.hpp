#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace artsearch::index {

enum class Structure : uint8_t { kFlat = 0, kGraph = 1 };

std::string_view to_string(Structure s);
Structure parse_structure(std::string_view s);

/// Hierarchical navigable-small-world parameters.
struct GraphParams {
  uint32_t max_degree = 16;  // links per node on upper layers; layer 0 allows twice this
  uint32_t ef_construction = 200;
  uint32_t ef_search = 384;
  uint64_t seed = 42;
};

struct IndexConfig {
  std::string plugin;
  uint32_t dim = 0;
  Structure structure = Structure::kGraph;
  GraphParams graph;
  // Filtered graph search falls back to a flat scan over the allowed ids when
  // |allowed| / |index| is below this ratio.
  double flat_fallback_ratio = 0.01;
  // ef multiplier applied to filtered graph searches.
  uint32_t filter_ef_factor = 4;
};

struct Neighbor {
  std::string doc_id;
  float similarity = 0.0f;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Cosine-similarity index over unit vectors keyed by document id.
///
/// Both structures share one slot table: slot -> (doc_id, vector, tombstone).
/// The graph structure adds HNSW links on top of the slots. Replacing or
/// deleting a document tombstones its slot; tombstoned slots stay in the
/// graph for navigation but are never returned, and `compact()` rebuilds
/// without them.
///
/// Thread safety: any number of concurrent `search` calls; mutations take an
/// exclusive lock, so a search never observes a partially linked node.
class VectorIndex {
 public:
  explicit VectorIndex(IndexConfig config);

  VectorIndex(const VectorIndex&) = delete;
  VectorIndex& operator=(const VectorIndex&) = delete;

  /// Inserts or replaces. The vector must have `dim` components and unit norm
  /// (within 1e-4); anything else is a validation error.
  void insert(std::string_view doc_id, std::span<const float> vector);

  /// Returns false when the id is not present.
  bool remove(std::string_view doc_id);

  bool contains(std::string_view doc_id) const;
  std::optional<std::vector<float>> get(std::string_view doc_id) const;

  /// Top-k by cosine similarity, ordered by similarity desc then doc_id asc.
  /// `allowed`, when given, must be sorted; results never leave it. The query
  /// is normalized internally. `ef_search` overrides the configured value.
  std::vector<Neighbor> search(std::span<const float> query, size_t k,
                               std::optional<std::span<const std::string>> allowed = std::nullopt,
                               std::optional<uint32_t> ef_search = std::nullopt) const;

  size_t size() const;
  size_t tombstones() const;
  const IndexConfig& config() const noexcept { return config_; }

  /// Live ids in ascending order.
  std::vector<std::string> ids() const;

  /// Drops tombstoned slots and, for graphs, relinks the survivors in slot order.
  void compact();

  /// Writes an "IARTVEC1" file (temp file + rename).
  void persist(const std::filesystem::path& path) const;

  /// Throws Error(kFormat) for a foreign or newer file and Error(kIntegrity)
  /// for truncation or checksum mismatch.
  static std::unique_ptr<VectorIndex> load(const std::filesystem::path& path);

 private:
  struct Scored {
    float sim;
    uint32_t slot;
  };

  const float* vec(uint32_t slot) const noexcept { return vectors_.data() + static_cast<size_t>(slot) * config_.dim; }
  uint32_t* links(uint32_t slot, int level) noexcept;
  const uint32_t* links(uint32_t slot, int level) const noexcept;

  uint32_t append_slot(std::string_view doc_id, std::span<const float> vector);
  void tombstone(uint32_t slot);
  void link_new_node(uint32_t slot);
  int draw_level();
  std::vector<Scored> select_neighbors(std::vector<Scored> candidates, uint32_t max_count) const;
  void add_reverse_link(uint32_t from, uint32_t to, int level);

  template <typename Accept>
  std::vector<Scored> search_layer(const float* query, uint32_t entry, uint32_t ef, int level, Accept accept) const;
  uint32_t greedy_descend(const float* query, int top_level, int bottom_level) const;

  std::vector<Neighbor> flat_search(const float* query, size_t k, const std::vector<uint32_t>* slots) const;
  std::vector<Neighbor> graph_search(const float* query, size_t k, uint32_t ef,
                                     const std::vector<uint8_t>* allowed_mask) const;
  std::vector<Neighbor> finalize(std::vector<Scored> scored, size_t k) const;
  void maybe_compact();
  void compact_locked();

  IndexConfig config_;
  mutable std::shared_mutex mutex_;

  std::vector<std::string> slot_ids_;
  std::vector<float> vectors_;
  std::vector<uint8_t> deleted_;
  std::unordered_map<std::string, uint32_t> slot_of_;
  size_t tombstones_ = 0;

  // Graph state.
  uint32_t max_links0_ = 0;
  uint32_t max_links_ = 0;
  double level_mult_ = 0.0;
  uint64_t level_state_ = 0;
  std::vector<uint8_t> levels_;
  std::vector<uint32_t> links0_;                   // per slot: count, then max_links0_ entries
  std::vector<std::vector<uint32_t>> upper_links_; // per slot: per level >= 1: count, then max_links_ entries
  uint32_t entry_ = kNoEntry;
  int max_level_ = -1;

  static constexpr uint32_t kNoEntry = 0xFFFFFFFFu;
};

}  // namespace artsearch::index
