#include "artsearch/index/vector_index.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <mutex>
#include <queue>

#include <fmt/format.h>

#include "artsearch/common/binary_io.hpp"
#include "artsearch/common/error.hpp"
#include "artsearch/common/hashing.hpp"
#include "artsearch/index/kernels.hpp"

namespace artsearch::index {
namespace {

constexpr char kMagic[8] = {'I', 'A', 'R', 'T', 'V', 'E', 'C', '1'};
constexpr uint32_t kFormatVersion = 1;
constexpr int kMaxLevel = 16;
constexpr double kNormTolerance = 1e-4;

// Visited marks reused across searches on the same thread. A mark equals the
// current epoch iff the slot was visited in this search.
class VisitedSet {
 public:
  void reset(size_t n) {
    if (marks_.size() < n) marks_.resize(n, 0);
    if (++epoch_ == 0) {
      std::fill(marks_.begin(), marks_.end(), 0);
      epoch_ = 1;
    }
  }
  bool test_and_set(uint32_t slot) {
    if (marks_[slot] == epoch_) return true;
    marks_[slot] = epoch_;
    return false;
  }

 private:
  std::vector<uint32_t> marks_;
  uint32_t epoch_ = 0;
};

VisitedSet& thread_visited() {
  thread_local VisitedSet set;
  return set;
}

std::vector<float> prepare_query(std::span<const float> query, uint32_t dim) {
  if (query.size() != dim) {
    throw_validation(fmt::format("query has dimension {}, index expects {}", query.size(), dim));
  }
  std::vector<float> q(query.begin(), query.end());
  if (!normalize(q)) throw_validation("query vector has zero or non-finite norm");
  return q;
}

}  // namespace

std::string_view to_string(Structure s) { return s == Structure::kFlat ? "flat" : "graph"; }

Structure parse_structure(std::string_view s) {
  if (s == "flat") return Structure::kFlat;
  if (s == "graph") return Structure::kGraph;
  throw_validation(fmt::format("unknown index structure '{}'", s));
}

VectorIndex::VectorIndex(IndexConfig config) : config_(std::move(config)) {
  if (config_.dim == 0) throw_validation("index dimension must be positive");
  if (config_.graph.max_degree < 2) throw_validation("graph max_degree must be at least 2");
  if (config_.graph.ef_construction == 0 || config_.graph.ef_search == 0) {
    throw_validation("graph ef parameters must be positive");
  }
  max_links_ = config_.graph.max_degree;
  max_links0_ = 2 * config_.graph.max_degree;
  level_mult_ = 1.0 / std::log(static_cast<double>(config_.graph.max_degree));
  level_state_ = config_.graph.seed;
}

uint32_t* VectorIndex::links(uint32_t slot, int level) noexcept {
  if (level == 0) return links0_.data() + static_cast<size_t>(slot) * (max_links0_ + 1);
  return upper_links_[slot].data() + static_cast<size_t>(level - 1) * (max_links_ + 1);
}

const uint32_t* VectorIndex::links(uint32_t slot, int level) const noexcept {
  return const_cast<VectorIndex*>(this)->links(slot, level);
}

int VectorIndex::draw_level() {
  const uint64_t bits = splitmix64(level_state_);
  const double u = (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  return std::min(kMaxLevel, static_cast<int>(-std::log(u) * level_mult_));
}

void VectorIndex::insert(std::string_view doc_id, std::span<const float> vector) {
  if (doc_id.empty()) throw_validation("doc_id must not be empty");
  if (vector.size() != config_.dim) {
    throw_validation(fmt::format("vector for '{}' has dimension {}, index '{}' expects {}", doc_id, vector.size(),
                                 config_.plugin, config_.dim));
  }
  const double norm = l2_norm(vector);
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTolerance) {
    throw_validation(fmt::format("vector for '{}' is not unit-normalized (norm {})", doc_id, norm));
  }

  std::unique_lock lock(mutex_);
  const auto existing = slot_of_.find(std::string(doc_id));
  if (existing != slot_of_.end() && config_.structure == Structure::kFlat) {
    std::copy(vector.begin(), vector.end(), vectors_.begin() + static_cast<ptrdiff_t>(existing->second) * config_.dim);
    return;
  }
  if (existing != slot_of_.end()) tombstone(existing->second);
  const uint32_t slot = append_slot(doc_id, vector);
  if (config_.structure == Structure::kGraph) link_new_node(slot);
  slot_of_[std::string(doc_id)] = slot;
  maybe_compact();
}

uint32_t VectorIndex::append_slot(std::string_view doc_id, std::span<const float> vector) {
  if (slot_ids_.size() >= std::numeric_limits<uint32_t>::max() - 1) {
    throw Error(ErrorCode::kInternal, "vector index slot space exhausted");
  }
  const auto slot = static_cast<uint32_t>(slot_ids_.size());
  slot_ids_.emplace_back(doc_id);
  vectors_.insert(vectors_.end(), vector.begin(), vector.end());
  deleted_.push_back(0);
  if (config_.structure == Structure::kGraph) {
    const int level = draw_level();
    levels_.push_back(static_cast<uint8_t>(level));
    links0_.resize(links0_.size() + max_links0_ + 1, 0);
    upper_links_.emplace_back(static_cast<size_t>(level) * (max_links_ + 1), 0);
  }
  return slot;
}

void VectorIndex::tombstone(uint32_t slot) {
  if (!deleted_[slot]) {
    deleted_[slot] = 1;
    ++tombstones_;
  }
}

bool VectorIndex::remove(std::string_view doc_id) {
  std::unique_lock lock(mutex_);
  const auto it = slot_of_.find(std::string(doc_id));
  if (it == slot_of_.end()) return false;
  tombstone(it->second);
  slot_of_.erase(it);
  maybe_compact();
  return true;
}

bool VectorIndex::contains(std::string_view doc_id) const {
  std::shared_lock lock(mutex_);
  return slot_of_.contains(std::string(doc_id));
}

std::optional<std::vector<float>> VectorIndex::get(std::string_view doc_id) const {
  std::shared_lock lock(mutex_);
  const auto it = slot_of_.find(std::string(doc_id));
  if (it == slot_of_.end()) return std::nullopt;
  const float* v = vec(it->second);
  return std::vector<float>(v, v + config_.dim);
}

size_t VectorIndex::size() const {
  std::shared_lock lock(mutex_);
  return slot_of_.size();
}

size_t VectorIndex::tombstones() const {
  std::shared_lock lock(mutex_);
  return tombstones_;
}

std::vector<std::string> VectorIndex::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  out.reserve(slot_of_.size());
  for (const auto& [id, slot] : slot_of_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

// --- graph construction ------------------------------------------------------

template <typename Accept>
std::vector<VectorIndex::Scored> VectorIndex::search_layer(const float* query, uint32_t entry, uint32_t ef, int level,
                                                           Accept accept) const {
  struct BestFirst {
    bool operator()(const Scored& a, const Scored& b) const { return a.sim < b.sim; }
  };
  struct WorstFirst {
    bool operator()(const Scored& a, const Scored& b) const { return a.sim > b.sim; }
  };
  std::priority_queue<Scored, std::vector<Scored>, BestFirst> candidates;
  std::priority_queue<Scored, std::vector<Scored>, WorstFirst> top;

  VisitedSet& visited = thread_visited();
  visited.reset(slot_ids_.size());

  const float entry_sim = dot(query, vec(entry), config_.dim);
  visited.test_and_set(entry);
  candidates.push({entry_sim, entry});
  if (accept(entry)) top.push({entry_sim, entry});
  float lower = top.empty() ? -std::numeric_limits<float>::infinity() : top.top().sim;

  while (!candidates.empty()) {
    const Scored current = candidates.top();
    if (current.sim < lower && top.size() >= ef) break;
    candidates.pop();

    const uint32_t* block = links(current.slot, level);
    const uint32_t count = block[0];
    for (uint32_t i = 1; i <= count; ++i) {
      const uint32_t next = block[i];
      if (visited.test_and_set(next)) continue;
      const float sim = dot(query, vec(next), config_.dim);
      if (top.size() < ef || sim > lower) {
        candidates.push({sim, next});
        if (accept(next)) {
          top.push({sim, next});
          if (top.size() > ef) top.pop();
          lower = top.top().sim;
        }
      }
    }
  }

  std::vector<Scored> out;
  out.reserve(top.size());
  while (!top.empty()) {
    out.push_back(top.top());
    top.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

uint32_t VectorIndex::greedy_descend(const float* query, int top_level, int bottom_level) const {
  uint32_t current = entry_;
  float current_sim = dot(query, vec(current), config_.dim);
  for (int level = top_level; level > bottom_level; --level) {
    bool changed = true;
    while (changed) {
      changed = false;
      const uint32_t* block = links(current, level);
      for (uint32_t i = 1; i <= block[0]; ++i) {
        const float sim = dot(query, vec(block[i]), config_.dim);
        if (sim > current_sim) {
          current_sim = sim;
          current = block[i];
          changed = true;
        }
      }
    }
  }
  return current;
}

// Keeps a candidate only if it is closer to the base point than to every
// neighbour already kept. Input must be sorted by similarity descending.
std::vector<VectorIndex::Scored> VectorIndex::select_neighbors(std::vector<Scored> candidates,
                                                               uint32_t max_count) const {
  if (candidates.size() <= max_count) return candidates;
  std::vector<Scored> selected;
  selected.reserve(max_count);
  for (const Scored& c : candidates) {
    if (selected.size() >= max_count) break;
    bool keep = true;
    for (const Scored& s : selected) {
      if (dot(vec(c.slot), vec(s.slot), config_.dim) > c.sim) {
        keep = false;
        break;
      }
    }
    if (keep) selected.push_back(c);
  }
  return selected;
}

void VectorIndex::add_reverse_link(uint32_t from, uint32_t to, int level) {
  const uint32_t cap = level == 0 ? max_links0_ : max_links_;
  uint32_t* block = links(from, level);
  if (block[0] < cap) {
    block[++block[0]] = to;
    return;
  }
  const float* base = vec(from);
  std::vector<Scored> pool;
  pool.reserve(cap + 1);
  for (uint32_t i = 1; i <= block[0]; ++i) pool.push_back({dot(base, vec(block[i]), config_.dim), block[i]});
  pool.push_back({dot(base, vec(to), config_.dim), to});
  std::sort(pool.begin(), pool.end(), [](const Scored& a, const Scored& b) {
    return a.sim != b.sim ? a.sim > b.sim : a.slot < b.slot;
  });
  const auto kept = select_neighbors(std::move(pool), cap);
  block[0] = static_cast<uint32_t>(kept.size());
  for (size_t i = 0; i < kept.size(); ++i) block[i + 1] = kept[i].slot;
}

void VectorIndex::link_new_node(uint32_t slot) {
  const int level = levels_[slot];
  if (entry_ == kNoEntry) {
    entry_ = slot;
    max_level_ = level;
    return;
  }
  const float* query = vec(slot);
  uint32_t current = greedy_descend(query, max_level_, level);
  const auto accept_all = [](uint32_t) { return true; };
  for (int l = std::min(level, max_level_); l >= 0; --l) {
    auto found = search_layer(query, current, config_.graph.ef_construction, l, accept_all);
    std::sort(found.begin(), found.end(), [](const Scored& a, const Scored& b) {
      return a.sim != b.sim ? a.sim > b.sim : a.slot < b.slot;
    });
    const uint32_t next_entry = found.front().slot;
    const auto chosen = select_neighbors(std::move(found), max_links_);
    uint32_t* block = links(slot, l);
    block[0] = static_cast<uint32_t>(chosen.size());
    for (size_t i = 0; i < chosen.size(); ++i) block[i + 1] = chosen[i].slot;
    for (const Scored& n : chosen) add_reverse_link(n.slot, slot, l);
    current = next_entry;
  }
  if (level > max_level_) {
    max_level_ = level;
    entry_ = slot;
  }
}

// --- search ------------------------------------------------------------------

std::vector<Neighbor> VectorIndex::finalize(std::vector<Scored> scored, size_t k) const {
  const auto better = [this](const Scored& a, const Scored& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return slot_ids_[a.slot] < slot_ids_[b.slot];
  };
  if (scored.size() > k) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<ptrdiff_t>(k), scored.end(), better);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  std::vector<Neighbor> out;
  out.reserve(scored.size());
  for (const Scored& s : scored) out.push_back({slot_ids_[s.slot], s.sim});
  return out;
}

std::vector<Neighbor> VectorIndex::flat_search(const float* query, size_t k, const std::vector<uint32_t>* slots) const {
  const auto worse_on_top = [this](const Scored& a, const Scored& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return slot_ids_[a.slot] < slot_ids_[b.slot];
  };
  std::priority_queue<Scored, std::vector<Scored>, decltype(worse_on_top)> heap(worse_on_top);
  const auto consider = [&](uint32_t slot) {
    const Scored s{dot(query, vec(slot), config_.dim), slot};
    if (heap.size() < k) {
      heap.push(s);
    } else if (worse_on_top(s, heap.top())) {
      heap.pop();
      heap.push(s);
    }
  };
  if (slots != nullptr) {
    for (uint32_t slot : *slots) consider(slot);
  } else {
    for (uint32_t slot = 0; slot < slot_ids_.size(); ++slot) {
      if (!deleted_[slot]) consider(slot);
    }
  }
  std::vector<Scored> scored;
  scored.reserve(heap.size());
  while (!heap.empty()) {
    scored.push_back(heap.top());
    heap.pop();
  }
  return finalize(std::move(scored), k);
}

std::vector<Neighbor> VectorIndex::graph_search(const float* query, size_t k, uint32_t ef,
                                                const std::vector<uint8_t>* allowed_mask) const {
  const uint32_t entry = greedy_descend(query, max_level_, 0);
  std::vector<Scored> found;
  if (allowed_mask != nullptr) {
    found = search_layer(query, entry, ef, 0,
                         [&](uint32_t slot) { return !deleted_[slot] && (*allowed_mask)[slot]; });
  } else if (tombstones_ > 0) {
    found = search_layer(query, entry, ef, 0, [&](uint32_t slot) { return !deleted_[slot]; });
  } else {
    found = search_layer(query, entry, ef, 0, [](uint32_t) { return true; });
  }
  return finalize(std::move(found), k);
}

std::vector<Neighbor> VectorIndex::search(std::span<const float> query, size_t k,
                                          std::optional<std::span<const std::string>> allowed,
                                          std::optional<uint32_t> ef_search) const {
  if (k == 0) throw_validation("k must be at least 1");
  const auto q = prepare_query(query, config_.dim);

  std::shared_lock lock(mutex_);
  if (slot_of_.empty()) return {};

  const uint32_t ef = std::max<uint32_t>(ef_search.value_or(config_.graph.ef_search), static_cast<uint32_t>(k));

  if (!allowed) {
    if (config_.structure == Structure::kFlat) return flat_search(q.data(), k, nullptr);
    return graph_search(q.data(), k, ef, nullptr);
  }

  std::vector<uint32_t> allowed_slots;
  allowed_slots.reserve(std::min(allowed->size(), slot_of_.size()));
  for (const std::string& id : *allowed) {
    const auto it = slot_of_.find(id);
    if (it != slot_of_.end()) allowed_slots.push_back(it->second);
  }
  if (allowed_slots.empty()) return {};
  std::sort(allowed_slots.begin(), allowed_slots.end());
  allowed_slots.erase(std::unique(allowed_slots.begin(), allowed_slots.end()), allowed_slots.end());

  const bool covers_everything = allowed_slots.size() == slot_of_.size();
  if (config_.structure == Structure::kFlat) {
    return covers_everything ? flat_search(q.data(), k, nullptr) : flat_search(q.data(), k, &allowed_slots);
  }
  if (covers_everything) return graph_search(q.data(), k, ef, nullptr);

  const double ratio = static_cast<double>(allowed_slots.size()) / static_cast<double>(slot_of_.size());
  if (ratio < config_.flat_fallback_ratio) return flat_search(q.data(), k, &allowed_slots);

  std::vector<uint8_t> mask(slot_ids_.size(), 0);
  for (uint32_t slot : allowed_slots) mask[slot] = 1;
  return graph_search(q.data(), k, ef * config_.filter_ef_factor, &mask);
}

// --- maintenance ---------------------------------------------------------------

void VectorIndex::maybe_compact() {
  if (tombstones_ > 1024 && tombstones_ > slot_of_.size()) compact_locked();
}

void VectorIndex::compact() {
  std::unique_lock lock(mutex_);
  compact_locked();
}

void VectorIndex::compact_locked() {
  if (tombstones_ == 0) return;
  std::vector<std::string> ids;
  std::vector<float> vectors;
  ids.reserve(slot_of_.size());
  vectors.reserve(slot_of_.size() * config_.dim);
  for (uint32_t slot = 0; slot < slot_ids_.size(); ++slot) {
    if (deleted_[slot]) continue;
    ids.push_back(std::move(slot_ids_[slot]));
    vectors.insert(vectors.end(), vec(slot), vec(slot) + config_.dim);
  }

  slot_ids_.clear();
  vectors_.clear();
  deleted_.clear();
  slot_of_.clear();
  levels_.clear();
  links0_.clear();
  upper_links_.clear();
  tombstones_ = 0;
  entry_ = kNoEntry;
  max_level_ = -1;
  level_state_ = config_.graph.seed;

  for (size_t i = 0; i < ids.size(); ++i) {
    const auto v = std::span<const float>(vectors).subspan(i * config_.dim, config_.dim);
    const uint32_t slot = append_slot(ids[i], v);
    if (config_.structure == Structure::kGraph) link_new_node(slot);
    slot_of_[ids[i]] = slot;
  }
}

// --- persistence -----------------------------------------------------------------

void VectorIndex::persist(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);

  ByteWriter payload;
  for (size_t slot = 0; slot < slot_ids_.size(); ++slot) {
    payload.put_string(slot_ids_[slot]);
    payload.put(deleted_[slot]);
  }
  payload.put_floats(vectors_);
  if (config_.structure == Structure::kGraph) {
    payload.put(level_state_);
    payload.put(entry_);
    payload.put(static_cast<int32_t>(max_level_));
    payload.put_bytes(levels_);
    payload.put_bytes(std::span(reinterpret_cast<const uint8_t*>(links0_.data()), links0_.size() * sizeof(uint32_t)));
    for (const auto& upper : upper_links_) {
      payload.put_bytes(std::span(reinterpret_cast<const uint8_t*>(upper.data()), upper.size() * sizeof(uint32_t)));
    }
  }

  ByteWriter file;
  file.put_bytes(std::span(reinterpret_cast<const uint8_t*>(kMagic), sizeof(kMagic)));
  file.put(kFormatVersion);
  file.put_string(config_.plugin);
  file.put(config_.dim);
  file.put(static_cast<uint8_t>(config_.structure));
  file.put(config_.graph.max_degree);
  file.put(config_.graph.ef_construction);
  file.put(config_.graph.ef_search);
  file.put(config_.graph.seed);
  file.put(config_.flat_fallback_ratio);
  file.put(config_.filter_ef_factor);
  file.put(static_cast<uint64_t>(slot_ids_.size()));
  file.put(static_cast<uint64_t>(tombstones_));
  file.put(static_cast<uint64_t>(payload.bytes().size()));
  file.put(crc32(payload.bytes()));
  file.put_bytes(payload.bytes());

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(file.bytes().data()), static_cast<std::streamsize>(file.bytes().size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "cannot write vector index file");
  }
  const int fd = ::open(tmp.c_str(), O_RDONLY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<VectorIndex> VectorIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open vector index file");
  const std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kFormat, "not a vector index file (bad magic)");
  }
  ByteReader header{std::span<const uint8_t>(data).subspan(sizeof(kMagic))};
  if (header.get<uint32_t>() != kFormatVersion) throw Error(ErrorCode::kFormat, "unsupported vector index version");

  IndexConfig config;
  config.plugin = header.get_string();
  config.dim = header.get<uint32_t>();
  const auto structure = header.get<uint8_t>();
  if (structure > 1) throw Error(ErrorCode::kFormat, "unknown index structure tag");
  config.structure = static_cast<Structure>(structure);
  config.graph.max_degree = header.get<uint32_t>();
  config.graph.ef_construction = header.get<uint32_t>();
  config.graph.ef_search = header.get<uint32_t>();
  config.graph.seed = header.get<uint64_t>();
  config.flat_fallback_ratio = header.get<double>();
  config.filter_ef_factor = header.get<uint32_t>();
  const auto count = header.get<uint64_t>();
  const auto tombstones = header.get<uint64_t>();
  const auto payload_size = header.get<uint64_t>();
  const auto checksum = header.get<uint32_t>();
  if (header.remaining() != payload_size) throw Error(ErrorCode::kIntegrity, "vector index file is truncated");
  const auto payload_bytes = std::span(data).subspan(data.size() - payload_size);
  if (crc32(payload_bytes) != checksum) throw Error(ErrorCode::kIntegrity, "vector index checksum mismatch");

  auto index = std::make_unique<VectorIndex>(config);
  ByteReader payload(payload_bytes);
  index->slot_ids_.reserve(count);
  index->deleted_.reserve(count);
  for (uint64_t slot = 0; slot < count; ++slot) {
    index->slot_ids_.push_back(payload.get_string());
    index->deleted_.push_back(payload.get<uint8_t>());
  }
  index->vectors_.resize(count * config.dim);
  payload.get_floats(index->vectors_);
  index->tombstones_ = tombstones;
  for (uint32_t slot = 0; slot < count; ++slot) {
    if (!index->deleted_[slot]) index->slot_of_[index->slot_ids_[slot]] = slot;
  }

  if (config.structure == Structure::kGraph) {
    index->level_state_ = payload.get<uint64_t>();
    index->entry_ = payload.get<uint32_t>();
    index->max_level_ = payload.get<int32_t>();
    const auto levels = payload.get_bytes(count);
    index->levels_.assign(levels.begin(), levels.end());
    index->links0_.resize(count * (index->max_links0_ + 1));
    const auto links0 = payload.get_bytes(index->links0_.size() * sizeof(uint32_t));
    std::memcpy(index->links0_.data(), links0.data(), links0.size());
    index->upper_links_.resize(count);
    for (uint64_t slot = 0; slot < count; ++slot) {
      auto& upper = index->upper_links_[slot];
      upper.resize(static_cast<size_t>(index->levels_[slot]) * (index->max_links_ + 1));
      const auto bytes = payload.get_bytes(upper.size() * sizeof(uint32_t));
      std::memcpy(upper.data(), bytes.data(), bytes.size());
    }
  }
  if (payload.remaining() != 0) throw Error(ErrorCode::kIntegrity, "vector index payload has trailing bytes");
  return index;
}

}  // namespace artsearch::index
