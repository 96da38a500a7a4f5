#include "artsearch/catalog/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "artsearch/common/error.hpp"
#include "artsearch/common/record_log.hpp"
#include "artsearch/common/text.hpp"

namespace artsearch::catalog {
namespace {

constexpr uint8_t kUpsertRecord = 1;
constexpr uint8_t kDeleteRecord = 2;
constexpr uint32_t kLogVersion = 1;

std::vector<uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

std::vector<std::string> unique_sorted_tokens(std::string_view text) {
  auto tokens = tokenize(text);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

bool accepts_year(const FacetFilter& filter, int64_t year) {
  if (const auto* range = std::get_if<YearRange>(&filter.accepted)) return range->lo <= year && year <= range->hi;
  for (const auto& v : std::get<std::vector<std::string>>(filter.accepted)) {
    if (parse_year(v) == year) return true;
  }
  return false;
}

}  // namespace

const ImageDocument* CatalogSnapshot::find(std::string_view doc_id) const {
  const auto it = docs_.find(doc_id);
  return it == docs_.end() ? nullptr : &it->second;
}

const ImageDocument& CatalogSnapshot::get(std::string_view doc_id) const {
  const auto* doc = find(doc_id);
  if (!doc) throw_not_found(fmt::format("document '{}' not found", doc_id));
  return *doc;
}

void CatalogSnapshot::add(ImageDocument doc) {
  erase(doc.doc_id);
  const std::string& id = doc.doc_id;
  for (const auto& [field, values] : doc.metadata) {
    auto& by_value = postings_[field];
    for (const auto& v : values) by_value[v].insert(id);
  }
  const auto tokens = tokenize(searchable_text(doc));
  for (const auto& t : tokens) ++text_postings_[t][id];
  doc_lengths_[id] = static_cast<uint32_t>(tokens.size());
  docs_.emplace(id, std::move(doc));
}

void CatalogSnapshot::erase(std::string_view doc_id) {
  const auto it = docs_.find(doc_id);
  if (it == docs_.end()) return;
  const ImageDocument& doc = it->second;
  for (const auto& [field, values] : doc.metadata) {
    auto& by_value = postings_[field];
    for (const auto& v : values) {
      auto pit = by_value.find(v);
      pit->second.erase(pit->second.find(doc_id));
      if (pit->second.empty()) by_value.erase(pit);
    }
    if (by_value.empty()) postings_.erase(field);
  }
  for (const auto& t : unique_sorted_tokens(searchable_text(doc))) {
    auto tit = text_postings_.find(t);
    tit->second.erase(tit->second.find(doc_id));
    if (tit->second.empty()) text_postings_.erase(tit);
  }
  doc_lengths_.erase(doc.doc_id);
  docs_.erase(it);
}

std::vector<std::string> CatalogSnapshot::matching(const FacetFilter& filter, const FacetDefinition& facet) const {
  const auto pit = postings_.find(filter.field);
  if (pit == postings_.end()) return {};
  IdSet hits;
  if (facet.kind == FacetKind::kNumericYear) {
    for (const auto& [value, ids] : pit->second) {
      const auto year = parse_year(value);
      if (year && accepts_year(filter, *year)) hits.insert(ids.begin(), ids.end());
    }
  } else {
    for (const auto& v : std::get<std::vector<std::string>>(filter.accepted)) {
      const auto vit = pit->second.find(v);
      if (vit != pit->second.end()) hits.insert(vit->second.begin(), vit->second.end());
    }
  }
  return {hits.begin(), hits.end()};
}

std::vector<std::string> CatalogSnapshot::match_set(const std::vector<FacetFilter>& filters) const {
  std::vector<std::pair<const FacetFilter*, FacetDefinition>> checked;
  for (const auto& f : filters) {
    facets_->validate(f);
    checked.emplace_back(&f, *facets_->find(f.field));
  }
  if (checked.empty()) {
    std::vector<std::string> all;
    all.reserve(docs_.size());
    for (const auto& [id, doc] : docs_) all.push_back(id);
    return all;
  }
  std::vector<std::string> result = matching(*checked[0].first, checked[0].second);
  for (size_t i = 1; i < checked.size() && !result.empty(); ++i) {
    const auto next = matching(*checked[i].first, checked[i].second);
    std::vector<std::string> both;
    std::set_intersection(result.begin(), result.end(), next.begin(), next.end(), std::back_inserter(both));
    result = std::move(both);
  }
  return result;
}

std::map<std::string, double> CatalogSnapshot::score_all(std::string_view query) const {
  std::map<std::string, double> scores;
  const double n = static_cast<double>(docs_.size());
  for (const auto& token : unique_sorted_tokens(query)) {
    const auto it = text_postings_.find(token);
    if (it == text_postings_.end()) continue;
    const double idf = std::log(1.0 + n / static_cast<double>(it->second.size()));
    for (const auto& [id, tf] : it->second) {
      const double len = static_cast<double>(doc_lengths_.at(id));
      scores[id] += (1.0 + std::log(static_cast<double>(tf))) * idf / std::sqrt(len);
    }
  }
  return scores;
}

std::vector<KeywordHit> CatalogSnapshot::keyword_search(std::string_view query, const std::vector<FacetFilter>& filters,
                                                        size_t limit) const {
  if (limit == 0) throw_validation("limit must be at least 1", {{"field", "limit"}});
  std::vector<std::string> allowed;
  if (!filters.empty()) allowed = match_set(filters);
  std::vector<KeywordHit> hits;
  for (const auto& [id, score] : score_all(query)) {
    if (!filters.empty() && !std::binary_search(allowed.begin(), allowed.end(), id)) continue;
    hits.push_back({id, score});
  }
  std::sort(hits.begin(), hits.end(), [](const KeywordHit& a, const KeywordHit& b) {
    return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
  });
  if (hits.size() > limit) hits.resize(limit);
  return hits;
}

std::vector<std::string> CatalogSnapshot::keyword_matches(std::string_view query) const {
  IdSet ids;
  for (const auto& token : unique_sorted_tokens(query)) {
    const auto it = text_postings_.find(token);
    if (it == text_postings_.end()) continue;
    for (const auto& entry : it->second) ids.insert(entry.first);
  }
  return {ids.begin(), ids.end()};
}

std::map<std::string, size_t> CatalogSnapshot::facet_counts(const std::vector<FacetFilter>& filters,
                                                            std::string_view field) const {
  if (filters.empty()) return count_values(nullptr, field);
  const auto matched = match_set(filters);
  const std::span<const std::string> within(matched);
  return count_values(&within, field);
}

std::map<std::string, size_t> CatalogSnapshot::facet_counts_within(std::span<const std::string> ids,
                                                                   std::string_view field) const {
  return count_values(&ids, field);
}

std::map<std::string, size_t> CatalogSnapshot::count_values(const std::span<const std::string>* within,
                                                             std::string_view field) const {
  const auto facet = facets_->find(field);
  if (!facet) throw_validation(fmt::format("unknown facet field '{}'", field), {{"field", std::string(field)}});
  std::map<std::string, size_t> counts;
  const auto pit = postings_.find(facet->field);
  if (pit == postings_.end()) return counts;

  const auto count_in = [&](const IdSet& ids) {
    if (!within) return ids.size();
    size_t c = 0;
    for (const auto& id : ids) c += std::binary_search(within->begin(), within->end(), id) ? 1 : 0;
    return c;
  };
  if (facet->kind == FacetKind::kCategorical) {
    for (const auto& [value, ids] : pit->second) {
      if (const size_t c = count_in(ids)) counts[value] = c;
    }
    return counts;
  }
  // Different spellings of one year ("1600", "+1600") must count a document once.
  std::map<int64_t, IdSet> by_year;
  for (const auto& [value, ids] : pit->second) {
    if (const auto year = parse_year(value)) by_year[*year].insert(ids.begin(), ids.end());
  }
  for (const auto& [year, ids] : by_year) {
    if (const size_t c = count_in(ids)) counts[std::to_string(year)] = c;
  }
  return counts;
}

Catalog::Catalog(FacetRegistry facets)
    : facets_(std::make_shared<const FacetRegistry>(std::move(facets))), current_(std::make_shared<CatalogSnapshot>()) {
  current_->facets_ = facets_;
}

Catalog::Catalog(const std::filesystem::path& dir, FacetRegistry facets, Options options) : Catalog(std::move(facets)) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create catalog directory");
  CatalogSnapshot& state = *current_;
  log_ = std::make_unique<RecordLog>(
      dir / "catalog.log", "IARTCAT1", kLogVersion, RecordLog::Options{options.sync},
      [&](uint8_t type, std::span<const uint8_t> payload) {
        const std::string_view text(reinterpret_cast<const char*>(payload.data()), payload.size());
        if (type == kUpsertRecord) {
          state.add(document_from_json(nlohmann::json::parse(text)));
        } else if (type == kDeleteRecord) {
          state.erase(text);
        } else {
          throw Error(ErrorCode::kFormat, fmt::format("unknown catalog record type {}", type));
        }
      });
  if (log_->truncated_bytes() > 0) {
    spdlog::warn("catalog log had a torn tail; dropped {} bytes", log_->truncated_bytes());
  }
  if (log_->record_count() > state.size() + options.compact_slack) compact();
}

Catalog::~Catalog() = default;

template <typename Fn>
void Catalog::apply(Fn&& mutate) {
  {
    std::lock_guard lock(snapshot_mu_);
    if (current_.use_count() == 1) {
      mutate(*current_);
      ++current_->generation_;
      return;
    }
  }
  // Only the writer modifies current_, and we hold write_mu_, so copying
  // outside snapshot_mu_ is safe.
  auto next = std::make_shared<CatalogSnapshot>(*current_);
  mutate(*next);
  ++next->generation_;
  std::lock_guard lock(snapshot_mu_);
  current_ = std::move(next);
}

void Catalog::upsert(ImageDocument doc) {
  normalize(doc);
  validate(doc);
  std::lock_guard lock(write_mu_);
  if (log_) log_->append(kUpsertRecord, bytes_of(to_json(doc).dump()));
  apply([&](CatalogSnapshot& s) { s.add(std::move(doc)); });
}

bool Catalog::remove(std::string_view doc_id) {
  std::lock_guard lock(write_mu_);
  if (!current_->find(doc_id)) return false;
  if (log_) log_->append(kDeleteRecord, bytes_of(doc_id));
  apply([&](CatalogSnapshot& s) { s.erase(doc_id); });
  return true;
}

void Catalog::compact() {
  std::lock_guard lock(write_mu_);
  if (!log_) return;
  std::vector<std::pair<uint8_t, std::vector<uint8_t>>> records;
  records.reserve(current_->size());
  for (const auto& [id, doc] : current_->documents()) records.emplace_back(kUpsertRecord, bytes_of(to_json(doc).dump()));
  log_->rewrite(records);
}

std::shared_ptr<const CatalogSnapshot> Catalog::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return current_;
}

size_t Catalog::log_records() const { return log_ ? log_->record_count() : 0; }

}  // namespace artsearch::catalog
