#include "artsearch/catalog/facets.hpp"

#include <charconv>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "artsearch/common/error.hpp"
#include "artsearch/common/text.hpp"

namespace artsearch::catalog {

std::optional<int64_t> parse_year(std::string_view value) {
  value = trim(value);
  if (!value.empty() && value.front() == '+') value.remove_prefix(1);
  if (value.empty()) return std::nullopt;
  int64_t year = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), year);
  if (ec != std::errc() || ptr != value.data() + value.size()) return std::nullopt;
  return year;
}

std::string_view to_string(FacetKind kind) {
  return kind == FacetKind::kCategorical ? "categorical" : "numeric-year";
}

FacetRegistry::FacetRegistry(std::vector<FacetDefinition> facets) : facets_(std::move(facets)) {
  std::set<std::string> seen;
  for (auto& f : facets_) {
    f.field = to_lower(trim(f.field));
    if (f.field.empty()) throw_validation("facet field must not be empty");
    if (!seen.insert(f.field).second) throw_validation(fmt::format("facet '{}' is defined twice", f.field));
    if (f.display_name.empty()) f.display_name = f.field;
  }
}

std::optional<FacetDefinition> FacetRegistry::find(std::string_view field) const {
  for (const auto& f : facets_) {
    if (f.field == field) return f;
  }
  if (field.starts_with("auto:") && field.size() > 5) {
    return FacetDefinition{std::string(field), FacetKind::kCategorical, std::string(field)};
  }
  return std::nullopt;
}

void FacetRegistry::validate(const FacetFilter& filter) const {
  const auto facet = find(filter.field);
  if (!facet) {
    throw_validation(fmt::format("unknown facet field '{}'", filter.field), {{"field", filter.field}});
  }
  if (const auto* range = std::get_if<YearRange>(&filter.accepted)) {
    if (facet->kind != FacetKind::kNumericYear) {
      throw_validation(fmt::format("facet '{}' is categorical and does not accept a range", filter.field),
                       {{"field", filter.field}});
    }
    if (range->lo > range->hi) {
      throw_validation(fmt::format("facet '{}' range has lo > hi", filter.field), {{"field", filter.field}});
    }
  }
}

FacetRegistry parse_facets(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("facets") || !j["facets"].is_array()) {
    throw_validation("facet config must be an object with a 'facets' array");
  }
  std::vector<FacetDefinition> facets;
  for (const auto& item : j["facets"]) {
    if (!item.is_object() || !item.contains("field") || !item["field"].is_string()) {
      throw_validation("every facet needs a string 'field'");
    }
    FacetDefinition f;
    f.field = item["field"].get<std::string>();
    const std::string kind = item.value("kind", "categorical");
    if (kind == "categorical") {
      f.kind = FacetKind::kCategorical;
    } else if (kind == "numeric-year") {
      f.kind = FacetKind::kNumericYear;
    } else {
      throw_validation(fmt::format("facet '{}' has unknown kind '{}'", f.field, kind));
    }
    f.display_name = item.value("display_name", "");
    facets.push_back(std::move(f));
  }
  return FacetRegistry(std::move(facets));
}

FacetRegistry load_facets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open facet config");
  try {
    return parse_facets(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw_validation(std::string("facet config is not valid JSON: ") + e.what());
  }
}

nlohmann::json to_json(const FacetDefinition& facet) {
  return {{"field", facet.field}, {"kind", to_string(facet.kind)}, {"display_name", facet.display_name}};
}

}  // namespace artsearch::catalog
