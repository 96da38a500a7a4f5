#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace artsearch::catalog {

enum class FacetKind { kCategorical, kNumericYear };

struct FacetDefinition {
  std::string field;
  FacetKind kind = FacetKind::kCategorical;
  std::string display_name;

  friend bool operator==(const FacetDefinition&, const FacetDefinition&) = default;
};

/// Inclusive year range; negative years are BCE.
struct YearRange {
  int64_t lo = 0;
  int64_t hi = 0;

  friend bool operator==(const YearRange&, const YearRange&) = default;
};

/// A document matches iff one of its values for `field` is accepted.
struct FacetFilter {
  std::string field;
  std::variant<std::vector<std::string>, YearRange> accepted;

  friend bool operator==(const FacetFilter&, const FacetFilter&) = default;
};

/// Signed integer year ("1642", "-450", "+12"); anything else is nullopt.
std::optional<int64_t> parse_year(std::string_view value);

/// Registered facets. Fields under the "auto:" namespace (classifier
/// annotations) are implicitly categorical facets.
class FacetRegistry {
 public:
  FacetRegistry() = default;
  explicit FacetRegistry(std::vector<FacetDefinition> facets);

  /// Returns the definition, or nullopt for an unknown field.
  std::optional<FacetDefinition> find(std::string_view field) const;

  /// Throws Error(kValidation) naming the field when it is unknown or the
  /// filter shape does not fit the facet kind.
  void validate(const FacetFilter& filter) const;

  const std::vector<FacetDefinition>& definitions() const noexcept { return facets_; }

 private:
  std::vector<FacetDefinition> facets_;
};

/// Facet config file schema:
///   {"facets": [{"field": "artist", "kind": "categorical", "display_name": "Artist"},
///               {"field": "year", "kind": "numeric-year", "display_name": "Year"}]}
FacetRegistry parse_facets(const nlohmann::json& j);
FacetRegistry load_facets(const std::filesystem::path& path);
nlohmann::json to_json(const FacetDefinition& facet);

std::string_view to_string(FacetKind kind);

}  // namespace artsearch::catalog
