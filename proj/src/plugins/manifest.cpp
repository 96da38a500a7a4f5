#include "artsearch/plugins/manifest.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

namespace artsearch::plugins {

std::string_view to_string(Modality m) { return m == Modality::kImage ? "image" : "text"; }
std::string_view to_string(PluginKind k) { return k == PluginKind::kFeature ? "feature" : "classifier"; }

Modality parse_modality(std::string_view s) {
  if (s == "image") return Modality::kImage;
  if (s == "text") return Modality::kText;
  throw_validation(fmt::format("unknown modality '{}'", s));
}

PluginKind parse_plugin_kind(std::string_view s) {
  if (s == "feature") return PluginKind::kFeature;
  if (s == "classifier") return PluginKind::kClassifier;
  throw_validation(fmt::format("unknown plugin kind '{}'", s));
}

bool PluginManifest::supports(Modality m) const {
  return std::find(modalities.begin(), modalities.end(), m) != modalities.end();
}

bool valid_plugin_name(std::string_view name) {
  if (name.empty() || name.size() > 64 || name.front() == '.') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.' ||
           c == '-';
  });
}

void validate(const PluginManifest& m) {
  if (!valid_plugin_name(m.name)) {
    throw_validation(fmt::format("invalid plugin name '{}'", m.name), {{"field", "name"}});
  }
  if (m.version.empty()) throw_validation("plugin version must not be empty", {{"field", "version"}});
  if (m.modalities.empty()) throw_validation("plugin must support at least one modality", {{"field", "modalities"}});
  if (m.vector_dim == 0) throw_validation("vector_dim must be positive", {{"field", "vector_dim"}});
}

nlohmann::json to_json(const PluginManifest& m) {
  nlohmann::json mods = nlohmann::json::array();
  for (auto mod : m.modalities) mods.push_back(to_string(mod));
  return {{"name", m.name},           {"version", m.version}, {"modalities", mods},
          {"vector_dim", m.vector_dim}, {"kind", to_string(m.kind)}, {"deterministic", m.deterministic}};
}

PluginManifest manifest_from_json(const nlohmann::json& j) {
  try {
    PluginManifest m;
    m.name = j.at("name").get<std::string>();
    m.version = j.at("version").get<std::string>();
    for (const auto& mod : j.at("modalities")) m.modalities.push_back(parse_modality(mod.get<std::string>()));
    std::sort(m.modalities.begin(), m.modalities.end());
    m.modalities.erase(std::unique(m.modalities.begin(), m.modalities.end()), m.modalities.end());
    const auto dim = j.at("vector_dim").get<int64_t>();
    if (dim <= 0 || dim > (1 << 16)) throw_validation("vector_dim out of range", {{"field", "vector_dim"}});
    m.vector_dim = static_cast<uint32_t>(dim);
    m.kind = parse_plugin_kind(j.value("kind", "feature"));
    m.deterministic = j.value("deterministic", true);
    validate(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw_validation(std::string("malformed plugin manifest: ") + e.what());
  }
}

void canonicalize(std::vector<Label>& labels) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!(l.confidence >= 0.0f && l.confidence <= 1.0f)) {
      throw_validation(fmt::format("label '{}' confidence outside [0, 1]", l.keyword));
    }
    if (l.keyword.empty()) throw_validation("label keyword must not be empty");
    if (!seen.insert(l.keyword).second) throw_validation(fmt::format("label '{}' repeated", l.keyword));
  }
  std::sort(labels.begin(), labels.end(), [](const Label& a, const Label& b) {
    return a.confidence != b.confidence ? a.confidence > b.confidence : a.keyword < b.keyword;
  });
}

}  // namespace artsearch::plugins
