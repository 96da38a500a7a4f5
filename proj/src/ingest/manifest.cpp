#include "artsearch/ingest/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include <fmt/format.h>

#include "artsearch/common/error.hpp"
#include "artsearch/common/text.hpp"

namespace artsearch::ingest {
namespace {

std::string value_string(const nlohmann::json& v, const std::string& field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
  if (v.is_number()) return v.dump();
  throw_validation(fmt::format("metadata field '{}' holds a value that is not a string or number", field));
}

}  // namespace

ManifestEntry entry_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw_validation("manifest line is not a JSON object");
  ManifestEntry e;
  for (const auto& [key, value] : j.items()) {
    if (key == "id") {
      if (!value.is_string()) throw_validation("'id' must be a string");
      e.id = value.get<std::string>();
    } else if (key == "image") {
      if (!value.is_string()) throw_validation("'image' must be a string");
      e.image = value.get<std::string>();
    } else if (key == "title") {
      if (value.is_null()) continue;
      if (!value.is_string()) throw_validation("'title' must be a string");
      e.title = value.get<std::string>();
    } else if (key == "metadata") {
      if (value.is_null()) continue;
      if (!value.is_object()) throw_validation("'metadata' must be an object");
      for (const auto& [field, v] : value.items()) {
        if (to_lower(trim(field)).rfind("auto:", 0) == 0) {
          throw_validation(fmt::format("metadata field '{}' uses the reserved 'auto:' prefix", field));
        }
        auto& values = e.metadata[field];
        if (v.is_array()) {
          for (const auto& x : v) values.push_back(value_string(x, field));
        } else if (!v.is_null()) {
          values.push_back(value_string(v, field));
        }
      }
    } else {
      throw_validation(fmt::format("unknown manifest property '{}'", key));
    }
  }
  if (e.id.empty()) throw_validation("'id' is required");
  if (e.image.empty()) throw_validation("'image' is required");
  catalog::ImageDocument probe{.doc_id = e.id, .collection_id = "probe", .image_ref = e.image, .metadata = e.metadata};
  catalog::validate(probe);
  return e;
}

nlohmann::json to_json(const ManifestEntry& e) {
  nlohmann::json j{{"id", e.id}, {"image", e.image}, {"metadata", e.metadata}};
  if (e.title) j["title"] = *e.title;
  return j;
}

CollectionManifest parse_manifest(std::istream& in, std::string collection_id, std::filesystem::path base_dir) {
  if (trim(collection_id).empty()) throw_validation("collection id must not be empty");
  CollectionManifest m{.collection_id = std::move(collection_id), .base_dir = std::move(base_dir)};
  std::unordered_set<std::string> seen;
  std::string line;
  size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    std::string id;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.is_object() && j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
      auto entry = entry_from_json(j);
      entry.line = number;
      if (!seen.insert(entry.id).second) throw_validation(fmt::format("duplicate id '{}'", entry.id));
      m.entries.push_back(std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      m.errors.push_back({number, id, fmt::format("line {}: invalid JSON: {}", number, e.what())});
    } catch (const Error& e) {
      m.errors.push_back({number, id, fmt::format("line {}: {}", number, e.what())});
    }
  }
  if (in.bad()) throw Error(ErrorCode::kIo, "error while reading manifest");
  return m;
}

CollectionManifest load_manifest(const std::filesystem::path& path, std::string collection_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read manifest '{}'", path.string()));
  return parse_manifest(in, std::move(collection_id), std::filesystem::absolute(path).parent_path());
}

}  // namespace artsearch::ingest
