#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "artsearch/catalog/document.hpp"

namespace artsearch::ingest {

/// One line of a collection manifest (JSON Lines):
///
///   {"id": "rk-0001", "image": "img/0001.jpg", "title": "...",
///    "metadata": {"artist": "Rembrandt", "year": ["1642"]}}
///
/// `image` is a path relative to the manifest's directory, an absolute path
/// or an http:// URL. Metadata values may be strings, numbers or arrays of
/// either.
struct ManifestEntry {
  size_t line = 0;  // 1-based
  std::string id;
  std::string image;
  std::optional<std::string> title;
  catalog::Metadata metadata;
};

struct EntryError {
  size_t line = 0;  // 0 when the error is not tied to a line
  std::string id;   // empty when the line could not be parsed far enough
  std::string message;
};

struct CollectionManifest {
  std::string collection_id;
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;  // manifest order
  std::vector<EntryError> errors;      // lines that did not parse
  // Non-blank lines; every one ends up either in entries or in errors.
  size_t total() const { return entries.size() + errors.size(); }
};

/// Parses line by line; a bad line or a repeated id becomes an EntryError
/// and never stops the parse.
CollectionManifest parse_manifest(std::istream& in, std::string collection_id, std::filesystem::path base_dir);

/// Throws Error(kIo) when the file cannot be read.
CollectionManifest load_manifest(const std::filesystem::path& path, std::string collection_id);

ManifestEntry entry_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ManifestEntry& e);

}  // namespace artsearch::ingest
