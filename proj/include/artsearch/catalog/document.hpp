#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artsearch/common/time.hpp"

namespace artsearch::catalog {

using Metadata = std::map<std::string, std::vector<std::string>>;

/// One catalogued artwork.
struct ImageDocument {
  std::string doc_id;
  std::string collection_id;
  std::string image_ref;
  std::optional<std::string> title;
  // Field name -> values. Machine annotations live under "auto:<plugin>".
  Metadata metadata;
  // sha256 of the image bytes; empty when the document was not ingested from an image.
  std::string content_hash;
  Timestamp ingested_at{};

  friend bool operator==(const ImageDocument&, const ImageDocument&) = default;
};

/// Lowercases field names, drops empty field names and removes duplicate
/// values (first occurrence wins, order otherwise preserved).
void normalize(ImageDocument& doc);

/// Throws Error(kValidation) for a doc_id outside 1..128 bytes, an empty
/// collection_id or empty metadata field names.
void validate(const ImageDocument& doc);

/// Concatenation of title and every metadata value, the text keyword search indexes.
std::string searchable_text(const ImageDocument& doc);

nlohmann::json to_json(const ImageDocument& doc);
ImageDocument document_from_json(const nlohmann::json& j);

}  // namespace artsearch::catalog
