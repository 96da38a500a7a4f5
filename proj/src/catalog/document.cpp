#include "artsearch/catalog/document.hpp"

#include <algorithm>
#include <set>

#include "artsearch/common/error.hpp"
#include "artsearch/common/text.hpp"

namespace artsearch::catalog {

void normalize(ImageDocument& doc) {
  Metadata out;
  for (auto& [field, values] : doc.metadata) {
    auto& target = out[to_lower(trim(field))];
    for (auto& v : values) {
      if (std::find(target.begin(), target.end(), v) == target.end()) target.push_back(std::move(v));
    }
  }
  out.erase("");
  doc.metadata = std::move(out);
}

void validate(const ImageDocument& doc) {
  if (doc.doc_id.empty() || doc.doc_id.size() > 128) {
    throw_validation("doc_id must be 1-128 characters", {{"field", "doc_id"}});
  }
  if (doc.collection_id.empty()) throw_validation("collection_id must not be empty", {{"field", "collection_id"}});
  for (const auto& [field, values] : doc.metadata) {
    if (field.empty()) throw_validation("metadata field names must not be empty", {{"field", "metadata"}});
    if (std::set<std::string>(values.begin(), values.end()).size() != values.size()) {
      throw_validation("metadata field '" + field + "' has duplicate values", {{"field", "metadata"}});
    }
  }
}

std::string searchable_text(const ImageDocument& doc) {
  std::string text = doc.title.value_or("");
  for (const auto& [field, values] : doc.metadata) {
    for (const auto& v : values) {
      text.push_back(' ');
      text += v;
    }
  }
  return text;
}

nlohmann::json to_json(const ImageDocument& doc) {
  nlohmann::json j{{"doc_id", doc.doc_id},
                   {"collection_id", doc.collection_id},
                   {"image_ref", doc.image_ref},
                   {"metadata", doc.metadata},
                   {"ingested_at", format_timestamp(doc.ingested_at)}};
  if (doc.title) j["title"] = *doc.title;
  if (!doc.content_hash.empty()) j["content_hash"] = doc.content_hash;
  return j;
}

ImageDocument document_from_json(const nlohmann::json& j) {
  try {
    ImageDocument doc;
    doc.doc_id = j.at("doc_id").get<std::string>();
    doc.collection_id = j.at("collection_id").get<std::string>();
    doc.image_ref = j.value("image_ref", "");
    if (j.contains("title") && !j["title"].is_null()) doc.title = j["title"].get<std::string>();
    if (j.contains("metadata")) doc.metadata = j["metadata"].get<Metadata>();
    doc.content_hash = j.value("content_hash", "");
    if (j.contains("ingested_at")) {
      const auto t = parse_timestamp(j["ingested_at"].get<std::string>());
      if (!t) throw_validation("ingested_at is not a valid timestamp");
      doc.ingested_at = *t;
    }
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw_validation(std::string("malformed document: ") + e.what());
  }
}

}  // namespace artsearch::catalog
