#include "artsearch/plugins/protocol.hpp"

#include <fmt/format.h>

#include "artsearch/common/hashing.hpp"

namespace artsearch::plugins::protocol {
namespace {

[[noreturn]] void bad_response(const std::string& what) {
  throw Error(ErrorCode::kFormat, "malformed inference response: " + what);
}

}  // namespace

nlohmann::json encode(const ExtractRequest& r) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& in : r.inputs) {
    if (in.kind == Modality::kText) {
      inputs.push_back({{"kind", "text"}, {"text", in.text}});
    } else {
      inputs.push_back({{"kind", "image"}, {"data_b64", base64_encode(in.image)}});
    }
  }
  return {{"plugin", r.plugin}, {"inputs", std::move(inputs)}};
}

nlohmann::json encode(const ExtractResponse& r) {
  nlohmann::json j{{"dim", r.dim}, {"vectors", r.vectors}, {"model_version", r.model_version}};
  if (r.labels) {
    nlohmann::json all = nlohmann::json::array();
    for (const auto& item : *r.labels) {
      nlohmann::json labels = nlohmann::json::array();
      for (const auto& l : item) labels.push_back({l.keyword, l.confidence});
      all.push_back(std::move(labels));
    }
    j["labels"] = std::move(all);
  }
  return j;
}

nlohmann::json encode(const HealthResponse& r) {
  nlohmann::json plugins = nlohmann::json::array();
  for (const auto& m : r.plugins) plugins.push_back(to_json(m));
  return {{"status", r.status}, {"plugins", std::move(plugins)}};
}

ExtractRequest decode_request(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("plugin") || !j["plugin"].is_string()) {
    throw_validation("request needs a string 'plugin'", {{"pointer", "/plugin"}});
  }
  if (!j.contains("inputs") || !j["inputs"].is_array()) {
    throw_validation("request needs an 'inputs' array", {{"pointer", "/inputs"}});
  }
  ExtractRequest r;
  r.plugin = j["plugin"].get<std::string>();
  for (size_t i = 0; i < j["inputs"].size(); ++i) {
    const auto& in = j["inputs"][i];
    const std::string ptr = fmt::format("/inputs/{}", i);
    const std::string kind = in.is_object() && in.contains("kind") && in["kind"].is_string() ? in["kind"].get<std::string>() : "";
    if (kind == "text" && in.contains("text") && in["text"].is_string()) {
      r.inputs.push_back(ExtractionInput::of_text(in["text"].get<std::string>()));
    } else if (kind == "image" && in.contains("data_b64") && in["data_b64"].is_string()) {
      r.inputs.push_back(ExtractionInput::of_image(base64_decode(in["data_b64"].get<std::string>())));
    } else {
      throw_validation("input must be {kind: text, text} or {kind: image, data_b64}", {{"pointer", ptr}});
    }
  }
  return r;
}

ExtractResponse decode_response(const nlohmann::json& j) {
  if (!j.is_object()) bad_response("not an object");
  ExtractResponse r;
  if (!j.contains("dim") || !j["dim"].is_number_unsigned()) bad_response("missing dim");
  r.dim = j["dim"].get<uint32_t>();
  if (!j.contains("vectors") || !j["vectors"].is_array()) bad_response("missing vectors");
  for (const auto& v : j["vectors"]) {
    if (!v.is_array() || v.size() != r.dim) bad_response("vector length differs from dim");
    std::vector<float> out;
    out.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number()) bad_response("vector entry is not a number");
      out.push_back(static_cast<float>(x.get<double>()));
    }
    r.vectors.push_back(std::move(out));
  }
  if (j.contains("labels") && !j["labels"].is_null()) {
    if (!j["labels"].is_array() || j["labels"].size() != r.vectors.size()) bad_response("labels do not match vectors");
    r.labels.emplace();
    for (const auto& item : j["labels"]) {
      if (!item.is_array()) bad_response("labels entry is not a list");
      std::vector<Label> labels;
      for (const auto& pair : item) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_number()) {
          bad_response("label is not a [keyword, confidence] pair");
        }
        labels.push_back({pair[0].get<std::string>(), static_cast<float>(pair[1].get<double>())});
      }
      r.labels->push_back(std::move(labels));
    }
  }
  r.model_version = j.value("model_version", "");
  return r;
}

HealthResponse decode_health(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("status") || !j["status"].is_string()) bad_response("health without status");
  HealthResponse h;
  h.status = j["status"].get<std::string>();
  if (j.contains("plugins")) {
    if (!j["plugins"].is_array()) bad_response("plugins is not a list");
    for (const auto& m : j["plugins"]) {
      try {
        h.plugins.push_back(manifest_from_json(m));
      } catch (const Error& e) {
        bad_response(e.what());
      }
    }
  }
  return h;
}

}  // namespace artsearch::plugins::protocol
