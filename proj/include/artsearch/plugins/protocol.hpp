#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artsearch/plugins/manifest.hpp"

namespace artsearch::plugins::protocol {

// Inference wire protocol, JSON over HTTP:
//
//   POST /v1/extract  {"plugin": str, "inputs": [{"kind": "image", "data_b64": str} | {"kind": "text", "text": str}]}
//     200 -> {"dim": int, "vectors": [[float, ...], ...], "labels": [[["kw", conf], ...], ...], "model_version": str}
//            ("labels" is optional)
//     400 -> validation failure, 503 -> transient failure; body {"error": str}
//   GET  /v1/health   -> {"status": "ok", "plugins": [manifest, ...]}
//
// Floats are written with enough digits to round-trip float32 exactly.

struct ExtractRequest {
  std::string plugin;
  std::vector<ExtractionInput> inputs;
};

struct ExtractResponse {
  uint32_t dim = 0;
  std::vector<std::vector<float>> vectors;
  std::optional<std::vector<std::vector<Label>>> labels;
  std::string model_version;
};

struct HealthResponse {
  std::string status;
  std::vector<PluginManifest> plugins;
};

nlohmann::json encode(const ExtractRequest& r);
nlohmann::json encode(const ExtractResponse& r);
nlohmann::json encode(const HealthResponse& r);

/// Request decoding failures throw Error(kValidation) (the server answers 400).
ExtractRequest decode_request(const nlohmann::json& j);
/// Response decoding failures throw Error(kFormat): the peer broke the protocol.
ExtractResponse decode_response(const nlohmann::json& j);
HealthResponse decode_health(const nlohmann::json& j);

}  // namespace artsearch::plugins::protocol
