#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "artsearch/common/error.hpp"
#include "artsearch/service/workspace.hpp"

namespace artsearch::service {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// HTTP status for an error code: 400, 404, 503, otherwise 500.
int http_status(ErrorCode code);

/// Routes (all JSON unless noted):
///
///   GET  /v1/health
///   GET  /v1/plugins
///   GET  /v1/facets                        definitions with catalog-wide counts
///   POST /v1/search                        QuerySpec -> ResultPage + facet_counts
///   POST /v1/explain                       {"query": QuerySpec, "doc_id": str}
///   POST /v1/uploads                       raw PNG/JPEG body -> {"upload_token", ...}
///   POST /v1/collections/{id}/ingest       JSON-lines manifest body; ?plugins=a,b
///   GET  /v1/jobs, /v1/jobs/{id}
///   POST /v1/jobs/{id}/cancel
///   GET  /v1/documents/{id}
///   GET  /v1/documents/{id}/image          image bytes
///
/// Errors are {"error": {"code", "message", "detail"}} with the status from
/// http_status(). Internal errors carry a generic message; the real one is
/// logged. The only state kept between requests is the upload store.
class Api {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  explicit Api(Workspace& workspace, Clock clock = std::chrono::steady_clock::now);

  ApiResponse handle(const ApiRequest& request);

  size_t live_uploads() const;

 private:
  ApiResponse route(const ApiRequest& request);
  ApiResponse search(const std::string& body);
  ApiResponse explain(const std::string& body);
  ApiResponse upload(const std::string& body);
  ApiResponse ingest(const std::string& collection_id, const ApiRequest& request);
  ApiResponse document(const std::string& doc_id, bool image);
  ApiResponse health() const;
  ApiResponse facets() const;

  std::vector<uint8_t> resolve_upload(const std::string& token) const;
  std::string scrub(std::string message) const;
  nlohmann::json scrub_json(const ingest::JobStatus& s) const;

  struct Upload {
    std::vector<uint8_t> bytes;
    std::chrono::steady_clock::time_point expires;
  };

  Workspace& ws_;
  Clock clock_;
  std::string data_dir_;
  mutable std::mutex uploads_mu_;
  std::map<std::string, Upload> uploads_;
};

}  // namespace artsearch::service
