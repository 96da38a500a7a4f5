#include "artsearch/service/api.hpp"

#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "artsearch/common/hashing.hpp"
#include "artsearch/plugins/image.hpp"
#include "artsearch/query/query_spec.hpp"

namespace artsearch::service {
namespace {

ApiResponse json_response(const nlohmann::json& j, int status = 200) { return {status, "application/json", j.dump()}; }

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kTransient: return "transient";
    default: return "internal";
  }
}

nlohmann::json parse_body(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw_validation(fmt::format("request body is not valid JSON (byte {})", e.byte), {{"pointer", ""}});
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  size_t i = 0;
  while (i < path.size()) {
    const size_t j = path.find('/', i);
    const size_t end = j == std::string::npos ? path.size() : j;
    if (end > i) parts.push_back(path.substr(i, end - i));
    i = end + 1;
  }
  return parts;
}

std::string image_content_type(const std::vector<uint8_t>& b) {
  if (b.size() >= 8 && b[0] == 0x89 && b[1] == 'P' && b[2] == 'N' && b[3] == 'G') return "image/png";
  if (b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF) return "image/jpeg";
  return "application/octet-stream";
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kTransient: return 503;
    default: return 500;
  }
}

Api::Api(Workspace& workspace, Clock clock)
    : ws_(workspace), clock_(std::move(clock)), data_dir_(std::filesystem::absolute(workspace.config().data_dir).string()) {}

std::string Api::scrub(std::string message) const {
  for (const std::string& needle : {data_dir_, ws_.config().data_dir.string()}) {
    if (needle.empty() || needle == ".") continue;
    for (size_t pos; (pos = message.find(needle)) != std::string::npos;) message.replace(pos, needle.size(), "<data>");
  }
  return message;
}

ApiResponse Api::handle(const ApiRequest& request) {
  ErrorCode code = ErrorCode::kInternal;
  std::string message;
  std::map<std::string, std::string> detail;
  try {
    return route(request);
  } catch (const Error& e) {
    code = e.code();
    message = e.what();
    detail = e.detail();
  } catch (const std::exception& e) {
    message = e.what();
  }
  const int status = http_status(code);
  if (status == 500) {
    spdlog::error("{} {}: {}", request.method, request.path, message);
    message = "internal error";
    detail.clear();
  }
  nlohmann::json d = nlohmann::json::object();
  for (const auto& [k, v] : detail) d[k] = scrub(v);
  return json_response({{"error", {{"code", error_name(code)}, {"message", scrub(message)}, {"detail", d}}}}, status);
}

ApiResponse Api::route(const ApiRequest& r) {
  const auto p = split_path(r.path);
  const bool get = r.method == "GET", post = r.method == "POST";
  if (p.size() >= 2 && p[0] == "v1") {
    const auto& what = p[1];
    if (p.size() == 2) {
      if (get && what == "health") return health();
      if (get && what == "facets") return facets();
      if (get && what == "plugins") {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& m : ws_.plugins().list()) list.push_back(plugins::to_json(m));
        return json_response({{"plugins", list}});
      }
      if (post && what == "search") return search(r.body);
      if (post && what == "explain") return explain(r.body);
      if (post && what == "uploads") return upload(r.body);
      if (get && what == "jobs") {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& s : ws_.jobs().list()) list.push_back(scrub_json(s));
        return json_response({{"jobs", list}});
      }
    }
    if (p.size() == 3 && get && what == "jobs") return json_response(scrub_json(ws_.jobs().status(p[2])));
    if (p.size() == 4 && post && what == "jobs" && p[3] == "cancel") {
      ws_.jobs().cancel(p[2]);
      return json_response(scrub_json(ws_.jobs().status(p[2])));
    }
    if (p.size() == 3 && get && what == "documents") return document(p[2], false);
    if (p.size() == 4 && get && what == "documents" && p[3] == "image") return document(p[2], true);
    if (p.size() == 4 && post && what == "collections" && p[3] == "ingest") return ingest(p[2], r);
  }
  throw_not_found(fmt::format("no route for {} {}", r.method, r.path));
}

nlohmann::json Api::scrub_json(const ingest::JobStatus& s) const {
  auto j = ingest::to_json(s);
  if (j.contains("message")) j["message"] = scrub(j["message"].get<std::string>());
  for (auto& e : j["errors"]) e["message"] = scrub(e["message"].get<std::string>());
  return j;
}

ApiResponse Api::health() const {
  const auto snap = ws_.catalog().snapshot();
  nlohmann::json indexes = nlohmann::json::object();
  for (const auto& name : ws_.indexes().plugins()) indexes[name] = ws_.indexes().find(name)->size();
  nlohmann::json plugins = nlohmann::json::array();
  for (const auto& m : ws_.plugins().list()) plugins.push_back(m.name);
  return json_response({{"status", "ok"},
                        {"documents", snap->size()},
                        {"generation", snap->generation()},
                        {"plugins", plugins},
                        {"indexes", indexes}});
}

ApiResponse Api::facets() const {
  const auto snap = ws_.catalog().snapshot();
  nlohmann::json list = nlohmann::json::array();
  for (const auto& f : snap->facets().definitions()) {
    auto j = catalog::to_json(f);
    j["counts"] = snap->facet_counts({}, f.field);
    list.push_back(std::move(j));
  }
  return json_response({{"facets", list}});
}

std::vector<uint8_t> Api::resolve_upload(const std::string& token) const {
  std::lock_guard lock(uploads_mu_);
  const auto it = uploads_.find(token);
  if (it == uploads_.end()) throw_validation("unknown upload token");
  if (clock_() >= it->second.expires) throw_validation("upload token expired");
  return it->second.bytes;
}

ApiResponse Api::search(const std::string& body) {
  const auto spec = query::parse_query_spec(parse_body(body), [this](const std::string& t) { return resolve_upload(t); });
  if (spec.limit > ws_.config().max_page_size)
    throw_validation(fmt::format("/page/limit: limit exceeds the configured maximum {}", ws_.config().max_page_size),
                     {{"pointer", "/page/limit"}});
  const auto page = ws_.engine().execute(spec);
  auto j = query::to_json(page);
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& f : page.snapshot->facets().definitions()) {
    counts[f.field] = page.diagnostics.candidates_restricted
                          ? page.snapshot->facet_counts_within(page.candidate_ids, f.field)
                          : page.snapshot->facet_counts({}, f.field);
  }
  j["facet_counts"] = std::move(counts);
  return json_response(j);
}

ApiResponse Api::explain(const std::string& body) {
  const auto j = parse_body(body);
  if (!j.is_object()) throw_validation("expected an object", {{"pointer", ""}});
  for (const auto& [key, value] : j.items()) {
    if (key != "query" && key != "doc_id") throw_validation(fmt::format("/{}: unknown property", key), {{"pointer", "/" + key}});
  }
  if (!j.contains("doc_id") || !j["doc_id"].is_string())
    throw_validation("/doc_id: expected a string", {{"pointer", "/doc_id"}});
  if (!j.contains("query")) throw_validation("/query: required", {{"pointer", "/query"}});
  query::QuerySpec spec;
  try {
    spec = query::parse_query_spec(j["query"], [this](const std::string& t) { return resolve_upload(t); });
  } catch (const Error& e) {
    auto detail = e.detail();
    detail["pointer"] = "/query" + detail["pointer"];
    throw Error(e.code(), e.what(), detail);
  }
  return json_response(query::to_json(ws_.engine().explain(spec, j["doc_id"].get<std::string>())));
}

ApiResponse Api::upload(const std::string& body) {
  if (body.empty()) throw_validation("upload body is empty");
  if (body.size() > ws_.config().max_upload_bytes)
    throw_validation(fmt::format("upload of {} bytes exceeds the limit of {} bytes", body.size(), ws_.config().max_upload_bytes),
                     {{"limit", std::to_string(ws_.config().max_upload_bytes)}});
  std::vector<uint8_t> bytes(body.begin(), body.end());
  plugins::RgbImage img;
  try {
    img = plugins::decode_image(bytes);
  } catch (const Error& e) {
    throw_validation(fmt::format("upload is not a decodable PNG or JPEG image: {}", e.what()));
  }
  const auto now = clock_();
  const std::string token = random_token();
  {
    std::lock_guard lock(uploads_mu_);
    std::erase_if(uploads_, [&](const auto& kv) { return kv.second.expires <= now; });
    uploads_[token] = Upload{std::move(bytes), now + ws_.config().upload_ttl};
  }
  return json_response({{"upload_token", token},
                        {"expires_in_seconds", ws_.config().upload_ttl.count()},
                        {"width", img.width},
                        {"height", img.height}},
                       201);
}

size_t Api::live_uploads() const {
  std::lock_guard lock(uploads_mu_);
  const auto now = clock_();
  return std::count_if(uploads_.begin(), uploads_.end(), [&](const auto& kv) { return kv.second.expires > now; });
}

ApiResponse Api::ingest(const std::string& collection_id, const ApiRequest& request) {
  validate_collection_id(collection_id);
  std::vector<std::string> plugins;
  if (const auto it = request.query.find("plugins"); it != request.query.end()) {
    std::stringstream ss(it->second);
    for (std::string name; std::getline(ss, name, ',');)
      if (!name.empty()) plugins.push_back(name);
  }
  std::istringstream in(request.body);
  auto manifest = ingest::parse_manifest(in, collection_id, ws_.collection_dir(collection_id));
  if (manifest.total() == 0) throw_validation("manifest has no entries");
  const auto id = ws_.ingest(std::move(manifest), std::move(plugins));
  return json_response({{"job_id", id}, {"status", scrub_json(ws_.jobs().status(id))}}, 202);
}

ApiResponse Api::document(const std::string& doc_id, bool image) {
  const auto snap = ws_.catalog().snapshot();
  const auto* doc = snap->find(doc_id);
  if (!doc) throw_not_found(fmt::format("document '{}' not found", doc_id));
  if (image) {
    auto bytes = ws_.load_image(*doc);
    const auto type = image_content_type(bytes);
    return {200, type, std::string(bytes.begin(), bytes.end())};
  }
  auto j = catalog::to_json(*doc);
  nlohmann::json vectors = nlohmann::json::array();
  for (const auto& name : ws_.indexes().plugins()) {
    if (ws_.indexes().find(name)->contains(doc_id)) vectors.push_back(name);
  }
  j["indexed_by"] = std::move(vectors);
  return json_response(j);
}

}  // namespace artsearch::service
