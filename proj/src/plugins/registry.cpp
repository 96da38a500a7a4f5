#include "artsearch/plugins/registry.hpp"

#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "artsearch/common/text.hpp"
#include "artsearch/plugins/builtin.hpp"

namespace artsearch::plugins {
namespace {

// Leaves already-unit vectors bit-identical so remote round trips stay exact.
bool ensure_unit(std::vector<float>& v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) return false;
  if (std::abs(norm - 1.0) > 1e-5) {
    for (auto& x : v) x = static_cast<float>(x / norm);
  }
  return true;
}

}  // namespace

void PluginRegistry::add(std::shared_ptr<Extractor> extractor) {
  const PluginManifest& m = extractor->manifest();
  validate(m);
  std::unique_lock lock(mu_);
  const auto it = plugins_.find(m.name);
  if (it != plugins_.end() && it->second->manifest().vector_dim != m.vector_dim) {
    throw_validation(fmt::format("plugin '{}' is registered with dim {}, not {}", m.name,
                                 it->second->manifest().vector_dim, m.vector_dim),
                     {{"plugin", m.name}});
  }
  plugins_[m.name] = std::move(extractor);
}

void PluginRegistry::register_builtin(std::string_view id) { add(make_builtin(id)); }

void PluginRegistry::register_remote(const std::string& name, const std::string& endpoint, const RemoteOptions& options) {
  protocol::HealthResponse health;
  try {
    health = fetch_health(endpoint, options);
  } catch (const Error& e) {
    throw Error(ErrorCode::kRegistration, fmt::format("plugin '{}' failed its health check: {}", name, e.what()),
                {{"plugin", name}});
  }
  if (health.status != "ok") {
    throw Error(ErrorCode::kRegistration, fmt::format("plugin '{}' endpoint reports status '{}'", name, health.status),
                {{"plugin", name}});
  }
  for (const auto& m : health.plugins) {
    if (m.name == name) {
      add(std::make_shared<RemoteExtractor>(endpoint, m, options));
      spdlog::info("registered remote plugin {} (dim {})", name, m.vector_dim);
      return;
    }
  }
  throw Error(ErrorCode::kRegistration, fmt::format("endpoint does not serve plugin '{}'", name), {{"plugin", name}});
}

bool PluginRegistry::contains(std::string_view name) const {
  std::shared_lock lock(mu_);
  return plugins_.find(name) != plugins_.end();
}

std::shared_ptr<Extractor> PluginRegistry::get(std::string_view name) const {
  std::shared_lock lock(mu_);
  const auto it = plugins_.find(name);
  if (it == plugins_.end()) throw_not_found(fmt::format("plugin '{}' is not registered", name));
  return it->second;
}

std::vector<PluginManifest> PluginRegistry::list() const {
  std::shared_lock lock(mu_);
  std::vector<PluginManifest> out;
  for (const auto& [name, ext] : plugins_) out.push_back(ext->manifest());
  return out;
}

std::vector<ItemOutcome> PluginRegistry::extract(std::string_view name, std::span<const ExtractionInput> inputs) const {
  const auto ext = get(name);
  const PluginManifest& m = ext->manifest();
  for (const auto& in : inputs) {
    if (!m.supports(in.kind)) {
      throw_validation(fmt::format("plugin '{}' does not accept {} input", m.name, to_string(in.kind)),
                       {{"plugin", m.name}});
    }
  }
  // Inputs that can never be valid are failed here so backends never see them.
  std::vector<ItemOutcome> out(inputs.size());
  std::vector<ExtractionInput> forwarded;
  std::vector<size_t> slots;
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].kind == Modality::kText && trim(inputs[i].text).empty()) {
      out[i] = ItemOutcome::failure(ErrorCode::kValidation, "text input is empty");
    } else {
      forwarded.push_back(inputs[i]);
      slots.push_back(i);
    }
  }
  if (forwarded.empty()) return out;
  auto results = ext->extract(forwarded);
  if (results.size() != forwarded.size()) {
    throw Error(ErrorCode::kInternal, fmt::format("plugin '{}' returned {} results for {} inputs", m.name,
                                                  results.size(), forwarded.size()));
  }
  for (size_t j = 0; j < results.size(); ++j) {
    ItemOutcome& r = results[j];
    if (r.ok()) {
      if (r.vector.size() != m.vector_dim) {
        r = ItemOutcome::failure(ErrorCode::kFormat, fmt::format("plugin '{}' produced a vector of dim {}, expected {}",
                                                                  m.name, r.vector.size(), m.vector_dim));
      } else if (!ensure_unit(r.vector)) {
        r = ItemOutcome::failure(ErrorCode::kValidation, "input produced a zero or non-finite vector");
      } else {
        try {
          canonicalize(r.labels);
        } catch (const Error& e) {
          r = ItemOutcome::failure(ErrorCode::kFormat, e.what());
        }
      }
    }
    out[slots[j]] = std::move(r);
  }
  return out;
}

std::vector<float> PluginRegistry::extract_one(std::string_view name, const ExtractionInput& input) const {
  auto r = extract(name, std::span(&input, 1));
  if (!r[0].ok()) throw Error(*r[0].error, r[0].error_message);
  return std::move(r[0].vector);
}

ClassifierOutput PluginRegistry::classify(std::string_view name, const ExtractionInput& input) const {
  const auto ext = get(name);
  if (ext->manifest().kind != PluginKind::kClassifier) {
    throw_validation(fmt::format("plugin '{}' is not a classifier", name), {{"plugin", std::string(name)}});
  }
  auto r = extract(name, std::span(&input, 1));
  if (!r[0].ok()) throw Error(*r[0].error, r[0].error_message);
  return {std::move(r[0].labels), ext->taxonomy()};
}

}  // namespace artsearch::plugins
