#include "artsearch/query/engine.hpp"

#include <algorithm>
#include <iterator>
#include <set>

#include <fmt/format.h>

#include "artsearch/analytics/kmeans.hpp"
#include "artsearch/analytics/neighbor_embed.hpp"
#include "artsearch/analytics/pca.hpp"
#include "artsearch/common/error.hpp"
#include "artsearch/common/text.hpp"
#include "artsearch/query/fusion.hpp"

namespace artsearch::query {

namespace {

struct ActivePlugin {
  std::string name;
  double weight = 0.0;
  std::vector<double> fused;
  std::vector<float> fused_f;
  const index::VectorIndex* index = nullptr;
};

std::vector<std::string> intersect(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool has_keyword(const QuerySpec& spec) { return spec.keyword_query && !trim(*spec.keyword_query).empty(); }

std::string describe(const QueryTerm& t, size_t i) {
  if (std::holds_alternative<TextSource>(t.source)) return fmt::format("term {} (text)", i);
  if (const auto* d = std::get_if<DocSource>(&t.source)) return fmt::format("term {} (document '{}')", i, d->doc_id);
  return fmt::format("term {} (image)", i);
}

}  // namespace

struct QueryEngine::Prepared {
  std::vector<PluginDiagnostics> plugins;  // every weighted plug-in, name order
  std::vector<ActivePlugin> active;        // fused and W > 0, name order
  std::map<std::string, double> weights;   // of `active`
  std::vector<std::string> warnings;
  bool restricted = false;
  std::vector<std::string> candidates;  // sorted; meaningful when restricted
};

QueryEngine::QueryEngine(Sources sources, EngineOptions options) : sources_(sources), options_(options) {
  if (!sources_.catalog || !sources_.indexes || !sources_.plugins) {
    throw Error(ErrorCode::kInternal, "query engine needs a catalog, an index set and a plug-in registry");
  }
}

std::shared_lock<SharedMutex> QueryEngine::lock() const {
  if (!sources_.commit_mutex) return {};
  return std::shared_lock(*sources_.commit_mutex);
}

QueryEngine::Prepared QueryEngine::prepare(const QuerySpec& spec, const catalog::CatalogSnapshot& snap) const {
  validate(spec);
  Prepared p;

  for (size_t i = 0; i < spec.filters.size(); ++i) {
    try {
      snap.facets().validate(spec.filters[i]);
    } catch (const Error& e) {
      auto detail = e.detail();
      detail["pointer"] = fmt::format("/filters/{}", i);
      throw Error(e.code(), e.what(), std::move(detail));
    }
  }
  for (size_t i = 0; i < spec.terms.size(); ++i) {
    if (const auto* d = std::get_if<DocSource>(&spec.terms[i].source); d && !snap.find(d->doc_id)) {
      throw_validation(fmt::format("reference document '{}' does not exist", d->doc_id),
                       {{"pointer", fmt::format("/terms/{}/doc_id", i)}});
    }
  }

  // Documents are images, so doc_id terms count as the image modality.
  bool want_text = false, want_image = false;
  for (const auto& t : spec.terms) {
    want_text = want_text || std::holds_alternative<TextSource>(t.source);
    want_image = want_image || !std::holds_alternative<TextSource>(t.source);
  }
  std::map<std::string, plugins::PluginManifest> manifests;
  for (auto& m : sources_.plugins->list()) manifests.emplace(m.name, std::move(m));

  std::map<std::string, double> weights;
  if (spec.plugin_weights.empty()) {
    for (const auto& [name, m] : manifests) {
      if (m.kind != plugins::PluginKind::kFeature) continue;
      if ((want_text && m.supports(plugins::Modality::kText)) || (want_image && m.supports(plugins::Modality::kImage))) {
        weights[name] = 1.0;
      }
    }
  } else {
    for (const auto& [name, w] : spec.plugin_weights) {
      const auto it = manifests.find(name);
      if (it == manifests.end()) {
        throw_validation(fmt::format("unknown plug-in '{}'", name), {{"pointer", "/plugin_weights/" + name}});
      }
      if (it->second.kind != plugins::PluginKind::kFeature) {
        throw_validation(fmt::format("plug-in '{}' is a classifier and has no vector space", name),
                         {{"pointer", "/plugin_weights/" + name}});
      }
      weights[name] = w;
    }
  }

  for (const auto& [name, w] : weights) {
    PluginDiagnostics diag{.plugin = name, .weight = w};
    if (w <= 0.0) {
      p.plugins.push_back(std::move(diag));
      continue;
    }
    const auto& manifest = manifests.at(name);
    const index::VectorIndex* idx = sources_.indexes->find(name);

    std::vector<std::vector<float>> embeddings(spec.terms.size());
    std::vector<bool> embedded(spec.terms.size(), false);
    std::vector<plugins::ExtractionInput> inputs;
    std::vector<size_t> input_terms;
    for (size_t i = 0; i < spec.terms.size(); ++i) {
      const auto& source = spec.terms[i].source;
      if (const auto* text = std::get_if<TextSource>(&source)) {
        if (!manifest.supports(plugins::Modality::kText)) continue;
        inputs.push_back(plugins::ExtractionInput::of_text(text->text));
        input_terms.push_back(i);
      } else if (const auto* img = std::get_if<ImageSource>(&source)) {
        if (!manifest.supports(plugins::Modality::kImage)) continue;
        inputs.push_back(plugins::ExtractionInput::of_image(img->bytes));
        input_terms.push_back(i);
      } else {
        const auto& doc = std::get<DocSource>(source).doc_id;
        auto v = idx ? idx->get(doc) : std::nullopt;
        if (!v) {
          p.warnings.push_back(fmt::format("{}: skipped for '{}', which has no vector for it", describe(spec.terms[i], i), name));
          continue;
        }
        embeddings[i] = std::move(*v);
        embedded[i] = true;
      }
    }
    if (!inputs.empty()) {
      try {
        auto outcomes = sources_.plugins->extract(name, inputs);
        for (size_t k = 0; k < outcomes.size(); ++k) {
          const size_t i = input_terms[k];
          if (outcomes[k].ok()) {
            embeddings[i] = std::move(outcomes[k].vector);
            embedded[i] = true;
          } else {
            p.warnings.push_back(fmt::format("{}: '{}' failed to embed it: {}", describe(spec.terms[i], i), name,
                                             outcomes[k].error_message));
          }
        }
      } catch (const Error& e) {
        p.warnings.push_back(fmt::format("plug-in '{}' failed to embed the query terms: {}", name, e.what()));
      }
    }

    std::vector<WeightedEmbedding> terms;
    for (size_t i = 0; i < spec.terms.size(); ++i) {
      if (embedded[i]) terms.push_back({embeddings[i], spec.terms[i].weight});
    }
    diag.terms_used = terms.size();
    auto fused = fuse(terms);
    if (!fused) {
      if (!terms.empty()) p.warnings.push_back(fmt::format("plug-in '{}': weighted terms cancel out", name));
      p.plugins.push_back(std::move(diag));
      continue;
    }
    diag.fused = true;
    ActivePlugin a{.name = name, .weight = w, .fused = std::move(*fused), .index = idx};
    a.fused_f.assign(a.fused.begin(), a.fused.end());
    p.weights[name] = w;
    p.active.push_back(std::move(a));
    p.plugins.push_back(std::move(diag));
  }

  p.restricted = !spec.filters.empty() || has_keyword(spec);
  if (p.restricted) {
    p.candidates = snap.match_set(spec.filters);
    if (has_keyword(spec)) p.candidates = intersect(p.candidates, snap.keyword_matches(*spec.keyword_query));
  }
  return p;
}

ResultPage QueryEngine::execute(const QuerySpec& spec) const {
  const auto guard = lock();
  const auto snap = sources_.catalog->snapshot();
  Prepared prep = prepare(spec, *snap);

  ResultPage page;
  page.offset = spec.offset;
  page.limit = spec.limit;
  page.generation = snap->generation();
  page.snapshot = snap;
  auto& diag = page.diagnostics;
  diag.candidates = prep.restricted ? prep.candidates.size() : snap->size();
  diag.candidates_restricted = prep.restricted;

  std::vector<ResultEntry> ranked;
  if (prep.active.empty()) {
    if (!has_keyword(spec)) throw_validation("no scorable plug-in", {{"pointer", "/terms"}});
    diag.ranking = "keyword";
    const auto hits = snap->keyword_search(*spec.keyword_query, spec.filters, std::max<size_t>(snap->size(), 1));
    const double top = hits.empty() ? 0.0 : hits.front().score;
    for (const auto& h : hits) ranked.push_back({.doc_id = h.doc_id, .final_score = top > 0.0 ? h.score / top : 0.0});
  } else {
    diag.ranking = "vector";
    const std::optional<std::span<const std::string>> allowed =
        prep.restricted ? std::optional<std::span<const std::string>>(prep.candidates) : std::nullopt;
    std::set<std::string> pool;
    std::map<std::string, PluginDiagnostics*> by_name;
    for (auto& pd : prep.plugins) by_name[pd.plugin] = &pd;
    for (const auto& a : prep.active) {
      auto& pd = *by_name.at(a.name);
      if (!a.index || (prep.restricted && prep.candidates.empty())) continue;
      const size_t depth = options_.full_depth
                               ? a.index->size()
                               : std::max(4 * spec.limit * (spec.offset / spec.limit + 1), options_.min_depth);
      pd.depth = depth;
      if (depth == 0) continue;
      const auto hits = a.index->search(a.fused_f, depth, allowed);
      pd.retrieved = hits.size();
      for (const auto& h : hits) {
        if (snap->find(h.doc_id)) pool.insert(h.doc_id);
      }
    }
    ranked.reserve(pool.size());
    for (const auto& id : pool) {
      ResultEntry e{.doc_id = id};
      for (const auto& a : prep.active) {
        const auto v = a.index ? a.index->get(id) : std::nullopt;
        if (!v) {
          ++by_name.at(a.name)->uncovered;
          continue;
        }
        e.per_plugin[a.name] = plugin_score(cosine(a.fused, *v));
      }
      e.final_score = combine(prep.weights, e.per_plugin);
      ranked.push_back(std::move(e));
    }
  }
  diag.plugins = std::move(prep.plugins);
  diag.warnings = std::move(prep.warnings);

  std::sort(ranked.begin(), ranked.end(), [](const ResultEntry& a, const ResultEntry& b) {
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    return a.doc_id < b.doc_id;
  });
  for (size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = i + 1;
  page.total = ranked.size();

  if (!std::holds_alternative<GridLayout>(spec.layout)) {
    const size_t n = std::min(options_.layout_cap, ranked.size());
    const ActivePlugin* lp = nullptr;
    for (const auto& a : prep.active) {
      if (a.index && (!lp || a.weight > lp->weight)) lp = &a;  // name order breaks ties
    }
    LayoutPayload layout;
    layout.kind = std::holds_alternative<ClusterLayout>(spec.layout) ? "clusters" : "canvas";
    if (!lp) {
      diag.warnings.push_back("layout skipped: no plug-in vector space to lay out");
    } else {
      layout.plugin = lp->name;
      analytics::PointSet points;
      std::map<std::string, size_t> position;
      for (size_t i = 0; i < n; ++i) {
        if (auto v = lp->index->get(ranked[i].doc_id)) {
          position[ranked[i].doc_id] = i;
          points.emplace_back(ranked[i].doc_id, std::move(*v));
        }
      }
      if (points.size() < n) {
        diag.warnings.push_back(
            fmt::format("layout: {} results have no '{}' vector and are not laid out", n - points.size(), lp->name));
      }
      layout.points = points.size();
      if (const auto* c = std::get_if<ClusterLayout>(&spec.layout); c && !points.empty()) {
        const size_t k = std::min(c->k.value_or(analytics::default_cluster_count(points.size())), points.size());
        const auto assignment = analytics::kmeans(points, {.k = k, .seed = c->seed});
        layout.k = assignment.k;
        layout.sizes.assign(assignment.k, 0);
        for (size_t i = 0; i < assignment.ids.size(); ++i) {
          ranked[position.at(assignment.ids[i])].cluster_id = assignment.assignments[i];
          ++layout.sizes[assignment.assignments[i]];
        }
      } else if (const auto* cv = std::get_if<CanvasLayout>(&spec.layout); cv && !points.empty()) {
        analytics::Projection2D proj;
        const size_t needed = std::max<size_t>(cv->params.n_neighbors + 1, 10);
        const bool embed = cv->method == ProjectionMethod::kNeighborEmbed && points.size() >= needed;
        if (cv->method == ProjectionMethod::kNeighborEmbed && !embed) {
          diag.warnings.push_back(
              fmt::format("canvas: {} points are too few for neighbor-embed (need {}); used pca", points.size(), needed));
        }
        if (embed) {
          proj = analytics::neighbor_embed_2d(points, cv->params);
        } else if (points.size() >= 2) {
          proj = analytics::pca2d(points).projection;
        } else {
          proj = {.method = "pca", .ids = {points.front().first}, .coords = {{0.0, 0.0}}, .degenerate = true};
        }
        layout.method = proj.method;
        layout.degenerate = proj.degenerate;
        for (size_t i = 0; i < proj.ids.size(); ++i) ranked[position.at(proj.ids[i])].coords = proj.coords[i];
      }
      for (size_t i = 0; i < n; ++i) {
        if (!position.count(ranked[i].doc_id)) continue;
        layout.ids.push_back(ranked[i].doc_id);
        if (ranked[i].cluster_id) layout.cluster_ids.push_back(*ranked[i].cluster_id);
        if (ranked[i].coords) layout.coords.push_back(*ranked[i].coords);
      }
    }
    page.layout = std::move(layout);
  }

  const size_t begin = std::min(spec.offset, ranked.size());
  const size_t end = std::min(begin + spec.limit, ranked.size());
  page.results.assign(std::make_move_iterator(ranked.begin() + static_cast<std::ptrdiff_t>(begin)),
                      std::make_move_iterator(ranked.begin() + static_cast<std::ptrdiff_t>(end)));
  if (prep.restricted) page.candidate_ids = std::move(prep.candidates);
  return page;
}

std::map<std::string, std::optional<std::vector<double>>> QueryEngine::fused_vectors(const QuerySpec& spec) const {
  const auto guard = lock();
  const auto snap = sources_.catalog->snapshot();
  Prepared prep = prepare(spec, *snap);
  std::map<std::string, std::optional<std::vector<double>>> out;
  for (const auto& pd : prep.plugins) out[pd.plugin] = std::nullopt;
  for (auto& a : prep.active) out[a.name] = std::move(a.fused);
  return out;
}

Explanation QueryEngine::explain(const QuerySpec& spec, const std::string& doc_id) const {
  const auto guard = lock();
  const auto snap = sources_.catalog->snapshot();
  if (!snap->find(doc_id)) throw_not_found(fmt::format("document '{}' not found", doc_id));
  Prepared prep = prepare(spec, *snap);

  Explanation out;
  out.doc_id = doc_id;
  out.warnings = std::move(prep.warnings);
  std::map<std::string, double> scores;
  for (const auto& pd : prep.plugins) {
    PluginBreakdown b{.plugin = pd.plugin, .weight = pd.weight, .fused = pd.fused};
    const auto it = std::find_if(prep.active.begin(), prep.active.end(), [&](const auto& a) { return a.name == pd.plugin; });
    const auto* idx = sources_.indexes->find(pd.plugin);
    const auto v = idx ? idx->get(doc_id) : std::nullopt;
    b.covered = v.has_value();
    if (it != prep.active.end() && v) {
      b.score = plugin_score(cosine(it->fused, *v));
      scores[pd.plugin] = *b.score;
    }
    out.plugins.push_back(std::move(b));
  }

  bool candidate = true;
  for (const auto& f : spec.filters) {
    const auto ids = snap->match_set({f});
    const bool passed = std::binary_search(ids.begin(), ids.end(), doc_id);
    candidate = candidate && passed;
    out.filters.push_back({f, passed});
  }
  if (has_keyword(spec)) {
    const auto ids = snap->keyword_matches(*spec.keyword_query);
    out.keyword_match = std::binary_search(ids.begin(), ids.end(), doc_id);
    candidate = candidate && *out.keyword_match;
  }
  out.candidate = candidate;

  if (!prep.active.empty()) {
    out.final_score = combine(prep.weights, scores);
  } else if (has_keyword(spec)) {
    const auto hits = snap->keyword_search(*spec.keyword_query, spec.filters, std::max<size_t>(snap->size(), 1));
    const auto hit = std::find_if(hits.begin(), hits.end(), [&](const auto& h) { return h.doc_id == doc_id; });
    if (hit != hits.end() && hits.front().score > 0.0) out.final_score = hit->score / hits.front().score;
  } else {
    throw_validation("no scorable plug-in", {{"pointer", "/terms"}});
  }
  return out;
}

nlohmann::json to_json(const ResultEntry& e) {
  nlohmann::json j{{"doc_id", e.doc_id}, {"rank", e.rank}, {"final_score", e.final_score}, {"per_plugin", e.per_plugin}};
  if (e.cluster_id) j["cluster_id"] = *e.cluster_id;
  if (e.coords) j["coords2d"] = {(*e.coords)[0], (*e.coords)[1]};
  return j;
}

nlohmann::json to_json(const Diagnostics& d) {
  nlohmann::json plugins = nlohmann::json::array();
  for (const auto& p : d.plugins) {
    plugins.push_back({{"plugin", p.plugin},
                       {"weight", p.weight},
                       {"fused", p.fused},
                       {"terms_used", p.terms_used},
                       {"depth", p.depth},
                       {"retrieved", p.retrieved},
                       {"uncovered", p.uncovered}});
  }
  return {{"ranking", d.ranking},
          {"candidates", d.candidates},
          {"candidates_restricted", d.candidates_restricted},
          {"plugins", plugins},
          {"warnings", d.warnings}};
}

nlohmann::json to_json(const LayoutPayload& l) {
  nlohmann::json j{{"kind", l.kind}, {"plugin", l.plugin}, {"points", l.points}};
  nlohmann::json items = nlohmann::json::array();
  for (size_t i = 0; i < l.ids.size(); ++i) {
    nlohmann::json item{{"doc_id", l.ids[i]}};
    if (i < l.cluster_ids.size()) item["cluster_id"] = l.cluster_ids[i];
    if (i < l.coords.size()) item["coords2d"] = {l.coords[i][0], l.coords[i][1]};
    items.push_back(std::move(item));
  }
  if (l.kind == "clusters") {
    j["k"] = l.k;
    j["sizes"] = l.sizes;
  } else {
    j["method"] = l.method;
    j["degenerate"] = l.degenerate;
  }
  j["items"] = std::move(items);
  return j;
}

nlohmann::json to_json(const ResultPage& page) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& e : page.results) results.push_back(to_json(e));
  nlohmann::json j{{"results", std::move(results)},
                   {"total", page.total},
                   {"page", {{"offset", page.offset}, {"limit", page.limit}}},
                   {"generation", page.generation},
                   {"diagnostics", to_json(page.diagnostics)}};
  if (page.layout) j["layout"] = to_json(*page.layout);
  return j;
}

nlohmann::json to_json(const Explanation& e) {
  nlohmann::json plugins = nlohmann::json::array();
  for (const auto& p : e.plugins) {
    nlohmann::json item{{"plugin", p.plugin}, {"weight", p.weight}, {"fused", p.fused}, {"covered", p.covered}};
    item["score"] = p.score ? nlohmann::json(*p.score) : nlohmann::json(nullptr);
    plugins.push_back(std::move(item));
  }
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& f : e.filters) filters.push_back({{"filter", to_json(f.filter)}, {"passed", f.passed}});
  nlohmann::json j{{"doc_id", e.doc_id},
                   {"final_score", e.final_score},
                   {"plugins", std::move(plugins)},
                   {"filters", std::move(filters)},
                   {"candidate", e.candidate},
                   {"warnings", e.warnings}};
  if (e.keyword_match) j["keyword_match"] = *e.keyword_match;
  return j;
}

}  // namespace artsearch::query
