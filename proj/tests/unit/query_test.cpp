#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "artsearch/common/error.hpp"
#include "artsearch/common/hashing.hpp"
#include "artsearch/query/engine.hpp"
#include "artsearch/query/fusion.hpp"
#include "artsearch/query/query_spec.hpp"
#include "support/cross_modal_fixture.hpp"
#include "support/query_fixture.hpp"

namespace artsearch::query {
namespace {

using testing::make_query_fixture;
using testing::oracle_rank;
using testing::QueryFixture;
using testing::random_query_spec;

std::vector<std::string> order_of(const ResultPage& page) {
  std::vector<std::string> ids;
  for (const auto& e : page.results) ids.push_back(e.doc_id);
  return ids;
}

ErrorCode code_of(const std::function<void()>& f, std::string* pointer = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (pointer) pointer->clear();
    if (pointer && e.detail().count("pointer")) *pointer = e.detail().at("pointer");
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInternal;
}

QueryFixture& shared_fixture() {
  static auto fx = make_query_fixture(300, 7);
  return *fx;
}

TEST(Fusion, SingleTermIsItsEmbedding) {
  const std::vector<float> e = {0.6f, 0.8f};
  const std::vector<WeightedEmbedding> terms = {{e, 1.0}};
  const auto f = fuse(terms);
  ASSERT_TRUE(f);
  EXPECT_NEAR((*f)[0], 0.6, 1e-7);
  EXPECT_NEAR((*f)[1], 0.8, 1e-7);
}

TEST(Fusion, EqualHalfWeights) {
  const std::vector<float> e1 = {1.0f, 0.0f}, e2 = {0.0f, 1.0f};
  const std::vector<WeightedEmbedding> terms = {{e1, 0.5}, {e2, 0.5}};
  const auto f = fuse(terms);
  ASSERT_TRUE(f);
  EXPECT_NEAR((*f)[0], 0.7071, 1e-4);
  EXPECT_NEAR((*f)[1], 0.7071, 1e-4);
}

TEST(Fusion, CancellationIsAbsent) {
  const std::vector<float> e = {0.28f, -0.96f};
  const std::vector<WeightedEmbedding> terms = {{e, 1.0}, {e, -1.0}};
  EXPECT_FALSE(fuse(terms));
  EXPECT_FALSE(fuse(std::span<const WeightedEmbedding>{}));
}

TEST(Fusion, ScoreMapping) {
  EXPECT_EQ(plugin_score(1.0), 1.0);
  EXPECT_EQ(plugin_score(0.0), 0.5);
  EXPECT_EQ(plugin_score(-1.0), 0.0);
  EXPECT_EQ(plugin_score(1.0 + 1e-15), 1.0);
  const std::vector<double> f = {0.6, 0.8};
  const std::vector<float> same = {0.6f, 0.8f};
  EXPECT_NEAR(plugin_score(cosine(f, same)), 1.0, 1e-6);
}

TEST(Fusion, CombineIsWeightedMean) {
  EXPECT_DOUBLE_EQ(combine({{"a", 1.0}, {"b", 3.0}}, {{"a", 1.0}, {"b", 0.0}}), 0.25);
  // An uncovered plug-in still counts in the denominator.
  EXPECT_DOUBLE_EQ(combine({{"a", 1.0}, {"b", 1.0}}, {{"a", 0.5}}), 0.25);
}

TEST(QuerySpecJson, ParsesEveryField) {
  const auto j = nlohmann::json::parse(R"({
    "terms": [{"text": "crucifixion", "weight": 1.5}, {"doc_id": "doc000001", "weight": -0.5},
              {"image_b64": "AAEC"}, {"image_token": "tok"}],
    "plugin_weights": {"hashproj": 2, "colorgram": 0},
    "filters": [{"field": "artist", "values": ["goya"]}, {"field": "year", "range": [1500, 1600]}],
    "keyword_query": "saint",
    "page": {"offset": 20, "limit": 10},
    "layout": {"kind": "canvas", "method": "pca", "seed": 3}
  })");
  const auto spec = parse_query_spec(j, [](const std::string& token) {
    EXPECT_EQ(token, "tok");
    return std::vector<uint8_t>{9, 9};
  });
  ASSERT_EQ(spec.terms.size(), 4u);
  EXPECT_EQ(std::get<TextSource>(spec.terms[0].source).text, "crucifixion");
  EXPECT_EQ(spec.terms[0].weight, 1.5);
  EXPECT_EQ(std::get<DocSource>(spec.terms[1].source).doc_id, "doc000001");
  EXPECT_EQ(std::get<ImageSource>(spec.terms[2].source).bytes, (std::vector<uint8_t>{0, 1, 2}));
  EXPECT_EQ(spec.terms[2].weight, 1.0);
  EXPECT_EQ(std::get<ImageSource>(spec.terms[3].source).bytes, (std::vector<uint8_t>{9, 9}));
  EXPECT_EQ(spec.plugin_weights.at("hashproj"), 2.0);
  ASSERT_EQ(spec.filters.size(), 2u);
  EXPECT_EQ(std::get<catalog::YearRange>(spec.filters[1].accepted).hi, 1600);
  EXPECT_EQ(spec.offset, 20u);
  EXPECT_EQ(spec.limit, 10u);
  const auto& canvas = std::get<CanvasLayout>(spec.layout);
  EXPECT_EQ(canvas.method, ProjectionMethod::kPca);
  EXPECT_EQ(canvas.params.seed, 3u);
  for (const auto& f : spec.filters) EXPECT_EQ(to_json(filter_from_json(to_json(f), "")), to_json(f));
}

TEST(QuerySpecJson, ErrorsCarryPointers) {
  const auto pointer_of = [](const char* text) {
    std::string ptr;
    EXPECT_EQ(code_of([&] { parse_query_spec(nlohmann::json::parse(text)); }, &ptr), ErrorCode::kValidation) << text;
    return ptr;
  };
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a","weight":5}]})"), "/terms/0/weight");
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a"},{"text":"b","doc_id":"x"}]})"), "/terms/1");
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a","weight":-1}]})"), "/terms");
  EXPECT_EQ(pointer_of(R"({"terms":[]})"), "/terms");
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a"}],"page":{"limit":0}})"), "/page/limit");
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a"}],"page":{"limit":501}})"), "/page/limit");
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a"}],"page":{"offset":-1}})"), "/page/offset");
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a"}],"plugin_weights":{"x":-1}})"), "/plugin_weights/x");
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a"}],"filters":[{"field":"year","range":[5,1]}]})"), "/filters/0/range");
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a"}],"layout":{"kind":"spiral"}})"), "/layout/kind");
  EXPECT_EQ(pointer_of(R"({"terms":[{"text":"a"}],"bogus":1})"), "/bogus");
  EXPECT_EQ(pointer_of(R"({"terms":[{"image_b64":"@@@"}]})"), "/terms/0/image_b64");
  EXPECT_EQ(pointer_of(R"({"terms":[{"image_token":"t"}]})"), "/terms/0/image_token");
  // keyword_query alone is a valid query.
  EXPECT_NO_THROW(parse_query_spec(nlohmann::json::parse(R"({"keyword_query":"saint"})")));
}

TEST(Execute, SelfRetrieval) {
  QueryFixture fx;
  fx.registry.register_builtin("colorgram");
  std::mt19937_64 rng(1);
  const auto img = testing::block_image(rng);
  catalog::ImageDocument d{.doc_id = "only", .collection_id = "c", .image_ref = "only.png"};
  fx.catalog.upsert(d);
  fx.indexes.get_or_create("colorgram", 48).insert("only", plugins::colorgram_vector(img));
  QuerySpec spec;
  spec.terms.push_back({ImageSource{plugins::encode_png(img)}, 1.0});
  const auto engine = fx.engine({});
  const auto page = engine.execute(spec);
  ASSERT_EQ(page.results.size(), 1u);
  EXPECT_EQ(page.results[0].doc_id, "only");
  EXPECT_EQ(page.results[0].rank, 1u);
  EXPECT_NEAR(page.results[0].final_score, 1.0, 1e-6);
  const auto ex = engine.explain(spec, "only");
  ASSERT_EQ(ex.plugins.size(), 1u);
  EXPECT_NEAR(*ex.plugins[0].score, 1.0, 1e-6);
  EXPECT_TRUE(ex.candidate);
}

TEST(Execute, ZeroWeightExcludesPlugin) {
  auto& fx = shared_fixture();
  const auto engine = fx.engine();
  QuerySpec a;
  a.terms.push_back({DocSource{"doc000010"}, 1.0});
  a.terms.push_back({TextSource{"saint sebastian"}, 0.5});
  a.limit = kMaxLimit;
  a.plugin_weights = {{"colorgram", 1.0}, {"hashproj", 0.0}};
  QuerySpec b = a;
  b.plugin_weights = {{"colorgram", 1.0}};
  const auto pa = engine.execute(a), pb = engine.execute(b);
  EXPECT_EQ(order_of(pa), order_of(pb));
  for (const auto& e : pa.results) EXPECT_FALSE(e.per_plugin.count("hashproj"));
}

TEST(Execute, MatchesPipelineOracle) {
  auto& fx = shared_fixture();
  const auto engine = fx.engine();
  std::mt19937_64 rng(2024);
  size_t checked = 0, keyword = 0, unscorable = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto spec = random_query_spec(fx, rng);
    const auto expected = oracle_rank(fx, spec);
    if (!expected) {
      EXPECT_EQ(code_of([&] { engine.execute(spec); }), ErrorCode::kValidation);
      ++unscorable;
      continue;
    }
    const auto page = engine.execute(spec);
    keyword += page.diagnostics.ranking == "keyword";
    ASSERT_EQ(page.results.size(), expected->size()) << "trial " << trial;
    for (size_t i = 0; i < expected->size(); ++i) {
      const auto& got = page.results[i];
      const auto& want = (*expected)[i];
      ASSERT_EQ(got.doc_id, want.doc_id) << "trial " << trial << " rank " << i + 1;
      EXPECT_EQ(got.final_score, want.final_score);
      EXPECT_EQ(got.per_plugin, want.per_plugin);
      EXPECT_EQ(got.rank, i + 1);
    }
    ++checked;
  }
  EXPECT_GE(checked, 30u);
  RecordProperty("keyword_fallbacks", static_cast<int>(keyword));
  RecordProperty("unscorable", static_cast<int>(unscorable));
}

TEST(Execute, FinalScoreDecomposes) {
  auto& fx = shared_fixture();
  const auto engine = fx.engine();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto spec = random_query_spec(fx, rng);
    spec.keyword_query.reset();
    spec.plugin_weights = {{"colorgram", 0.5 + rng() % 4}, {"hashproj", 0.25 + rng() % 3}};
    if (!oracle_rank(fx, spec)) continue;
    const auto page = engine.execute(spec);
    std::map<std::string, double> active;
    for (const auto& p : page.diagnostics.plugins)
      if (p.fused) active[p.plugin] = p.weight;
    for (const auto& e : page.results) {
      double num = 0, den = 0;
      for (const auto& [p, w] : active) {
        den += w;
        num += w * (e.per_plugin.count(p) ? e.per_plugin.at(p) : 0.0);
      }
      EXPECT_NEAR(e.final_score, num / den, 1e-6);
      EXPECT_GE(e.final_score, 0.0);
      EXPECT_LE(e.final_score, 1.0);
    }
  }
}

TEST(Execute, UncoveredDocumentsScoreZeroAndAreCounted) {
  auto& fx = shared_fixture();
  QuerySpec spec;
  spec.terms.push_back({DocSource{"doc000000"}, 1.0});
  spec.limit = kMaxLimit;
  const auto page = fx.engine().execute(spec);
  size_t uncovered = 0;
  for (const auto& e : page.results) uncovered += !e.per_plugin.count("colorgram");
  EXPECT_EQ(uncovered, 300u / 37);
  for (const auto& p : page.diagnostics.plugins)
    if (p.plugin == "colorgram") EXPECT_EQ(p.uncovered, uncovered);
}

TEST(Execute, WeightScaleInvariance) {
  auto& fx = shared_fixture();
  const auto engine = fx.engine();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 15; ++trial) {
    auto spec = random_query_spec(fx, rng);
    if (!oracle_rank(fx, spec)) continue;
    if (spec.plugin_weights.empty()) spec.plugin_weights = {{"colorgram", 1.0}, {"hashproj", 1.0}};
    auto scaled = spec;
    const double c = scale(rng);
    for (auto& [p, w] : scaled.plugin_weights) w *= c;
    EXPECT_EQ(order_of(engine.execute(spec)), order_of(engine.execute(scaled))) << "c=" << c;
  }
}

TEST(Execute, TermScaleLeavesFusedVectorsUnchanged) {
  auto& fx = shared_fixture();
  const auto engine = fx.engine();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> scale(0.05, 1.0);
  for (int trial = 0; trial < 15; ++trial) {
    auto spec = random_query_spec(fx, rng);
    if (!oracle_rank(fx, spec)) continue;
    // Powers of two scale every intermediate exactly.
    auto doubled = spec;
    for (auto& t : doubled.terms) t.weight *= (trial % 2) ? 0.5 : 0.25;
    EXPECT_EQ(engine.fused_vectors(spec), engine.fused_vectors(doubled));
    auto scaled = spec;
    const double c = scale(rng);
    for (auto& t : scaled.terms) t.weight *= c;
    const auto a = engine.fused_vectors(spec), b = engine.fused_vectors(scaled);
    ASSERT_EQ(a.size(), b.size());
    for (const auto& [p, v] : a) {
      ASSERT_EQ(v.has_value(), b.at(p).has_value());
      if (!v) continue;
      for (size_t j = 0; j < v->size(); ++j) EXPECT_NEAR((*v)[j], (*b.at(p))[j], 1e-12);
    }
    EXPECT_EQ(order_of(engine.execute(spec)), order_of(engine.execute(scaled)));
  }
}

TEST(Execute, FilterSoundness) {
  auto& fx = shared_fixture();
  const auto engine = fx.engine({});
  std::mt19937_64 rng(13);
  const auto snap = fx.catalog.snapshot();
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = random_query_spec(fx, rng);
    if (!oracle_rank(fx, spec)) continue;
    const auto allowed = snap->match_set(spec.filters);
    for (const auto& e : engine.execute(spec).results) {
      EXPECT_TRUE(std::binary_search(allowed.begin(), allowed.end(), e.doc_id)) << e.doc_id;
    }
  }
}

TEST(Execute, PaginationCoherence) {
  auto& fx = shared_fixture();
  QuerySpec spec;
  spec.terms.push_back({TextSource{"portrait of a man"}, 1.0});
  spec.terms.push_back({DocSource{"doc000042"}, 2.0});
  for (const bool full : {true, false}) {
    // Without full depth, a single flat plug-in is still exact.
    if (!full) spec.plugin_weights = {{"hashproj", 1.0}};
    const auto engine = fx.engine({.full_depth = full});
    spec.offset = 0;
    spec.limit = kMaxLimit;
    const auto all = order_of(engine.execute(spec));
    for (const size_t n : {1u, 7u, 50u}) {
      std::vector<std::string> joined;
      for (spec.offset = 0; spec.offset < all.size() + n; spec.offset += n) {
        spec.limit = n;
        const auto page = engine.execute(spec);
        for (size_t i = 0; i < page.results.size(); ++i) EXPECT_EQ(page.results[i].rank, spec.offset + i + 1);
        const auto ids = order_of(page);
        joined.insert(joined.end(), ids.begin(), ids.end());
      }
      EXPECT_EQ(joined, all) << "page size " << n << " full " << full;
    }
  }
}

TEST(Execute, NegativeWeightNeverPromotesTheNegatedTerm) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    QueryFixture fx;
    fx.registry.register_builtin("hashproj");
    const auto& words = testing::kTitleWords;
    const std::string plus = words[rng() % words.size()];
    std::string minus = words[rng() % words.size()];
    if (minus == plus) minus += " night";
    for (const auto& [id, text] : {std::pair{"a-plus", plus}, std::pair{"b-minus", minus}}) {
      fx.catalog.upsert({.doc_id = id, .collection_id = "c", .image_ref = "x"});
      fx.indexes.get_or_create("hashproj", 64).insert(id, plugins::hashproj_text_vector(text));
    }
    QuerySpec spec;
    spec.terms = {{TextSource{plus}, 1.0}, {TextSource{minus}, -1.0}};
    const auto page = fx.engine().execute(spec);
    ASSERT_EQ(page.results.size(), 2u);
    EXPECT_EQ(page.results[0].doc_id, "a-plus") << plus << " / " << minus;
    EXPECT_GE(page.results[0].final_score, page.results[1].final_score);
  }
}

TEST(Execute, KeywordIsAHardConstraint) {
  auto& fx = shared_fixture();
  QuerySpec spec;
  spec.terms.push_back({DocSource{"doc000003"}, 1.0});
  spec.keyword_query = "saint";
  spec.limit = kMaxLimit;
  const auto page = fx.engine().execute(spec);
  const auto allowed = fx.catalog.snapshot()->keyword_matches("saint");
  ASSERT_FALSE(page.results.empty());
  EXPECT_EQ(page.diagnostics.candidates, allowed.size());
  for (const auto& e : page.results) EXPECT_TRUE(std::binary_search(allowed.begin(), allowed.end(), e.doc_id));
}

TEST(Execute, KeywordFallbackAndNoScorablePlugin) {
  auto& fx = shared_fixture();
  const auto engine = fx.engine();
  QuerySpec spec;
  spec.terms.push_back({TextSource{"crucifixion"}, 1.0});
  spec.plugin_weights = {{"colorgram", 1.0}};  // cannot embed text
  std::string ptr;
  EXPECT_EQ(code_of([&] { engine.execute(spec); }, &ptr), ErrorCode::kValidation);
  EXPECT_EQ(ptr, "/terms");
  spec.keyword_query = "crucifixion";
  const auto page = engine.execute(spec);
  EXPECT_EQ(page.diagnostics.ranking, "keyword");
  ASSERT_FALSE(page.results.empty());
  EXPECT_EQ(page.results[0].final_score, 1.0);
  const auto hits = fx.catalog.snapshot()->keyword_search("crucifixion", {}, 1000);
  EXPECT_EQ(page.total, hits.size());
}

TEST(Execute, EmptyCandidateSetIsAnEmptyPage) {
  auto& fx = shared_fixture();
  QuerySpec spec;
  spec.terms.push_back({TextSource{"saint"}, 1.0});
  spec.filters.push_back({"artist", std::vector<std::string>{"nobody"}});
  const auto page = fx.engine({}).execute(spec);
  EXPECT_TRUE(page.results.empty());
  EXPECT_EQ(page.total, 0u);
}

TEST(Execute, RejectsBadReferences) {
  auto& fx = shared_fixture();
  const auto engine = fx.engine();
  std::string ptr;
  QuerySpec spec;
  spec.terms.push_back({DocSource{"missing"}, 1.0});
  EXPECT_EQ(code_of([&] { engine.execute(spec); }, &ptr), ErrorCode::kValidation);
  EXPECT_EQ(ptr, "/terms/0/doc_id");
  spec.terms = {{TextSource{"saint"}, 1.0}};
  spec.plugin_weights = {{"nosuch", 1.0}};
  EXPECT_EQ(code_of([&] { engine.execute(spec); }, &ptr), ErrorCode::kValidation);
  EXPECT_EQ(ptr, "/plugin_weights/nosuch");
  spec.plugin_weights = {{"colorrules", 1.0}};
  EXPECT_EQ(code_of([&] { engine.execute(spec); }, &ptr), ErrorCode::kValidation);
  spec.plugin_weights.clear();
  spec.filters.push_back({"medium", std::vector<std::string>{"oil"}});
  EXPECT_EQ(code_of([&] { engine.execute(spec); }, &ptr), ErrorCode::kValidation);
  EXPECT_EQ(ptr, "/filters/0");
}

TEST(Execute, FailedTermIsSkippedWithWarning) {
  auto& fx = shared_fixture();
  QuerySpec spec;
  spec.terms.push_back({ImageSource{{1, 2, 3, 4}}, 1.0});
  spec.terms.push_back({TextSource{"saint"}, 1.0});
  const auto page = fx.engine().execute(spec);
  EXPECT_FALSE(page.results.empty());
  EXPECT_FALSE(page.diagnostics.warnings.empty());
  for (const auto& p : page.diagnostics.plugins) {
    if (p.plugin == "colorgram") EXPECT_FALSE(p.fused);
    if (p.plugin == "hashproj") EXPECT_EQ(p.terms_used, 1u);
  }
}

TEST(Explain, MatchesExecuteAndMarksFailedFilter) {
  auto& fx = shared_fixture();
  const auto engine = fx.engine();
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 15; ++trial) {
    const auto spec = random_query_spec(fx, rng);
    const auto expected = oracle_rank(fx, spec);
    if (!expected || expected->empty()) continue;
    const auto page = engine.execute(spec);
    for (size_t i = 0; i < page.results.size(); i += 17) {
      const auto& e = page.results[i];
      const auto ex = engine.explain(spec, e.doc_id);
      EXPECT_TRUE(ex.candidate);
      EXPECT_EQ(ex.final_score, e.final_score);
      for (const auto& b : ex.plugins) {
        if (e.per_plugin.count(b.plugin)) {
          ASSERT_TRUE(b.score);
          EXPECT_EQ(*b.score, e.per_plugin.at(b.plugin));
        }
      }
    }
  }
  const auto snap = fx.catalog.snapshot();
  const auto& doc = snap->get("doc000005");
  const std::string artist = doc.metadata.at("artist").front();
  const std::string other = artist == "goya" ? "hals" : "goya";
  QuerySpec spec;
  spec.terms.push_back({TextSource{"saint"}, 1.0});
  spec.filters = {{"artist", std::vector<std::string>{artist}}, {"artist", std::vector<std::string>{other}}};
  const auto ex = engine.explain(spec, "doc000005");
  ASSERT_EQ(ex.filters.size(), 2u);
  EXPECT_TRUE(ex.filters[0].passed);
  EXPECT_FALSE(ex.filters[1].passed);
  EXPECT_FALSE(ex.candidate);
  EXPECT_EQ(code_of([&] { engine.explain(spec, "nope"); }), ErrorCode::kNotFound);
}

TEST(Layout, ClustersCoverTheTopResults) {
  auto& fx = shared_fixture();
  QuerySpec spec;
  spec.terms.push_back({TextSource{"night watch"}, 1.0});
  spec.terms.push_back({DocSource{"doc000001"}, 1.0});
  spec.plugin_weights = {{"colorgram", 2.0}, {"hashproj", 1.0}};
  spec.layout = ClusterLayout{.k = 5, .seed = 3};
  spec.limit = 20;
  const auto page = fx.engine().execute(spec);
  ASSERT_TRUE(page.layout);
  EXPECT_EQ(page.layout->plugin, "colorgram");
  EXPECT_EQ(page.layout->k, 5u);
  size_t sum = 0;
  for (size_t s : page.layout->sizes) sum += s;
  EXPECT_EQ(sum, page.layout->ids.size());
  EXPECT_EQ(page.layout->ids.size(), page.total - 300u / 37);  // uncovered docs are not laid out
  for (const auto& e : page.results) {
    if (e.per_plugin.count("colorgram")) {
      ASSERT_TRUE(e.cluster_id);
      EXPECT_LT(*e.cluster_id, 5u);
    }
  }
  const auto again = fx.engine().execute(spec);
  EXPECT_EQ(again.layout->cluster_ids, page.layout->cluster_ids);
}

TEST(Layout, CanvasAndSmallFallback) {
  auto& fx = shared_fixture();
  QuerySpec spec;
  spec.terms.push_back({TextSource{"madonna child"}, 1.0});
  spec.plugin_weights = {{"hashproj", 1.0}};
  spec.layout = CanvasLayout{};
  const auto engine = fx.engine({.full_depth = true, .layout_cap = 120});
  const auto page = engine.execute(spec);
  ASSERT_TRUE(page.layout);
  EXPECT_EQ(page.layout->method, "neighbor-embed");
  EXPECT_EQ(page.layout->coords.size(), 120u);
  for (const auto& e : page.results) EXPECT_TRUE(e.coords);

  spec.filters = {{"artist", std::vector<std::string>{"goya"}}, {"genre", std::vector<std::string>{"portrait"}}};
  const auto small = engine.execute(spec);
  ASSERT_TRUE(small.layout);
  if (small.total >= 2 && small.total < 16) {
    EXPECT_EQ(small.layout->method, "pca");
    EXPECT_FALSE(small.diagnostics.warnings.empty());
  }
}

TEST(Execute, DefaultDepthAgreesWithFullDepthOnTopPage) {
  auto fx = make_query_fixture(300, 8);
  const auto full = fx->engine({.full_depth = true});
  const auto shallow = fx->engine({.min_depth = 50});
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    auto spec = random_query_spec(*fx, rng);
    if (!oracle_rank(*fx, spec)) continue;
    spec.plugin_weights = {{"hashproj", 1.0}};
    spec.limit = 10;
    EXPECT_EQ(order_of(full.execute(spec)), order_of(shallow.execute(spec)));
  }
}

TEST(Execute, CrossModalFixtureRanksJointMatchesFirst) {
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const auto c = testing::make_cross_modal_fixture(seed);
    const auto page = c.fx->engine().execute(testing::cross_modal_query(c));
    double worst_both = 2.0, best_single = -1.0;
    for (const auto& e : page.results) {
      if (c.near_both.count(e.doc_id)) worst_both = std::min(worst_both, e.final_score);
      if (c.near_image.count(e.doc_id) || c.near_text.count(e.doc_id)) best_single = std::max(best_single, e.final_score);
    }
    EXPECT_GT(worst_both, best_single) << "seed " << seed;
  }
}

TEST(Execute, ConcurrentQueriesDuringWrites) {
  auto fx = make_query_fixture(120, 9);
  const auto engine = fx->engine({});
  std::atomic<bool> stop{false};
  std::atomic<size_t> queries{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 3; ++t) {
    readers.emplace_back([&, t] {
      QuerySpec spec;
      spec.terms.push_back({DocSource{"doc000000"}, 1.0});
      spec.terms.push_back({TextSource{testing::kTitleWords[static_cast<size_t>(t)]}, 0.5});
      while (!stop) {
        const auto page = engine.execute(spec);
        for (size_t i = 1; i < page.results.size(); ++i) {
          EXPECT_GE(page.results[i - 1].final_score, page.results[i].final_score);
        }
        ++queries;
      }
    });
  }
  std::mt19937_64 rng(3);
  for (int i = 0; i < 60; ++i) {
    auto doc = fx->docs[1 + rng() % 119];
    doc.title = "rewritten " + std::to_string(i);
    std::unique_lock lock(fx->commit);
    fx->catalog.upsert(doc);
    fx->indexes.find("hashproj")->insert(doc.doc_id, testing::random_unit(rng, 64));
  }
  while (queries < 10) std::this_thread::yield();
  stop = true;
  for (auto& r : readers) r.join();
}

TEST(ResultJson, Shape) {
  auto& fx = shared_fixture();
  QuerySpec spec;
  spec.terms.push_back({TextSource{"saint"}, 1.0});
  spec.layout = ClusterLayout{};
  spec.limit = 3;
  const auto j = to_json(fx.engine().execute(spec));
  ASSERT_EQ(j["results"].size(), 3u);
  EXPECT_EQ(j["results"][0]["rank"], 1);
  EXPECT_TRUE(j["results"][0]["per_plugin"].contains("hashproj"));
  EXPECT_TRUE(j["results"][0].contains("cluster_id"));
  EXPECT_EQ(j["diagnostics"]["ranking"], "vector");
  EXPECT_EQ(j["layout"]["kind"], "clusters");
  EXPECT_EQ(j["page"]["limit"], 3);
}

}  // namespace
}  // namespace artsearch::query
