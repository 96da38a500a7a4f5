#include "artsearch/ingest/demo.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "artsearch/common/error.hpp"
#include "artsearch/plugins/builtin.hpp"
#include "artsearch/plugins/image.hpp"

namespace artsearch::ingest {

const std::vector<std::string>& demo_subjects() {
  static const std::vector<std::string> subjects = {
      "crucifixion", "annunciation", "nativity",  "lamentation", "baptism",     "resurrection",
      "ascension",   "transfiguration", "adoration", "deposition", "visitation", "flagellation",
      "temptation",  "pentecost",   "assumption", "coronation"};
  return subjects;
}

DemoCollection write_demo_collection(const std::filesystem::path& dir, size_t n, uint64_t seed) {
  static const std::vector<std::string> artists = {"Giotto", "Duccio", "Fra Angelico", "Mantegna", "Bellini",
                                                   "Memling", "Titian", "El Greco", "Rubens", "Zurbaran"};
  static const std::vector<std::string> genres = {"altarpiece", "fresco", "panel", "drawing", "print"};
  const auto& subjects = demo_subjects();

  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot create '{}': {}", (dir / "images").string(), ec.message()));

  DemoCollection out;
  out.manifest = dir / "manifest.jsonl";
  out.documents = n;
  std::ofstream manifest(out.manifest, std::ios::trunc);
  if (!manifest) throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", out.manifest.string()));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (size_t i = 0; i < n; ++i) {
    const auto& subject = subjects[i % subjects.size()];
    const size_t round = i / subjects.size();
    const std::string id = fmt::format("art-{:05d}", i);
    if (round == 0) out.exemplars[subject] = id;

    const auto text = plugins::hashproj_text_vector(subject);
    const double sigma = 0.1 + 0.25 * static_cast<double>(round);
    std::vector<double> g(text.size());
    double gn = 0.0;
    for (auto& x : g) {
      x = normal(rng);
      gn += x * x;
    }
    gn = std::sqrt(gn);
    std::vector<float> v(text.size());
    double vn = 0.0;
    for (size_t d = 0; d < v.size(); ++d) {
      const double x = text[d] + sigma * g[d] / gn;
      v[d] = static_cast<float>(x);
      vn += x * x;
    }
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(vn));

    const std::string rel = fmt::format("images/{}.png", id);
    const auto png = plugins::encode_png(plugins::render_embedding_image(v));
    std::ofstream img(dir / rel, std::ios::binary | std::ios::trunc);
    img.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    if (!img) throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", (dir / rel).string()));

    nlohmann::json line{{"id", id},
                        {"image", rel},
                        {"title", fmt::format("The {} ({})", subject, round + 1)},
                        {"metadata",
                         {{"artist", artists[rng() % artists.size()]},
                          {"genre", genres[rng() % genres.size()]},
                          {"year", 1300 + static_cast<int>(rng() % 500)}}}};
    manifest << line.dump() << "\n";
  }
  return out;
}

}  // namespace artsearch::ingest
