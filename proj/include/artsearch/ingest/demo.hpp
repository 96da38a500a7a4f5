#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace artsearch::ingest {

/// Iconographic subjects used as demo titles and text queries.
const std::vector<std::string>& demo_subjects();

struct DemoCollection {
  std::filesystem::path manifest;
  // subject -> id of the document whose image is closest to the subject's
  // hashproj text embedding.
  std::map<std::string, std::string> exemplars;
  size_t documents = 0;
};

/// Writes `<dir>/manifest.jsonl` and `<dir>/images/*.png`. Document i depicts
/// subject i mod S: its image renders the subject's hashproj text embedding
/// plus noise that grows with i / S, so `search --text <subject>` ranks the
/// subject's first document highest. Metadata carries artist, genre and year.
DemoCollection write_demo_collection(const std::filesystem::path& dir, size_t n, uint64_t seed);

}  // namespace artsearch::ingest
