#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace artsearch {

/// Splits UTF-8 text into lowercase word tokens. Word characters are ASCII
/// letters and digits plus every non-ASCII code point outside the common
/// punctuation and symbol blocks. Lowercasing covers ASCII, Latin-1,
/// Latin Extended-A, Greek and Cyrillic. No stemming.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace artsearch
