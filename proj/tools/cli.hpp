#pragma once

#include <ostream>

namespace artsearch::cli {

/// Exit codes: 0 success, 1 validation or usage error, 2 I/O error, 3 internal error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace artsearch::cli
