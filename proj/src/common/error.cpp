#include "artsearch/common/error.hpp"

namespace artsearch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
      return "validation";
    case ErrorCode::kNotFound:
      return "not_found";
    case ErrorCode::kTransient:
      return "transient";
    case ErrorCode::kRegistration:
      return "registration";
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kFormat:
      return "format";
    case ErrorCode::kIntegrity:
      return "integrity";
    case ErrorCode::kInternal:
      return "internal";
  }
  return "internal";
}

}  // namespace artsearch
