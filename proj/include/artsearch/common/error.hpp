#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace artsearch {

enum class ErrorCode {
  kValidation,
  kNotFound,
  kTransient,
  kRegistration,
  kIo,
  kFormat,
  kIntegrity,
  kInternal,
};

std::string_view to_string(ErrorCode code);

/// The single exception type thrown across module boundaries. `detail` carries
/// machine-readable context (for example a JSON pointer to an offending field).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::map<std::string, std::string> detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::map<std::string, std::string>& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::map<std::string, std::string> detail_;
};

[[noreturn]] inline void throw_validation(const std::string& message, std::map<std::string, std::string> detail = {}) {
  throw Error(ErrorCode::kValidation, message, std::move(detail));
}

[[noreturn]] inline void throw_not_found(const std::string& message) {
  throw Error(ErrorCode::kNotFound, message);
}

}  // namespace artsearch
