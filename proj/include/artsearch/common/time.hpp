#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace artsearch {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now_utc();

/// "2021-06-15T10:20:30.123Z"
std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view text);

}  // namespace artsearch
