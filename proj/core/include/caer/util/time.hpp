#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace caer {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff]" followed by "Z" or "+00:00".
// Throws Error(config) on anything else.
Timestamp parse_timestamp(std::string_view text);

// Canonical form: "YYYY-MM-DDTHH:MM:SSZ", or with ".mmm" when the
// millisecond part is nonzero.
std::string format_timestamp(Timestamp ts);

Timestamp now_utc();

}  // namespace caer
