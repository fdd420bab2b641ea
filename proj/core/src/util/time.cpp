#include "caer/util/time.hpp"

#include <charconv>

#include <fmt/format.h>

#include "caer/error.hpp"

namespace caer {
namespace {

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) throw Error(ErrorCode::config, "truncated timestamp");
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw Error(ErrorCode::config, fmt::format("bad timestamp '{}'", text));
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw Error(ErrorCode::config, fmt::format("bad timestamp '{}'", text));
  }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const int y = read_int(text, 0, 4);
  expect(text, 4, '-');
  const int mo = read_int(text, 5, 2);
  expect(text, 7, '-');
  const int d = read_int(text, 8, 2);
  expect(text, 10, 'T');
  const int h = read_int(text, 11, 2);
  expect(text, 13, ':');
  const int mi = read_int(text, 14, 2);
  expect(text, 16, ':');
  const int s = read_int(text, 17, 2);
  std::size_t pos = 19;
  int ms = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos + digits < text.size() && text[pos + digits] >= '0' && text[pos + digits] <= '9') ++digits;
    if (digits == 0) throw Error(ErrorCode::config, fmt::format("bad timestamp '{}'", text));
    // Keep millisecond precision; extra digits are truncated.
    for (std::size_t i = 0; i < 3; ++i) {
      ms = ms * 10 + (i < digits ? text[pos + i] - '0' : 0);
    }
    pos += digits;
  }
  const auto tz = text.substr(pos);
  if (tz != "Z" && tz != "+00:00") {
    throw Error(ErrorCode::config, fmt::format("timestamp '{}' is not UTC", text));
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
    throw Error(ErrorCode::config, fmt::format("bad timestamp '{}'", text));
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss<milliseconds> tod{ts - day_point};
  const auto ms = tod.subseconds().count();
  auto out = fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", static_cast<int>(ymd.year()),
                         static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                         tod.hours().count(), tod.minutes().count(), tod.seconds().count());
  if (ms != 0) out += fmt::format(".{:03d}", ms);
  out += 'Z';
  return out;
}

Timestamp now_utc() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

}  // namespace caer
