#pragma once

// Internal helpers for line-delimited JSON files.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "caer/error.hpp"

namespace caer::detail {

using json = nlohmann::json;

// Calls fn(line_number, parsed) for every non-blank line. Parse failures
// are reported with `code` and the 1-based line number.
inline void for_each_json_line(std::istream& in, ErrorCode code,
                               const std::function<void(std::size_t, const json&)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(code, fmt::format("line {}: {}", line_no, e.what()));
    }
    fn(line_no, value);
  }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot open '{}'", path.string()));
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

inline void write_json_line(std::ostream& out, const json& value) { out << value.dump() << '\n'; }

}  // namespace caer::detail
