#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace caer {

// Every failure the library reports on purpose carries one of these codes.
// The CLI maps them to exit code 1 (user error); anything else is internal.
enum class ErrorCode {
  invalid_label,
  no_votes,
  input_integrity,
  malformed_table,
  degenerate_table,
  manifest,
  split_infeasible,
  io,
  invalid_box,
  config,
  shape,
  prompt_too_long,
  degenerate_input,
  undefined_metric,
  label_set_mismatch,
  divergence,
  infeasible,
  not_found,
  rejected,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace caer
