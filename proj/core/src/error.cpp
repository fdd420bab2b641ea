#include "caer/error.hpp"

namespace caer {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_label: return "invalid_label";
    case ErrorCode::no_votes: return "no_votes";
    case ErrorCode::input_integrity: return "input_integrity";
    case ErrorCode::malformed_table: return "malformed_table";
    case ErrorCode::degenerate_table: return "degenerate_table";
    case ErrorCode::manifest: return "manifest";
    case ErrorCode::split_infeasible: return "split_infeasible";
    case ErrorCode::io: return "io";
    case ErrorCode::invalid_box: return "invalid_box";
    case ErrorCode::config: return "config";
    case ErrorCode::shape: return "shape";
    case ErrorCode::prompt_too_long: return "prompt_too_long";
    case ErrorCode::degenerate_input: return "degenerate_input";
    case ErrorCode::undefined_metric: return "undefined_metric";
    case ErrorCode::label_set_mismatch: return "label_set_mismatch";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::rejected: return "rejected";
  }
  return "unknown";
}

}  // namespace caer
