#pragma once

#include <stdexcept>
#include <string>

namespace agglo {

enum class ErrorCode {
  invalid_argument,
  non_finite,
  asymmetric,
  not_converged,
  dimension_mismatch,
  // view structure diagnostics
  orphan_node,
  multi_parent,
  sample_count_mismatch,
  empty_layer,
  bad_layering,
  unknown_node,
  duplicate_node,
  root_count,
  missing_view,
  // data io diagnostics
  io,
  missing_file,
  ragged_rows,
  parse,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::asymmetric: return "asymmetric";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::orphan_node: return "orphan_node";
    case ErrorCode::multi_parent: return "multi_parent";
    case ErrorCode::sample_count_mismatch: return "sample_count_mismatch";
    case ErrorCode::empty_layer: return "empty_layer";
    case ErrorCode::bad_layering: return "bad_layering";
    case ErrorCode::unknown_node: return "unknown_node";
    case ErrorCode::duplicate_node: return "duplicate_node";
    case ErrorCode::root_count: return "root_count";
    case ErrorCode::missing_view: return "missing_view";
    case ErrorCode::io: return "io";
    case ErrorCode::missing_file: return "missing_file";
    case ErrorCode::ragged_rows: return "ragged_rows";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

}  // namespace agglo
