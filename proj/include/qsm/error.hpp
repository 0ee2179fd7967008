#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsm {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  eigensolver_failure,
  refinement_budget_exceeded,
  no_intersection_found,
  tangency_detected,
  non_convergent_sum,
  degenerate_packet,
  continuation_lost,
  quadrature_nonconvergence,
  missing_relevance,
  missing_invariants,
  no_roots_in_window,
  too_few_states,
  config_error,
  io_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::eigensolver_failure: return "eigensolver-failure";
    case ErrorCode::refinement_budget_exceeded: return "refinement-budget-exceeded";
    case ErrorCode::no_intersection_found: return "no-intersection-found";
    case ErrorCode::tangency_detected: return "tangency-detected";
    case ErrorCode::non_convergent_sum: return "non-convergent-sum";
    case ErrorCode::degenerate_packet: return "degenerate-packet";
    case ErrorCode::continuation_lost: return "continuation-lost";
    case ErrorCode::quadrature_nonconvergence: return "quadrature-nonconvergence";
    case ErrorCode::missing_relevance: return "missing-relevance";
    case ErrorCode::missing_invariants: return "missing-invariants";
    case ErrorCode::no_roots_in_window: return "no-roots-in-window";
    case ErrorCode::too_few_states: return "too-few-states";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

// All library failures are reported through this type; code() is stable for
// callers that need to branch (the CLI maps config_error to exit code 1).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace qsm
