#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace qosrate {

enum class ErrorCode {
  validation,
  no_unique_stationary,
  periodic_chain,
  non_convergence,
  degenerate_estimate,
  quadrature_failure,
  invalid_regime,
  bracket_failure,
  ill_conditioned,
  unstable_queue,
  insufficient_tail,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::validation: return "Validation";
    case ErrorCode::no_unique_stationary: return "NoUniqueStationary";
    case ErrorCode::periodic_chain: return "PeriodicChain";
    case ErrorCode::non_convergence: return "NonConvergence";
    case ErrorCode::degenerate_estimate: return "DegenerateEstimate";
    case ErrorCode::quadrature_failure: return "QuadratureFailure";
    case ErrorCode::invalid_regime: return "InvalidRegime";
    case ErrorCode::bracket_failure: return "BracketFailure";
    case ErrorCode::ill_conditioned: return "IllConditioned";
    case ErrorCode::unstable_queue: return "UnstableQueue";
    case ErrorCode::insufficient_tail: return "InsufficientTail";
  }
  return "Unknown";
}

/// Single exception type for the library; `code()` tells callers what failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Validation failure that remembers which input field was at fault
/// (JSON-pointer-like path, e.g. "source/transition/1/0").
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(ErrorCode::validation, (field.empty() ? message : field + ": " + message)),
        field_(std::move(field)),
        detail_(message) {}

  const std::string& field() const noexcept { return field_; }
  /// The message without the field prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string field_;
  std::string detail_;
};

namespace detail {

inline void require(bool ok, std::string_view field, std::string_view what) {
  if (!ok) throw ValidationError(std::string(field), std::string(what));
}

}  // namespace detail
}  // namespace qosrate
