#pragma once

#include <stdexcept>
#include <string>

namespace dtwpa {

enum class ErrorCode {
  invalid_argument,
  prototype_unavailable,
  inconsistent_design,
  port_count_mismatch,
  singular_matrix,
  no_crossover,
  newton_nonconvergence,
  junction_runaway,
  non_commensurate,
  nonphysical,
  unphysical_gain,
  ill_conditioned_fit,
  insufficient_points,
  parse_error,
  io_error,
};

inline const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the toolkit; `code()` distinguishes failure kinds.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what,
                    ErrorCode code = ErrorCode::invalid_argument) {
  if (!cond) throw Error(code, what);
}

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::prototype_unavailable: return "prototype unavailable";
    case ErrorCode::inconsistent_design: return "inconsistent design";
    case ErrorCode::port_count_mismatch: return "port-count mismatch";
    case ErrorCode::singular_matrix: return "singular admittance matrix";
    case ErrorCode::no_crossover: return "no crossover found";
    case ErrorCode::newton_nonconvergence: return "Newton non-convergence";
    case ErrorCode::junction_runaway: return "junction runaway";
    case ErrorCode::non_commensurate: return "non-commensurate frequency";
    case ErrorCode::nonphysical: return "nonphysical";
    case ErrorCode::unphysical_gain: return "unphysical gain";
    case ErrorCode::ill_conditioned_fit: return "ill-conditioned fit";
    case ErrorCode::insufficient_points: return "insufficient points";
    case ErrorCode::parse_error: return "parse error";
    case ErrorCode::io_error: return "I/O error";
  }
  return "error";
}

}  // namespace dtwpa
