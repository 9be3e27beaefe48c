#pragma once

#include <stdexcept>
#include <string>

namespace ecodrive {

enum class ErrorCode {
  InvalidInput,
  SpeedCapExceeded,
  InvalidPhase,
  WeightTooLarge,
  NoRoot,
  InfeasibleTiming,
  NonConvergence,
  Infeasible,
  ControlInfeasible,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the solver stack carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class SolverError : public std::runtime_error {
 public:
  SolverError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ecodrive
