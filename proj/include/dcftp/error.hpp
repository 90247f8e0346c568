#pragma once

#include <stdexcept>
#include <string>

namespace dcftp {

enum class ErrorCode {
  InvalidArgument,
  Divergent,
  NotOpen,
  Unstable,
  NonNegativeDrift,
  NoRoot,
  InconsistentIncrements,
  Unsettled,
  SequenceExhausted,
  DominanceViolation,
  NotMarkovian,
  TooFewSamples,
  ResourceBudgetExceeded,
  ConfigError,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this type; `code()` lets callers
// branch on the failure kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dcftp
