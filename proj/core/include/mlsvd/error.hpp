#pragma once

#include <stdexcept>
#include <string>

namespace mlsvd {

enum class ErrorCode {
  ZeroMatrix,
  NonConvergence,
  InvalidRank,
  RankTooLarge,
  UnknownCategory,
  EmptyCategory,
  SingularWeight,
  ZeroVariance,
  ConstantComponent,
  EmptyColumn,
  EmptyGroup,
  MaskInfeasible,
  EmptyEvaluationSet,
  InvalidConfig,
  ShapeMismatch,
  ParseError,
  SchemaMismatch,
  ProtocolViolation,
  WorkerDropped,
  ConnectionLost,
  MalformedMessage,
};

/// Stable identifier used in CLI error output and logs.
const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mlsvd
