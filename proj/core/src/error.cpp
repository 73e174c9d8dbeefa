#include "mlsvd/error.hpp"

namespace mlsvd {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::InvalidRank: return "InvalidRank";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::SingularWeight: return "SingularWeight";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::ConstantComponent: return "ConstantComponent";
    case ErrorCode::EmptyColumn: return "EmptyColumn";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::MaskInfeasible: return "MaskInfeasible";
    case ErrorCode::EmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::WorkerDropped: return "WorkerDropped";
    case ErrorCode::ConnectionLost: return "ConnectionLost";
    case ErrorCode::MalformedMessage: return "MalformedMessage";
  }
  return "UnknownError";
}

}  // namespace mlsvd
