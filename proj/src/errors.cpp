#include "lab/errors.hpp"

namespace lab {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::ProfileConstraintViolation: return "ProfileConstraintViolation";
    case ErrorCode::NonPositiveProfile: return "NonPositiveProfile";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::UnsupportedPair: return "UnsupportedPair";
    case ErrorCode::TooFewNodes: return "TooFewNodes";
    case ErrorCode::NotUnitDirection: return "NotUnitDirection";
    case ErrorCode::GlancingBoundaryAbort: return "GlancingBoundaryAbort";
    case ErrorCode::IntegratorDivergence: return "IntegratorDivergence";
    case ErrorCode::GlancingContact: return "GlancingContact";
    case ErrorCode::NotOnSigma: return "NotOnSigma";
    case ErrorCode::CutoffTooLargeForMemory: return "CutoffTooLargeForMemory";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ParityMismatch: return "ParityMismatch";
    case ErrorCode::ManifoldMismatch: return "ManifoldMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::OutOfInterval: return "OutOfInterval";
    case ErrorCode::SeriesNotConverged: return "SeriesNotConverged";
    case ErrorCode::EmptyTruncation: return "EmptyTruncation";
    case ErrorCode::GramianSingular: return "GramianSingular";
    case ErrorCode::ModelMismatch: return "ModelMismatch";
    case ErrorCode::StageGramianSingular: return "StageGramianSingular";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CheckFailure: return "CheckFailure";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

LabError::LabError(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw LabError(code, what); }

}  // namespace lab
