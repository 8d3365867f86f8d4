#pragma once

#include <stdexcept>
#include <string>

namespace lab {

enum class ErrorCode {
  UnsupportedKind,
  ProfileConstraintViolation,
  NonPositiveProfile,
  OutOfChart,
  UnsupportedPair,
  TooFewNodes,
  NotUnitDirection,
  GlancingBoundaryAbort,
  IntegratorDivergence,
  GlancingContact,
  NotOnSigma,
  CutoffTooLargeForMemory,
  IndexOutOfRange,
  ParityMismatch,
  ManifoldMismatch,
  EmptyInput,
  InsufficientPoints,
  NegativeTime,
  OutOfInterval,
  SeriesNotConverged,
  EmptyTruncation,
  GramianSingular,
  ModelMismatch,
  StageGramianSingular,
  ConfigError,
  CheckFailure,
  IoError,
};

const char* error_name(ErrorCode code);

class LabError : public std::runtime_error {
 public:
  LabError(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace lab
