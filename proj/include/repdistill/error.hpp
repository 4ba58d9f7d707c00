#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repdistill {

enum class ErrorCode {
  MalformedHeader,
  DimensionMismatch,
  DuplicateId,
  NonFiniteValue,
  IoFailure,
  SpaceMismatch,
  EmptyIntersection,
  ZeroNorm,
  UnknownId,
  KTooLarge,
  KTooSmall,
  MissingAssignment,
  CoincidentCentroids,
  TooFewCandidates,
  TooFewPoints,
  EmptyPairs,
  RowOutOfRange,
  QuotaTooLarge,
  TotalTooLarge,
  InvalidArgument,
  TooShort,
  EmptyReference,
  NotEnoughUnits,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace repdistill
