#include "repdistill/error.hpp"

namespace repdistill {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::KTooSmall: return "KTooSmall";
    case ErrorCode::MissingAssignment: return "MissingAssignment";
    case ErrorCode::CoincidentCentroids: return "CoincidentCentroids";
    case ErrorCode::TooFewCandidates: return "TooFewCandidates";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::EmptyPairs: return "EmptyPairs";
    case ErrorCode::RowOutOfRange: return "RowOutOfRange";
    case ErrorCode::QuotaTooLarge: return "QuotaTooLarge";
    case ErrorCode::TotalTooLarge: return "TotalTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::NotEnoughUnits: return "NotEnoughUnits";
  }
  return "Unknown";
}

}  // namespace repdistill
