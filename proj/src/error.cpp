#include "qcqc/error.hpp"

namespace qcqc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NormError: return "NormError";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::InvalidScore: return "InvalidScore";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::Io: return "Io";
    case ErrorCode::EmptyVector: return "EmptyVector";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::InvalidPercentile: return "InvalidPercentile";
    case ErrorCode::NonMonotonePercentiles: return "NonMonotonePercentiles";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::EmptyGallery: return "EmptyGallery";
    case ErrorCode::EmbedderFailure: return "EmbedderFailure";
    case ErrorCode::UnknownLevelLabel: return "UnknownLevelLabel";
    case ErrorCode::LevelsNotAssigned: return "LevelsNotAssigned";
    case ErrorCode::EmptyPrefix: return "EmptyPrefix";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::IncompleteGrid: return "IncompleteGrid";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::BadIndexSet: return "BadIndexSet";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace qcqc
