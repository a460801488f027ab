#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace qcqc {

enum class ErrorCode {
  // gallery
  DimensionMismatch,
  DuplicateId,
  ZeroVector,
  NormError,
  MalformedLine,
  RowCountMismatch,
  InvalidScore,
  FormatError,
  UnsupportedVersion,
  Io,
  // quantile
  EmptyVector,
  NonFiniteScore,
  InvalidPercentile,
  NonMonotonePercentiles,
  MissingScore,
  // search / completer
  EmptyGallery,
  EmbedderFailure,
  UnknownLevelLabel,
  LevelsNotAssigned,
  EmptyPrefix,
  EmptyText,
  Timeout,
  HttpError,
  MalformedResponse,
  // evalharness
  IncompleteGrid,
  // ranklab
  ZeroMatrix,
  BadIndexSet,
  NonFinite,
  // generic
  InvalidArgument,
};

/// Stable machine-readable name, e.g. "DuplicateId".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Carries the status of a failed external HTTP call.
class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& message)
      : Error(ErrorCode::HttpError, message), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Line-numbered manifest parse failure (1-based line).
class MalformedLineError : public Error {
 public:
  MalformedLineError(std::size_t line, const std::string& message)
      : Error(ErrorCode::MalformedLine,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised by retrieve() when the text embedder fails; names the query.
class EmbedderFailureError : public Error {
 public:
  EmbedderFailureError(std::string query, const std::string& cause)
      : Error(ErrorCode::EmbedderFailure,
              "embedding failed for query '" + query + "': " + cause),
        query_(std::move(query)) {}

  const std::string& query() const noexcept { return query_; }

 private:
  std::string query_;
};

}  // namespace qcqc
