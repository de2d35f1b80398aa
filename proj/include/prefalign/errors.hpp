#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prefalign {

enum class ErrorCode {
  UnrecognizedFormat,
  SubjectMismatch,
  IndexClash,
  OutOfRange,
  EmptyRatings,
  TiedVotes,
  PromptMismatch,
  IoError,
  SchemaViolation,
  UnknownTask,
  EmptyDataset,
  OddPool,
  DuplicateId,
  EmptyList,
  EmptyPool,
  ShapeMismatch,
  TimestepOutOfRange,
  InvalidRange,
  EmptyBatch,
  UnresolvedId,
  InvalidConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed line in a record file; carries the 1-based line number and the
/// offending field name.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line_no, std::string field, const std::string& detail = "")
      : Error(ErrorCode::SchemaViolation,
              "line " + std::to_string(line_no) + ", field '" + field + "'" +
                  (detail.empty() ? "" : ": " + detail)),
        line_no_(line_no),
        field_(std::move(field)) {}

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_no_;
  std::string field_;
};

}  // namespace prefalign
