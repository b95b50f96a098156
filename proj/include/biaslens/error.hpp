#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace biaslens {

enum class ErrorCode {
  kInvalidArgument,
  kSchemeViolation,
  kEmptyPopulation,
  kEmptyRun,
  kUnlabeledEntity,
  kTopicMismatch,
  kEmptyAggregate,
  kInfeasible,
  kParse,
  kSchemaVersion,
  kNonIriEntity,
  kEmptyJoin,
  kIo,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

  // Strict-mode violations map to a distinct CLI exit status.
  bool is_strict_violation() const {
    return code_ == ErrorCode::kUnlabeledEntity ||
           code_ == ErrorCode::kNonIriEntity;
  }

 private:
  ErrorCode code_;
};

// Input error located in a file. what() reads "file:line: field 'x': detail".
class ParseError : public Error {
 public:
  ParseError(std::string file, std::int64_t line, std::string field,
             const std::string& detail, ErrorCode code = ErrorCode::kParse);

  const std::string& file() const { return file_; }
  std::int64_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::int64_t line_;
  std::string field_;
};

}  // namespace biaslens
