#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aag {

enum class ErrorCode {
  ParseError,
  ValidationError,
  UnknownEntity,
  UnknownAttribute,
  TypeError,
  ArityError,
  CycleError,
  UnboundSlot,
  SlotKindMismatch,
  WiringError,
  NoRelationship,
  UnsupportedPattern,
  DbError,
  MissingColumn,
  UnexpectedRowCount,
  EmptyFacts,
  HttpError,
  TimeoutError,
  AuthError,
  IoError,
};

std::string_view to_string(ErrorCode c);

class Error : public std::runtime_error {
 public:
  // `where` names the offending step label, field path, or requirement id.
  Error(ErrorCode code, const std::string& message, std::string where = {});

  ErrorCode code() const { return code_; }
  const std::string& where() const { return where_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string where_;
  std::string detail_;
};

struct Violation {
  std::string code;
  std::string path;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  ValidationError(const std::string& path, const std::string& message);

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

// Re-throws `e` with `context` prepended to its location.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

}  // namespace aag
