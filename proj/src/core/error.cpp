#include "aag/error.hpp"

namespace aag {

std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::CycleError: return "CycleError";
    case ErrorCode::UnboundSlot: return "UnboundSlot";
    case ErrorCode::SlotKindMismatch: return "SlotKindMismatch";
    case ErrorCode::WiringError: return "WiringError";
    case ErrorCode::NoRelationship: return "NoRelationship";
    case ErrorCode::UnsupportedPattern: return "UnsupportedPattern";
    case ErrorCode::DbError: return "DbError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnexpectedRowCount: return "UnexpectedRowCount";
    case ErrorCode::EmptyFacts: return "EmptyFacts";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::TimeoutError: return "TimeoutError";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, const std::string& where) {
  std::string s(to_string(code));
  if (!where.empty()) s += " at " + where;
  return s + ": " + message;
}

std::string summarize(const std::vector<Violation>& vs) {
  if (vs.empty()) return "invalid";
  std::string s = vs.front().message;
  if (vs.size() > 1) s += " (+" + std::to_string(vs.size() - 1) + " more)";
  return s;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string where)
    : std::runtime_error(compose(code, message, where)), code_(code), where_(std::move(where)), detail_(message) {}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(ErrorCode::ValidationError, summarize(violations), violations.empty() ? "" : violations.front().path),
      violations_(std::move(violations)) {}

ValidationError::ValidationError(const std::string& path, const std::string& message)
    : ValidationError(std::vector<Violation>{{"Invalid", path, message}}) {}

void rethrow_with_context(const Error& e, const std::string& context) {
  std::string where = e.where().empty() ? context : context + "/" + e.where();
  if (auto* ve = dynamic_cast<const ValidationError*>(&e)) {
    auto vs = ve->violations();
    for (auto& v : vs) v.path = context + "/" + v.path;
    throw ValidationError(std::move(vs));
  }
  throw Error(e.code(), e.detail(), where);
}

}  // namespace aag
