#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tpm {

enum class ErrorCode {
  // graph store
  DuplicateNodeId,
  MalformedNode,
  UnknownEndpoint,
  IllegalRelation,
  TemporalViolation,
  CycleIntroduced,
  InvalidInterval,
  NotAContainer,
  // ingest / conversion
  SyntaxError,
  UnknownRelation,
  UnknownKind,
  ConversionError,
  // query language
  UnboundVariable,
  ArityError,
  UnknownKeyword,
  EmptyExpression,
  UnsupportedPattern,
  TypeError,
  UnboundTimeSymbol,
  NameCollision,
  TimeBoundViolation,
  RegexUnsatisfiable,
  UnknownContainer,
  // agents
  NotTimed,
  DuplicateRegistration,
  // algorithms
  GraphTooLarge,
  // front end
  UnknownTarget,
  IoError,
  ChecksumMismatch,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateNodeId: return "DuplicateNodeId";
    case ErrorCode::MalformedNode: return "MalformedNode";
    case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
    case ErrorCode::IllegalRelation: return "IllegalRelation";
    case ErrorCode::TemporalViolation: return "TemporalViolation";
    case ErrorCode::CycleIntroduced: return "CycleIntroduced";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::NotAContainer: return "NotAContainer";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownRelation: return "UnknownRelation";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::ConversionError: return "ConversionError";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::ArityError: return "ArityError";
    case ErrorCode::UnknownKeyword: return "UnknownKeyword";
    case ErrorCode::EmptyExpression: return "EmptyExpression";
    case ErrorCode::UnsupportedPattern: return "UnsupportedPattern";
    case ErrorCode::TypeError: return "TypeError";
    case ErrorCode::UnboundTimeSymbol: return "UnboundTimeSymbol";
    case ErrorCode::NameCollision: return "NameCollision";
    case ErrorCode::TimeBoundViolation: return "TimeBoundViolation";
    case ErrorCode::RegexUnsatisfiable: return "RegexUnsatisfiable";
    case ErrorCode::UnknownContainer: return "UnknownContainer";
    case ErrorCode::NotTimed: return "NotTimed";
    case ErrorCode::DuplicateRegistration: return "DuplicateRegistration";
    case ErrorCode::GraphTooLarge: return "GraphTooLarge";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
  }
  return "Unknown";
}

/// Source position of a diagnostic, 1-based. line == 0 means "no position".
struct Position {
  std::size_t line = 0;
  std::size_t column = 0;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, Position pos = {})
      : std::runtime_error(format(code, message, pos)),
        code_(code),
        pos_(pos),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  Position position() const noexcept { return pos_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(ErrorCode code, const std::string& message,
                            Position pos) {
    std::string out(to_string(code));
    if (pos.line != 0) {
      out += " at " + std::to_string(pos.line) + ":" +
             std::to_string(pos.column);
    }
    out += ": ";
    out += message;
    return out;
  }

  ErrorCode code_;
  Position pos_;
  std::string detail_;
};

}  // namespace tpm
