#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hatnav {

enum class ErrorCode {
  kFileNotFound,
  kParseError,
  kEmptyMesh,
  kInvalidSpec,
  kInvalidResolution,
  kDegenerateBounds,
  kEmptyGrid,
  kNonUniformSpacing,
  kInvalidConfig,
  kStartBlocked,
  kGoalBlocked,
  kNoFeasiblePath,
  kDivergedCost,
  kWaypointBlocked,
  kTooFewWaypoints,
  kEmptyCloud,
  kSchemaMismatch,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit path) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The text without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

/// Parse failure with the offending 1-based line number (0 when unknown).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

}  // namespace hatnav
