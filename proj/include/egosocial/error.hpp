#ifndef EGOSOCIAL_ERROR_HPP
#define EGOSOCIAL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace egosocial {

enum class ErrorCode {
  InvalidArgument,
  MissingFile,
  ParseError,
  UnknownSchema,
  DanglingReference,
  MalformedRecord,
  InvalidDistribution,
  FitDegenerate,
  MissingDescriptor,
  DimensionMismatch,
  NumericalFailure,
  InsufficientData,
  MissingLabel,
  UnknownReference,
  EmptyInput,
  WrongTask,
  IoError,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownSchema: return "UnknownSchema";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::FitDegenerate: return "FitDegenerate";
    case ErrorCode::MissingDescriptor: return "MissingDescriptor";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::UnknownReference: return "UnknownReference";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::WrongTask: return "WrongTask";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code is stable and machine
/// readable; the message carries the offending path, line or identifier.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace egosocial

#endif
