#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace odtk {

enum class ErrorCode {
  InvalidArgument,
  InvalidChannelCount,
  DegenerateHistogram,
  RetinaNotFound,
  NoCandidateRegion,
  OutOfBounds,
  InvalidBox,
  EmptyInput,
  EmptyDataset,
  NotFound,
  VersionConflict,
  UndefinedROC,
  StratificationImpossible,
  UnsupportedFormat,
  DecodeFailed,
  IoError,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidChannelCount: return "InvalidChannelCount";
    case ErrorCode::DegenerateHistogram: return "DegenerateHistogram";
    case ErrorCode::RetinaNotFound: return "RetinaNotFound";
    case ErrorCode::NoCandidateRegion: return "NoCandidateRegion";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::VersionConflict: return "VersionConflict";
    case ErrorCode::UndefinedROC: return "UndefinedROC";
    case ErrorCode::StratificationImpossible: return "StratificationImpossible";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::DecodeFailed: return "DecodeFailed";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the toolkit carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace odtk
