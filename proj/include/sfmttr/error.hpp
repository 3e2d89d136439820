#pragma once

#include <stdexcept>
#include <string>

namespace sfmttr {

enum class ErrorCode {
  // file parsing / model I/O
  UnsupportedCameraModel,
  TruncatedFile,
  MalformedLine,
  NonUnitQuaternion,
  NegativeError,
  MissingFile,
  IntegrityViolation,
  IoFailure,
  // geometry
  UnregisteredImage,
  ResolutionMismatch,
  OutOfBounds,
  BehindCamera,
  // alignment / optimization
  EmptyInput,
  DegenerateDenominator,
  EmptyInliers,
  NoUsableFrames,
  DimensionMismatch,
  // metrics
  ShapeMismatch,
  EmptyMask,
  ZeroMedian,
  BadBinEdges,
  // configuration
  InvalidConfig,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedCameraModel: return "UnsupportedCameraModel";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::NegativeError: return "NegativeError";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IntegrityViolation: return "IntegrityViolation";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UnregisteredImage: return "UnregisteredImage";
    case ErrorCode::ResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::EmptyInliers: return "EmptyInliers";
    case ErrorCode::NoUsableFrames: return "NoUsableFrames";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::ZeroMedian: return "ZeroMedian";
    case ErrorCode::BadBinEdges: return "BadBinEdges";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace sfmttr
