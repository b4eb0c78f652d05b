// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "splatprune/error.hpp"

namespace splatprune {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingProperty: return "MissingProperty";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kEmptyScene: return "EmptyScene";
    case ErrorCode::kInvalidFraction: return "InvalidFraction";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateFrame: return "DegenerateFrame";
    case ErrorCode::kNoCameras: return "NoCameras";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kRatioOutOfRange: return "RatioOutOfRange";
    case ErrorCode::kWouldRemoveAll: return "WouldRemoveAll";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptySpec: return "EmptySpec";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace splatprune
