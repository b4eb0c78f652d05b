// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace splatprune {

enum class ErrorCode {
  kMissingProperty,
  kUnsupportedFormat,
  kTruncatedPayload,
  kEmptyScene,
  kInvalidFraction,
  kKTooLarge,
  kLengthMismatch,
  kDegenerateFrame,
  kNoCameras,
  kDomainError,
  kNonConvergence,
  kRatioOutOfRange,
  kWouldRemoveAll,
  kEmptyInput,
  kEmptySpec,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can branch on the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace splatprune
