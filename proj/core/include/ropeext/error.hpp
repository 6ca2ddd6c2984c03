// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ropeext {

enum class ErrorCode {
  kInvalidConfig,
  kInvalidArgument,
  kDegenerateWindow,
  kLengthMismatch,
  kNonPositiveFactor,
  kBaseTooSmall,
  kInvalidGroupBounds,
  kInvalidMethod,
  kEmptyRange,
  kUnevaluatedCandidate,
  kEvaluatorFailure,
  kSourceTooShort,
  kMalformedFrame,
  kTimeout,
  kDisconnected,
  kDocTooLongForBucket,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (and tests) can branch on the kind of error without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ropeext
