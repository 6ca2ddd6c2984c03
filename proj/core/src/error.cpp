// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/error.hpp"

namespace ropeext {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDegenerateWindow: return "DegenerateWindow";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNonPositiveFactor: return "NonPositiveFactor";
    case ErrorCode::kBaseTooSmall: return "BaseTooSmall";
    case ErrorCode::kInvalidGroupBounds: return "InvalidGroupBounds";
    case ErrorCode::kInvalidMethod: return "InvalidMethod";
    case ErrorCode::kEmptyRange: return "EmptyRange";
    case ErrorCode::kUnevaluatedCandidate: return "UnevaluatedCandidate";
    case ErrorCode::kEvaluatorFailure: return "EvaluatorFailure";
    case ErrorCode::kSourceTooShort: return "SourceTooShort";
    case ErrorCode::kMalformedFrame: return "MalformedFrame";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kDocTooLongForBucket: return "DocTooLongForBucket";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ropeext
