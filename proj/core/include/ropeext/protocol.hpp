// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ropeext/error.hpp"
#include "ropeext/needle.hpp"
#include "ropeext/rope.hpp"

namespace ropeext {

// Newline-delimited JSON frames exchanged with an external fitness evaluator.
//
//   request  {"request_id","theta_base","head_dim","pretrained_len","target_len",
//             "lambdas","corpus_ref","mode"}
//   response {"request_id","fitness","per_sample","error"}
//
// Keys appear in exactly this order, floats use 17 significant digits, each
// frame is one UTF-8 line terminated by LF. Decoders ignore unknown keys.

inline constexpr std::size_t kMaxFrameBytes = std::size_t{64} << 20;

enum class EvalMode { kNeedlePpl, kFullPpl };

std::string_view to_string(EvalMode mode);
EvalMode parse_eval_mode(std::string_view s);

/// A corpus is referenced by path or shipped inline.
using CorpusRef = std::variant<std::string, std::vector<NeedleSample>>;

struct EvalRequest {
  std::string request_id;
  RopeConfig config;
  std::vector<double> lambdas;
  CorpusRef corpus_ref = std::string{};
  EvalMode mode = EvalMode::kNeedlePpl;

  friend bool operator==(const EvalRequest&, const EvalRequest&) = default;
};

struct EvalResponse {
  std::string request_id;
  double fitness = 0.0;  // mean of per_sample when error is absent
  std::vector<double> per_sample;
  std::optional<std::string> error;

  friend bool operator==(const EvalResponse&, const EvalResponse&) = default;
};

/// Raised for frames that cannot be decoded. offset() is the byte position the
/// JSON parser stopped at (0 for structural problems such as a missing key).
class FrameError : public Error {
 public:
  FrameError(const std::string& message, std::size_t offset)
      : Error(ErrorCode::kMalformedFrame, message + " (byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Both encoders return the frame including its trailing '\n'.
std::string encode_request(const EvalRequest& req);
std::string encode_response(const EvalResponse& resp);
EvalRequest decode_request(std::string_view frame);
EvalResponse decode_response(std::string_view frame);

/// Success response whose fitness is the arithmetic mean of per_sample.
EvalResponse make_response(std::string request_id, std::vector<double> per_sample);
EvalResponse make_error_response(std::string request_id, std::string message);

}  // namespace ropeext
