// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/protocol.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "messages.hpp"
#include "oracles.hpp"

#ifndef ROPEEXT_GOLDEN_DIR
#error "ROPEEXT_GOLDEN_DIR must point at tests/golden"
#endif

namespace ropeext {
namespace {

using testing::random_request;
using testing::random_response;

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

TEST(ProtocolTest, RequestRoundTrip) {
  Rng rng(1001);
  for (int trial = 0; trial < 1000; ++trial) {
    const EvalRequest req = random_request(rng);
    const std::string frame = encode_request(req);
    ASSERT_EQ(frame.back(), '\n');
    ASSERT_EQ(frame.find('\n'), frame.size() - 1);
    const EvalRequest back = decode_request(frame);
    ASSERT_EQ(back, req);
    ASSERT_TRUE(same_bits(back.lambdas, req.lambdas));
    ASSERT_EQ(encode_request(back), frame);
  }
}

TEST(ProtocolTest, ResponseRoundTrip) {
  Rng rng(1002);
  for (int trial = 0; trial < 1000; ++trial) {
    const EvalResponse resp = random_response(rng);
    const std::string frame = encode_response(resp);
    const EvalResponse back = decode_response(frame);
    ASSERT_EQ(back, resp);
    ASSERT_EQ(encode_response(back), frame);
  }
}

TEST(ProtocolTest, GoldenFramesReencodeByteForByte) {
  std::ifstream in(std::string(ROPEEXT_GOLDEN_DIR) + "/protocol_frames.jsonl");
  ASSERT_TRUE(in);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line + "\n");
  ASSERT_EQ(lines.size(), 5u);

  const EvalRequest r0 = decode_request(lines[0]);
  EXPECT_EQ(r0.request_id, "req-0");
  EXPECT_EQ(r0.lambdas[1], 64.1);
  EXPECT_EQ(std::get<std::string>(r0.corpus_ref), "corpus.jsonl");
  EXPECT_EQ(encode_request(r0), lines[0]);

  const EvalRequest r1 = decode_request(lines[1]);
  EXPECT_EQ(r1.mode, EvalMode::kFullPpl);
  const auto& samples = std::get<std::vector<NeedleSample>>(r1.corpus_ref);
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_EQ(samples[0].needle, (Needle{"numerous-kite", 6716097}));
  const WhitespaceTokenizer tok;
  EXPECT_EQ(static_cast<std::int64_t>(tok.encode(samples[0].full_text).size()),
            samples[0].token_len);
  EXPECT_EQ(encode_request(r1), lines[1]);

  EXPECT_EQ(decode_response(lines[2]), make_response("req-0", {2.0, 3.0}));
  EXPECT_EQ(decode_response(lines[3]), make_error_response("req-1", "CUDA out of memory"));
  EXPECT_EQ(decode_response(lines[4]).fitness, 0.1);
  for (std::size_t i = 2; i < lines.size(); ++i) {
    EXPECT_EQ(encode_response(decode_response(lines[i])), lines[i]);
  }
}

TEST(ProtocolTest, FitnessIsMeanOfPerSample) {
  EXPECT_EQ(make_response("x", {1.0, 2.0, 6.0}).fitness, 3.0);
  EXPECT_EQ(make_response("x", {}).fitness, 0.0);
}

TEST(ProtocolTest, UnknownKeysAreIgnored) {
  const auto resp = decode_response(
      R"({"request_id":"a","extra":{"nested":[1,2]},"fitness":1.5,"per_sample":[1.5],"error":null})");
  EXPECT_EQ(resp.fitness, 1.5);
}

TEST(ProtocolTest, MalformedFrames) {
  auto offset_of = [](std::string_view frame) -> std::optional<std::size_t> {
    try {
      decode_response(frame);
    } catch (const FrameError& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMalformedFrame);
      return e.offset();
    }
    return std::nullopt;
  };
  EXPECT_EQ(offset_of(R"({"request_id":"a",)"), 18u);
  EXPECT_TRUE(offset_of("[1,2]"));
  EXPECT_TRUE(offset_of(R"({"request_id":"a"})"));
  EXPECT_TRUE(offset_of(R"({"request_id":"a","fitness":null,"per_sample":[]})"));
  EXPECT_TRUE(offset_of(R"({"request_id":7,"fitness":1})"));
  EXPECT_TRUE(offset_of("{\"request_id\":\"a\",\n\"fitness\":1}"));

  EXPECT_THROW(decode_request(R"({"request_id":"a","theta_base":10000,"head_dim":4,)"
                              R"("pretrained_len":2048,"target_len":4096,"lambdas":[1],)"
                              R"("corpus_ref":"c","mode":"NEEDLE_PPL"})"),
               FrameError);
  EXPECT_THROW(decode_request(R"({"request_id":"a","theta_base":10000,"head_dim":2,)"
                              R"("pretrained_len":2048,"target_len":4096,"lambdas":[1],)"
                              R"("corpus_ref":"c","mode":"LOGITS"})"),
               FrameError);
  EXPECT_THROW(decode_request(R"({"request_id":"a","theta_base":10000,"head_dim":2,)"
                              R"("pretrained_len":2048,"target_len":4096,"lambdas":[1],)"
                              R"("corpus_ref":[{"text":"x"}],"mode":"NEEDLE_PPL"})"),
               FrameError);
}

TEST(ProtocolTest, EncoderRejectsBadInput) {
  EvalRequest req;
  req.config = presets::phi3_mini();
  req.lambdas = {1.0};
  EXPECT_THROW(encode_request(req), Error);
  EvalResponse resp;
  resp.fitness = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(encode_response(resp), Error);
}

TEST(ProtocolTest, ModeStrings) {
  EXPECT_EQ(to_string(EvalMode::kNeedlePpl), "NEEDLE_PPL");
  EXPECT_EQ(to_string(EvalMode::kFullPpl), "FULL_PPL");
  EXPECT_EQ(parse_eval_mode("needle"), EvalMode::kNeedlePpl);
  EXPECT_EQ(parse_eval_mode("full"), EvalMode::kFullPpl);
  EXPECT_THROW(parse_eval_mode("ppl"), Error);
}

}  // namespace
}  // namespace ropeext
