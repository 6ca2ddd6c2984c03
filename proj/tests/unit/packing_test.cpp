// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/packing.hpp"

#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "books.hpp"
#include "ropeext/error.hpp"
#include "ropeext/rng.hpp"

namespace ropeext {
namespace {

std::vector<DocSpec> random_docs(Rng& rng, std::int64_t window_len, std::int64_t pretrained_len) {
  std::vector<DocSpec> docs;
  const auto n = 1 + rng.below(40);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::int64_t len;
    if (rng.bernoulli(0.2)) {
      len = pretrained_len + 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(3 * window_len)));
    } else {
      len = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(pretrained_len)));
    }
    docs.push_back(DocSpec{"d" + std::to_string(i), len});
  }
  return docs;
}

// Every token of every doc is covered exactly once; short docs stay whole.
void expect_conservation(std::span<const DocSpec> docs, const PackingPlan& plan,
                         std::int64_t pretrained_len) {
  std::map<std::string, std::vector<std::pair<std::int64_t, std::int64_t>>> pieces;
  for (const Segment& seg : plan.segments) {
    ASSERT_LE(seg.used_tokens(), seg.window_len);
    ASSERT_EQ(seg.boundaries.size(), seg.entries.size());
    for (const auto& e : seg.entries) pieces[e.doc_id].emplace_back(e.start, e.end);
    if (seg.mode == SegmentMode::kLongRescaledRope) ASSERT_EQ(seg.entries.size(), 1u);
  }
  for (const auto& d : docs) {
    auto& p = pieces[d.doc_id];
    std::sort(p.begin(), p.end());
    ASSERT_FALSE(p.empty()) << d.doc_id;
    if (d.token_len <= pretrained_len) ASSERT_EQ(p.size(), 1u);
    std::int64_t cursor = 0;
    for (auto [a, b] : p) {
      ASSERT_EQ(a, cursor);
      ASSERT_GT(b, a);
      cursor = b;
    }
    ASSERT_EQ(cursor, d.token_len);
  }
  ASSERT_EQ(pieces.size(), docs.size());
}

TEST(PackingTest, ExampleTwoShortDocs) {
  const std::vector<DocSpec> docs = {{"A", 3}, {"B", 2}};
  const PackingPlan plan = plan_packing(docs, 8, 4);
  ASSERT_EQ(plan.segments.size(), 1u);
  const Segment& seg = plan.segments[0];
  EXPECT_EQ(seg.mode, SegmentMode::kShortOriginalRope);
  EXPECT_EQ(seg.boundaries, (std::vector<std::int64_t>{0, 4}));
  EXPECT_EQ(seg.used_tokens(), 7);

  const MaskSpec mask = document_mask(seg);
  EXPECT_FALSE(mask.full_attention);
  EXPECT_EQ(mask.doc_id_per_token, (std::vector<std::int32_t>{0, 0, 0, 0, 1, 1, 1, -1}));
  EXPECT_TRUE(mask.allowed(1, 3));
  EXPECT_FALSE(mask.allowed(3, 4));
  EXPECT_FALSE(mask.allowed(7, 7));
}

TEST(PackingTest, LongDocChunks) {
  const std::vector<DocSpec> docs = {{"L", 20}};
  const PackingPlan plan = plan_packing(docs, 8, 4);
  ASSERT_EQ(plan.segments.size(), 3u);
  EXPECT_EQ(plan.segments[2].entries[0], (SegmentEntry{"L", 16, 20}));
  for (const auto& seg : plan.segments) {
    EXPECT_EQ(seg.mode, SegmentMode::kLongRescaledRope);
    EXPECT_TRUE(document_mask(seg).full_attention);
  }
  const MaskSpec last = document_mask(plan.segments[2]);
  EXPECT_EQ(last.doc_id_per_token[3], 0);
  EXPECT_EQ(last.doc_id_per_token[4], -1);
  EXPECT_FALSE(last.allowed(0, 5));
}

TEST(PackingTest, SingleDocFillingWindowActsAsFullAttention) {
  const std::vector<DocSpec> docs = {{"A", 7}};
  const MaskSpec mask = document_mask(plan_packing(docs, 8, 8).segments[0]);
  for (std::size_t a = 0; a < 8; ++a) {
    for (std::size_t b = 0; b < 8; ++b) EXPECT_TRUE(mask.allowed(a, b));
  }
}

TEST(PackingTest, ErrorCases) {
  EXPECT_THROW(plan_packing(std::vector<DocSpec>{{"A", 3}}, 4, 8), Error);
  EXPECT_THROW(plan_packing(std::vector<DocSpec>{{"A", 0}}, 8, 4), Error);
  // Fits L_train but not the window once framing is added.
  try {
    plan_packing(std::vector<DocSpec>{{"A", 8}}, 8, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDocTooLongForBucket);
  }
  PackingOptions bad_bucket;
  bad_bucket.quotas = {{16, 0.5}, {0, 0.5}};
  try {
    plan_packing(std::vector<DocSpec>{{"A", 10}}, 32, 8, bad_bucket);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDocTooLongForBucket);
  }
  PackingOptions order;
  order.quotas = {{0, 0.5}, {16, 0.5}};
  EXPECT_THROW(plan_packing(std::vector<DocSpec>{{"A", 4}}, 32, 8, order), Error);
}

TEST(PackingTest, ConservationOnRandomMixes) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::int64_t pretrained = 4 + static_cast<std::int64_t>(rng.below(60));
    const std::int64_t window = pretrained * (1 + static_cast<std::int64_t>(rng.below(8))) + 1;
    PackingOptions opts;
    opts.framing_tokens = static_cast<int>(rng.below(2));
    const auto docs = random_docs(rng, window, pretrained);
    const PackingPlan plan = plan_packing(docs, window, pretrained, opts);
    expect_conservation(docs, plan, pretrained);
    EXPECT_TRUE(plan.unused_doc_ids.empty());
  }
}

TEST(PackingTest, NoCrossDocumentAttentionInShortSegments) {
  Rng rng(77);
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::int64_t pretrained = 8 + static_cast<std::int64_t>(rng.below(120));
    const std::int64_t window = std::min<std::int64_t>(512, pretrained * 4);
    for (const Segment& seg : plan_packing(random_docs(rng, window, pretrained), window, pretrained).segments) {
      const MaskSpec mask = document_mask(seg);
      ASSERT_EQ(mask.full_attention, seg.mode == SegmentMode::kLongRescaledRope);
      if (mask.full_attention) continue;
      const auto n = static_cast<std::size_t>(seg.window_len);
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          const bool ok = mask.allowed(a, b);
          ASSERT_EQ(ok, mask.allowed(b, a));
          if (ok) {
            ASSERT_EQ(mask.doc_id_per_token[a], mask.doc_id_per_token[b]);
          }
          if (a == b) ASSERT_EQ(ok, mask.doc_id_per_token[a] != -1);
        }
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(PackingTest, FirstFitDecreasingOrder) {
  const std::vector<DocSpec> docs = {{"a", 2}, {"b", 5}, {"c", 3}, {"d", 5}, {"e", 1}};
  PackingOptions opts;
  opts.framing_tokens = 0;
  const PackingPlan plan = plan_packing(docs, 8, 8, opts);
  ASSERT_EQ(plan.segments.size(), 2u);
  // b(5) + c(3) fill the first window; d(5) + a(2) + e(1) the second.
  EXPECT_EQ(plan.segments[0].entries.size(), 2u);
  EXPECT_EQ(plan.segments[0].entries[0].doc_id, "b");
  EXPECT_EQ(plan.segments[0].entries[1].doc_id, "c");
  EXPECT_EQ(plan.segments[1].entries[0].doc_id, "d");
}

TEST(PackingTest, QuotaSplitWithinOneDocument) {
  Rng rng(3);
  const std::int64_t pretrained = 4096;
  const std::int64_t window = 131072;
  std::vector<DocSpec> docs;
  for (int i = 0; i < 3000; ++i) {
    const auto bucket = rng.below(3);
    std::int64_t len;
    if (bucket == 0) {
      len = 1 + static_cast<std::int64_t>(rng.below(4096));
    } else if (bucket == 1) {
      len = 4097 + static_cast<std::int64_t>(rng.below(32768 - 4096));
    } else {
      len = 32769 + static_cast<std::int64_t>(rng.below(131072 - 32768));
    }
    docs.push_back(DocSpec{"doc" + std::to_string(i), len});
  }
  PackingOptions opts;
  opts.quotas = {{4096, 0.3}, {32768, 0.3}, {0, 0.4}};
  const PackingPlan plan = plan_packing(docs, window, pretrained, opts);
  ASSERT_EQ(plan.buckets.size(), 3u);
  std::int64_t total = 0;
  for (const auto& b : plan.buckets) total += b.selected_tokens;
  const double fractions[] = {0.3, 0.3, 0.4};
  for (std::size_t b = 0; b < 3; ++b) {
    const auto& u = plan.buckets[b];
    EXPECT_LE(std::abs(static_cast<double>(u.selected_tokens) - fractions[b] * total),
              static_cast<double>(u.largest_doc))
        << "bucket " << b;
    EXPECT_LE(std::abs(u.selected_tokens - u.target_tokens), u.largest_doc);
  }

  // Selected documents are planned, the rest reported unused.
  std::int64_t planned = 0;
  for (const auto& seg : plan.segments) {
    for (const auto& e : seg.entries) planned += e.length();
  }
  EXPECT_EQ(planned, total);
  EXPECT_FALSE(plan.unused_doc_ids.empty());
}

TEST(PackingTest, ExplicitTotalCapsBuckets) {
  std::vector<DocSpec> docs;
  for (int i = 0; i < 100; ++i) docs.push_back({"s" + std::to_string(i), 100});
  for (int i = 0; i < 100; ++i) docs.push_back({"l" + std::to_string(i), 1000});
  PackingOptions opts;
  opts.quotas = {{512, 0.5}, {0, 0.5}};
  opts.total_tokens = 10000;
  const PackingPlan plan = plan_packing(docs, 4096, 512, opts);
  EXPECT_EQ(plan.buckets[0].selected_tokens, 5000);
  EXPECT_EQ(plan.buckets[1].selected_tokens, 5000);
}

TEST(RopeModeTest, BoundaryAndMonotone) {
  EXPECT_EQ(rope_mode(1000, 0, 2048), InferenceRope::kOriginal);
  EXPECT_EQ(rope_mode(2000, 100, 2048), InferenceRope::kRescaled);
  EXPECT_EQ(rope_mode(2048, 0, 2048), InferenceRope::kOriginal);
  EXPECT_THROW(rope_mode(-1, 0, 2048), Error);
  for (std::int64_t prompt : {0, 100, 2000, 2048, 3000}) {
    bool rescaled = false;
    for (std::int64_t g = 0; g < 200; ++g) {
      const bool now = rope_mode(prompt, g, 2048) == InferenceRope::kRescaled;
      ASSERT_TRUE(!rescaled || now);
      rescaled = now;
    }
  }
}

TEST(SwitchPlanTest, Examples) {
  const SwitchPlan at_window = switch_plan(2048, 2048);
  EXPECT_EQ(at_window.flip_step, 1);
  EXPECT_TRUE(at_window.recompute_kv_cache);
  const SwitchPlan over = switch_plan(3000, 2048);
  EXPECT_EQ(over.flip_step, 0);
  EXPECT_FALSE(over.recompute_kv_cache);
  const SwitchPlan none = switch_plan(1000, 2048, 500);
  EXPECT_FALSE(none.flip_step.has_value());
  // The flip step agrees with rope_mode.
  for (std::int64_t prompt : {0, 1, 1000, 2047, 2048}) {
    const auto step = *switch_plan(prompt, 2048).flip_step;
    EXPECT_EQ(rope_mode(prompt, step - 1, 2048), InferenceRope::kOriginal);
    EXPECT_EQ(rope_mode(prompt, step, 2048), InferenceRope::kRescaled);
  }
}

TEST(PlanFileTest, RoundTrip) {
  Rng rng(12);
  const auto dir = testing::scratch_dir("plan_file");
  const auto docs = random_docs(rng, 64, 16);
  const PackingPlan plan = plan_packing(docs, 64, 16);
  write_plan(plan, dir / "plan.jsonl");
  const auto back = read_plan(dir / "plan.jsonl");
  ASSERT_EQ(back.size(), plan.segments.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].entries, plan.segments[i].entries);
    EXPECT_EQ(back[i].boundaries, plan.segments[i].boundaries);
    EXPECT_EQ(back[i].mode, plan.segments[i].mode);
    EXPECT_EQ(document_mask(back[i]).doc_id_per_token,
              document_mask(plan.segments[i]).doc_id_per_token);
    EXPECT_EQ(segment_to_json(back[i]), segment_to_json(plan.segments[i]));
  }
  EXPECT_EQ(segment_to_json(plan_packing(std::vector<DocSpec>{{"A", 3}, {"B", 2}}, 8, 4).segments[0]),
            R"({"mode":"short","window_len":8,"entries":[{"doc_id":"A","start":0,"end":3},)"
            R"({"doc_id":"B","start":0,"end":2}],"doc_id_per_token":[[0,4],[1,3],[-1,1]]})");

  std::ofstream(dir / "docs.jsonl") << "{\"doc_id\":\"x\",\"token_len\":5}\n\n{\"doc_id\":\"y\",\"token_len\":7}\n";
  const auto read = read_docs(dir / "docs.jsonl");
  ASSERT_EQ(read.size(), 2u);
  EXPECT_EQ(read[1].token_len, 7);
  std::ofstream(dir / "bad.jsonl") << "{\"doc_id\":1}\n";
  EXPECT_THROW(read_docs(dir / "bad.jsonl"), Error);
  EXPECT_THROW(read_plan(dir / "missing.jsonl"), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace ropeext
