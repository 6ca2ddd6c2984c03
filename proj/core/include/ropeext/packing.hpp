// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ropeext {

struct DocSpec {
  std::string doc_id;
  std::int64_t token_len = 0;
};

/// Short segments train with the original angles and per-document masks;
/// long segments train with rescaled angles and full attention.
enum class SegmentMode { kShortOriginalRope, kLongRescaledRope };

std::string_view to_string(SegmentMode mode);  // "short" / "long"

struct SegmentEntry {
  std::string doc_id;
  std::int64_t start = 0;  // token offsets within the document, half-open
  std::int64_t end = 0;

  std::int64_t length() const noexcept { return end - start; }
  friend bool operator==(const SegmentEntry&, const SegmentEntry&) = default;
};

struct Segment {
  std::int64_t window_len = 0;
  SegmentMode mode = SegmentMode::kShortOriginalRope;
  std::vector<SegmentEntry> entries;
  /// Window position at which each entry starts (its framing token, if any).
  std::vector<std::int64_t> boundaries;
  /// Framing tokens placed before each entry's content (BOS).
  int framing_tokens = 0;

  std::int64_t used_tokens() const;
};

/// Document-block attention structure for one segment. Not a dense matrix:
/// doc_id_per_token holds the entry index per window position, -1 for padding.
struct MaskSpec {
  std::vector<std::int32_t> doc_id_per_token;
  bool full_attention = false;

  /// Whether position a may attend to position b (causality is applied elsewhere).
  bool allowed(std::size_t a, std::size_t b) const;
};

/// Token budget for documents whose length falls in (previous max_len, max_len].
/// max_len == 0 marks an unbounded last bucket. The first bucket is the short
/// bucket and must not exceed the pre-trained window.
struct BucketQuota {
  std::int64_t max_len = 0;
  double fraction = 0.0;
};

struct PackingOptions {
  int framing_tokens = 1;
  std::vector<BucketQuota> quotas;
  /// Total token budget shared by the quotas; by default the largest total
  /// for which every bucket can meet its fraction.
  std::optional<std::int64_t> total_tokens;
};

struct BucketUsage {
  std::int64_t max_len = 0;
  std::int64_t target_tokens = 0;
  std::int64_t selected_tokens = 0;
  std::int64_t largest_doc = 0;
};

struct PackingPlan {
  std::vector<Segment> segments;
  std::vector<BucketUsage> buckets;  // empty unless quotas were given
  std::vector<std::string> unused_doc_ids;
};

/// Short documents (<= L_train) are packed first-fit-decreasing into SHORT
/// windows; longer documents are cut into ceil(len / L) LONG windows, the last
/// one padded. Throws Error(kDocTooLongForBucket) when a document classified as
/// short cannot be trained under the original angles or does not fit a window.
PackingPlan plan_packing(std::span<const DocSpec> docs, std::int64_t window_len,
                         std::int64_t pretrained_len, const PackingOptions& options = {});

MaskSpec document_mask(const Segment& seg);

enum class InferenceRope { kOriginal, kRescaled };

std::string_view to_string(InferenceRope mode);

/// Original angles while prompt + generated tokens stay within L_train.
InferenceRope rope_mode(std::int64_t prompt_tokens, std::int64_t generated_tokens,
                        std::int64_t pretrained_len);

struct SwitchPlan {
  /// Generation step at which the rescaled angles take over: 0 means the
  /// prefill already runs rescaled, k > 0 means before the k-th generated
  /// token. Empty when the budget never crosses the window.
  std::optional<std::int64_t> flip_step;
  /// Cached keys/values were computed under the original angles and must be
  /// recomputed once at the flip.
  bool recompute_kv_cache = false;
};

SwitchPlan switch_plan(std::int64_t prompt_tokens, std::int64_t pretrained_len,
                       std::optional<std::int64_t> max_new_tokens = std::nullopt);

std::string segment_to_json(const Segment& seg);
Segment segment_from_json(std::string_view json);
void write_plan(const PackingPlan& plan, const std::filesystem::path& path);
std::vector<Segment> read_plan(const std::filesystem::path& path);

/// Reads documents from JSON-lines {"doc_id": str, "token_len": int}.
std::vector<DocSpec> read_docs(const std::filesystem::path& path);

}  // namespace ropeext
