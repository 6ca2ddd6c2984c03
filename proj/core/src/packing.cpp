// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/packing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ropeext/error.hpp"
#include "ropeext/json_writer.hpp"

namespace ropeext {

namespace {

constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();

std::int64_t bucket_bound(const BucketQuota& q) { return q.max_len == 0 ? kUnbounded : q.max_len; }

void validate_quotas(std::span<const BucketQuota> quotas) {
  std::int64_t prev = 0;
  for (std::size_t b = 0; b < quotas.size(); ++b) {
    const auto& q = quotas[b];
    if (!(q.fraction > 0.0) || !std::isfinite(q.fraction)) {
      throw Error(ErrorCode::kInvalidArgument, "quota fractions must be positive");
    }
    if (q.max_len == 0 && b + 1 != quotas.size()) {
      throw Error(ErrorCode::kInvalidArgument, "only the last bucket may be unbounded");
    }
    if (q.max_len != 0 && q.max_len <= prev) {
      throw Error(ErrorCode::kInvalidArgument, "bucket bounds must be increasing");
    }
    prev = q.max_len;
  }
}

// Picks documents per bucket, in input order, so that every bucket's share of
// the selected total is within one of its own documents. Buckets are filled
// coarsest first; each later bucket aims at its share of the total implied by
// what the earlier ones actually got, so a large document's rounding error is
// absorbed by the finer buckets instead of being amplified by them.
// Returns the indices of the chosen documents in input order.
std::vector<std::size_t> select_by_quota(std::span<const DocSpec> docs, std::int64_t pretrained_len,
                                         const PackingOptions& options, PackingPlan& plan) {
  const auto& quotas = options.quotas;
  validate_quotas(quotas);
  std::vector<int> bucket_of(docs.size(), -1);
  std::vector<std::int64_t> available(quotas.size(), 0);
  plan.buckets.assign(quotas.size(), BucketUsage{});
  for (std::size_t b = 0; b < quotas.size(); ++b) plan.buckets[b].max_len = quotas[b].max_len;

  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t b = 0; b < quotas.size(); ++b) {
      if (docs[i].token_len <= bucket_bound(quotas[b])) {
        bucket_of[i] = static_cast<int>(b);
        break;
      }
    }
    if (bucket_of[i] == 0 && docs[i].token_len > pretrained_len) {
      throw Error(ErrorCode::kDocTooLongForBucket,
                  "document '" + docs[i].doc_id + "' (" + std::to_string(docs[i].token_len) +
                      " tokens) is in the short bucket but exceeds the pre-trained window");
    }
    if (bucket_of[i] >= 0) {
      available[static_cast<std::size_t>(bucket_of[i])] += docs[i].token_len;
      auto& usage = plan.buckets[static_cast<std::size_t>(bucket_of[i])];
      usage.largest_doc = std::max(usage.largest_doc, docs[i].token_len);
    }
  }

  double total = 0.0;
  if (options.total_tokens) {
    total = static_cast<double>(*options.total_tokens);
  } else {
    double limit = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < quotas.size(); ++b) {
      limit = std::min(limit, static_cast<double>(available[b]) / quotas[b].fraction);
    }
    total = std::isfinite(limit) ? std::floor(limit) : 0.0;
  }

  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return plan.buckets[a].largest_doc > plan.buckets[b].largest_doc;
  });

  std::vector<bool> picked(docs.size(), false);
  std::int64_t selected_sum = 0;
  double fraction_sum = 0.0;
  for (std::size_t b : order) {
    auto& usage = plan.buckets[b];
    usage.target_tokens = static_cast<std::int64_t>(std::floor(quotas[b].fraction * total));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (bucket_of[i] != static_cast<int>(b)) continue;
      if (usage.selected_tokens + docs[i].token_len <= usage.target_tokens) {
        usage.selected_tokens += docs[i].token_len;
        picked[i] = true;
      }
    }
    selected_sum += usage.selected_tokens;
    fraction_sum += quotas[b].fraction;
    if (selected_sum > 0) total = static_cast<double>(selected_sum) / fraction_sum;
  }

  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (picked[i]) {
      chosen.push_back(i);
    } else {
      plan.unused_doc_ids.push_back(docs[i].doc_id);
    }
  }
  return chosen;
}

}  // namespace

std::string_view to_string(SegmentMode mode) {
  return mode == SegmentMode::kShortOriginalRope ? "short" : "long";
}

std::string_view to_string(InferenceRope mode) {
  return mode == InferenceRope::kOriginal ? "original" : "rescaled";
}

std::int64_t Segment::used_tokens() const {
  std::int64_t used = 0;
  for (const auto& e : entries) used += e.length() + framing_tokens;
  return used;
}

PackingPlan plan_packing(std::span<const DocSpec> docs, std::int64_t window_len,
                         std::int64_t pretrained_len, const PackingOptions& options) {
  if (pretrained_len < 1 || window_len < pretrained_len) {
    throw Error(ErrorCode::kInvalidArgument, "require window_len >= pretrained_len >= 1");
  }
  if (options.framing_tokens < 0) {
    throw Error(ErrorCode::kInvalidArgument, "framing_tokens must be >= 0");
  }
  for (const auto& d : docs) {
    if (d.token_len < 1) {
      throw Error(ErrorCode::kInvalidArgument, "document '" + d.doc_id + "' is empty");
    }
  }

  PackingPlan plan;
  std::vector<std::size_t> chosen;
  if (options.quotas.empty()) {
    chosen.resize(docs.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  } else {
    chosen = select_by_quota(docs, pretrained_len, options, plan);
  }

  std::vector<std::size_t> short_docs;
  std::vector<std::size_t> long_docs;
  for (std::size_t i : chosen) {
    (docs[i].token_len <= pretrained_len ? short_docs : long_docs).push_back(i);
  }

  // First-fit-decreasing; ties keep input order.
  std::stable_sort(short_docs.begin(), short_docs.end(), [&](std::size_t a, std::size_t b) {
    return docs[a].token_len > docs[b].token_len;
  });
  const std::int64_t framing = options.framing_tokens;
  std::vector<Segment> short_segments;
  for (std::size_t i : short_docs) {
    const std::int64_t need = docs[i].token_len + framing;
    if (need > window_len) {
      throw Error(ErrorCode::kDocTooLongForBucket,
                  "document '" + docs[i].doc_id + "' plus framing exceeds the window");
    }
    auto fit = std::find_if(short_segments.begin(), short_segments.end(), [&](const Segment& s) {
      return s.used_tokens() + need <= window_len;
    });
    if (fit == short_segments.end()) {
      Segment seg;
      seg.window_len = window_len;
      seg.mode = SegmentMode::kShortOriginalRope;
      seg.framing_tokens = options.framing_tokens;
      short_segments.push_back(std::move(seg));
      fit = std::prev(short_segments.end());
    }
    fit->boundaries.push_back(fit->used_tokens());
    fit->entries.push_back(SegmentEntry{docs[i].doc_id, 0, docs[i].token_len});
  }
  plan.segments = std::move(short_segments);

  for (std::size_t i : long_docs) {
    for (std::int64_t off = 0; off < docs[i].token_len; off += window_len) {
      Segment seg;
      seg.window_len = window_len;
      seg.mode = SegmentMode::kLongRescaledRope;
      seg.entries.push_back(
          SegmentEntry{docs[i].doc_id, off, std::min(off + window_len, docs[i].token_len)});
      seg.boundaries.push_back(0);
      plan.segments.push_back(std::move(seg));
    }
  }
  return plan;
}

MaskSpec document_mask(const Segment& seg) {
  MaskSpec mask;
  mask.doc_id_per_token.assign(static_cast<std::size_t>(seg.window_len), -1);
  mask.full_attention = seg.mode == SegmentMode::kLongRescaledRope;
  for (std::size_t k = 0; k < seg.entries.size(); ++k) {
    const std::int64_t begin = seg.boundaries[k];
    const std::int64_t end = begin + seg.framing_tokens + seg.entries[k].length();
    for (std::int64_t p = begin; p < end && p < seg.window_len; ++p) {
      mask.doc_id_per_token[static_cast<std::size_t>(p)] = static_cast<std::int32_t>(k);
    }
  }
  return mask;
}

bool MaskSpec::allowed(std::size_t a, std::size_t b) const {
  const std::int32_t da = doc_id_per_token.at(a);
  const std::int32_t db = doc_id_per_token.at(b);
  if (da < 0 || db < 0) return false;
  return full_attention || da == db;
}

InferenceRope rope_mode(std::int64_t prompt_tokens, std::int64_t generated_tokens,
                        std::int64_t pretrained_len) {
  if (prompt_tokens < 0 || generated_tokens < 0) {
    throw Error(ErrorCode::kInvalidArgument, "token counts must be non-negative");
  }
  return prompt_tokens + generated_tokens <= pretrained_len ? InferenceRope::kOriginal
                                                           : InferenceRope::kRescaled;
}

SwitchPlan switch_plan(std::int64_t prompt_tokens, std::int64_t pretrained_len,
                       std::optional<std::int64_t> max_new_tokens) {
  if (prompt_tokens < 0) throw Error(ErrorCode::kInvalidArgument, "prompt_tokens must be >= 0");
  SwitchPlan plan;
  if (prompt_tokens > pretrained_len) {
    plan.flip_step = 0;
    return plan;
  }
  const std::int64_t step = pretrained_len - prompt_tokens + 1;
  if (max_new_tokens && step > *max_new_tokens) return plan;
  plan.flip_step = step;
  plan.recompute_kv_cache = true;
  return plan;
}

std::string segment_to_json(const Segment& seg) {
  const MaskSpec mask = document_mask(seg);
  JsonWriter w;
  w.begin_object().key("mode").value(to_string(seg.mode)).key("window_len").value(seg.window_len);
  w.key("entries").begin_array();
  for (const auto& e : seg.entries) {
    w.begin_object().key("doc_id").value(e.doc_id).key("start").value(e.start)
        .key("end").value(e.end).end_object();
  }
  w.end_array();
  w.key("doc_id_per_token").begin_array();
  const auto& ids = mask.doc_id_per_token;
  for (std::size_t p = 0; p < ids.size();) {
    std::size_t q = p;
    while (q < ids.size() && ids[q] == ids[p]) ++q;
    w.begin_array().value(static_cast<std::int64_t>(ids[p]))
        .value(static_cast<std::int64_t>(q - p)).end_array();
    p = q;
  }
  w.end_array().end_object();
  return w.take();
}

Segment segment_from_json(std::string_view json) {
  try {
    const auto doc = nlohmann::json::parse(json);
    Segment seg;
    const auto mode = doc.at("mode").get<std::string>();
    if (mode != "short" && mode != "long") {
      throw Error(ErrorCode::kInvalidArgument, "segment mode must be short or long");
    }
    seg.mode = mode == "short" ? SegmentMode::kShortOriginalRope : SegmentMode::kLongRescaledRope;
    seg.window_len = doc.at("window_len").get<std::int64_t>();
    for (const auto& e : doc.at("entries")) {
      seg.entries.push_back(SegmentEntry{e.at("doc_id").get<std::string>(),
                                         e.at("start").get<std::int64_t>(),
                                         e.at("end").get<std::int64_t>()});
    }
    // Boundaries and framing are implied by the run-length encoded ids.
    seg.boundaries.assign(seg.entries.size(), -1);
    std::int64_t pos = 0;
    for (const auto& run : doc.at("doc_id_per_token")) {
      const auto id = run.at(0).get<std::int64_t>();
      const auto count = run.at(1).get<std::int64_t>();
      if (id >= 0 && static_cast<std::size_t>(id) < seg.entries.size()) {
        auto& b = seg.boundaries[static_cast<std::size_t>(id)];
        if (b < 0) {
          b = pos;
          seg.framing_tokens = static_cast<int>(count - seg.entries[static_cast<std::size_t>(id)].length());
        }
      }
      pos += count;
    }
    if (pos != seg.window_len) {
      throw Error(ErrorCode::kInvalidArgument, "run lengths do not cover the window");
    }
    return seg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad segment: ") + e.what());
  }
}

void write_plan(const PackingPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  for (const auto& seg : plan.segments) out << segment_to_json(seg) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<Segment> read_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<Segment> segments;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) segments.push_back(segment_from_json(line));
  }
  return segments;
}

std::vector<DocSpec> read_docs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<DocSpec> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      docs.push_back(DocSpec{doc.at("doc_id").get<std::string>(), doc.at("token_len").get<std::int64_t>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

}  // namespace ropeext
