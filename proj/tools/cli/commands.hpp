// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "echo.hpp"
#include "ropeext/rope.hpp"

namespace ropeext::cli {

struct Context {
  RopeConfig config;
  std::string preset;  // empty when no preset was named
  std::uint64_t seed = 42;
  Format format = Format::kText;
  std::ostream& out;
  std::ostream& err;
};

struct AnalyzeOptions {
  std::optional<std::int64_t> decay_max_distance;
  std::string decay_out;
};

struct FactorsOptions {
  std::string method;
  double alpha = 1.0;
  double beta = 32.0;
  std::optional<double> ntk_base;
  std::string out;
};

struct SearchOptions {
  bool surrogate = false;
  std::string surrogate_spec;
  std::string evaluator_cmd;
  std::string evaluator_tcp;
  bool evaluator_concurrent = false;
  std::string corpus;
  bool inline_corpus = false;
  std::string mode = "NEEDLE_PPL";
  double timeout_s = 600.0;
  int population = 64;
  int iterations = 40;
  double mutation_prob = 0.3;
  int topk = 16;
  int jobs = 1;
  std::string out = "search_result.json";
  std::string factors_out = "searched_factors.json";
};

struct SynthOptions {
  std::string books_dir;
  int samples = 10;
  std::optional<std::int64_t> target_tokens;
  std::string out = "needle_corpus.jsonl";
};

struct PackOptions {
  std::string docs;
  std::optional<std::int64_t> window;
  std::vector<std::string> quotas;  // "max_len:fraction", max_len 0 or "inf" = unbounded
  std::optional<std::int64_t> total_tokens;
  int framing_tokens = 1;
  std::string out = "packing_plan.jsonl";
};

struct ExportOptions {
  std::string from;
  std::string out;
};

int cmd_analyze(const Context& ctx, const AnalyzeOptions& opts);
int cmd_factors(const Context& ctx, const FactorsOptions& opts);
int cmd_search(const Context& ctx, const SearchOptions& opts);
int cmd_synth(const Context& ctx, const SynthOptions& opts);
int cmd_pack(const Context& ctx, const PackOptions& opts);
int cmd_export(const Context& ctx, const ExportOptions& opts);

}  // namespace ropeext::cli
