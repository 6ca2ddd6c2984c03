// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ropeext/error.hpp"
#include "ropeext/rescale.hpp"
#include "ropeext/rng.hpp"
#include "ropeext/rope.hpp"

namespace ropeext {

/// One search individual. Dimensions below d_rcd_cos are always the NTK fill
/// anchored at lambdas[d_rcd_cos]; only the tail is searched.
struct Candidate {
  int d_rcd_cos = 0;
  std::vector<double> lambdas;
  std::optional<double> fitness;  // lower is better

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct SearchParams {
  int population_size = 64;
  int iterations = 40;
  double mutation_prob = 0.3;
  int topk = 16;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SearchResult {
  RopeConfig config;
  SearchParams params;
  Candidate best;
  /// history[0] is the best fitness after initialisation, then one entry per iteration.
  std::vector<double> history;
  std::int64_t evaluations = 0;
  std::uint64_t seed = 0;
};

/// Fitness oracle. Implementations that are not safe for concurrent calls keep
/// thread_safe() false and the engine evaluates them serially.
class FitnessEvaluator {
 public:
  virtual ~FitnessEvaluator() = default;
  virtual double evaluate(std::span<const double> lambdas, const RopeConfig& config) = 0;
  virtual bool thread_safe() const { return false; }
};

/// Raised when the evaluator fails mid-search; carries what was found so far.
class SearchAborted : public Error {
 public:
  SearchAborted(const std::string& message, SearchResult partial)
      : Error(ErrorCode::kEvaluatorFailure, message), partial_(std::move(partial)) {}

  const SearchResult& partial() const noexcept { return partial_; }

 private:
  SearchResult partial_;
};

struct CandidateRange {
  int first = 0;  // dimension with ten theoretical periods in the window
  int last = 0;   // theoretical critical cosine index
};

/// Range of real-critical-dimension candidates, [coverage(cfg,10), tcd].
CandidateRange candidate_range(const RopeConfig& config);

/// Builds a feasible candidate with a constant tail.
Candidate make_candidate(int d_rcd_cos, double tail_value, const RopeConfig& config);
/// Builds a feasible candidate from an explicit tail (head filled from tail[0]).
Candidate make_candidate(int d_rcd_cos, std::span<const double> tail, const RopeConfig& config);

std::vector<Candidate> init_population(const RopeConfig& config, const SearchParams& params,
                                       Rng& rng);

/// Empty iff every candidate invariant holds to 1e-9 relative tolerance.
std::vector<std::string> validate_candidate(const Candidate& c, const RopeConfig& config);

Candidate mutate(const Candidate& c, const SearchParams& params, const RopeConfig& config,
                 Rng& rng);

/// k best by (fitness, d_rcd_cos, lambdas lexicographic).
std::vector<Candidate> update_topk(std::span<const Candidate> population, int k);

struct EvolveOptions {
  /// Worker threads for fitness evaluation; ignored for serial evaluators.
  int jobs = 1;
  /// Called on the search thread for every candidate after it is scored.
  std::function<void(const Candidate&)> on_evaluated;
};

SearchResult evolve(const RopeConfig& config, FitnessEvaluator& evaluator,
                    const SearchParams& params, const EvolveOptions& options = {});

/// The best candidate as a SEARCHED factor vector, critical index = d_rcd_cos.
RescaleFactors to_factors(const SearchResult& result);

std::string search_result_to_json(const SearchResult& result);
SearchResult search_result_from_json(std::string_view json);

}  // namespace ropeext
