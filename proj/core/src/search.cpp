// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

#include <json.hpp>

#include "ropeext/json_writer.hpp"

namespace ropeext {

namespace {

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (*a.fitness != *b.fitness) return *a.fitness < *b.fitness;
  if (a.d_rcd_cos != b.d_rcd_cos) return a.d_rcd_cos < b.d_rcd_cos;
  return std::lexicographical_compare(a.lambdas.begin(), a.lambdas.end(), b.lambdas.begin(),
                                      b.lambdas.end());
}

// Factor vectors that agree to 12 significant digits count as duplicates.
std::string canonical_key(const Candidate& c) {
  std::string key = std::to_string(c.d_rcd_cos);
  char buf[32];
  for (double l : c.lambdas) {
    std::snprintf(buf, sizeof(buf), ";%.12e", l);
    key += buf;
  }
  return key;
}

bool close_rel(double a, double b) {
  return std::abs(a - b) <= kRelTol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::string error_message(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown evaluator exception";
  }
}

}  // namespace

void SearchParams::validate() const {
  if (population_size < 1) throw Error(ErrorCode::kInvalidArgument, "population_size must be >= 1");
  if (iterations < 0) throw Error(ErrorCode::kInvalidArgument, "iterations must be >= 0");
  if (topk < 1 || topk > population_size) {
    throw Error(ErrorCode::kInvalidArgument, "topk must be in [1, population_size]");
  }
  if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mutation_prob must be in [0, 1]");
  }
}

CandidateRange candidate_range(const RopeConfig& config) {
  CandidateRange r{coverage_dimension(config, 10),
                   theoretical_critical_dimension(config).cosine_index};
  // Keep at least one searched dimension even when every period fits the window.
  r.last = std::min(r.last, config.half_dim() - 1);
  if (r.first > r.last) {
    throw Error(ErrorCode::kEmptyRange, "no candidate critical dimensions for this config");
  }
  return r;
}

Candidate make_candidate(int d_rcd_cos, std::span<const double> tail, const RopeConfig& config) {
  if (d_rcd_cos < 1 || d_rcd_cos >= config.half_dim() ||
      tail.size() != static_cast<std::size_t>(config.half_dim() - d_rcd_cos)) {
    throw Error(ErrorCode::kLengthMismatch, "tail does not match d_rcd_cos");
  }
  Candidate c;
  c.d_rcd_cos = d_rcd_cos;
  c.lambdas = ntk_anchored_fill(d_rcd_cos, tail.front());
  c.lambdas.insert(c.lambdas.end(), tail.begin(), tail.end());
  return c;
}

Candidate make_candidate(int d_rcd_cos, double tail_value, const RopeConfig& config) {
  const std::vector<double> tail(static_cast<std::size_t>(config.half_dim() - d_rcd_cos),
                                 tail_value);
  return make_candidate(d_rcd_cos, tail, config);
}

std::vector<Candidate> init_population(const RopeConfig& config, const SearchParams& params,
                                       Rng& rng) {
  config.validate();
  params.validate();
  const CandidateRange range = candidate_range(config);
  const double s = config.extension_ratio();
  std::vector<Candidate> population;
  population.reserve(static_cast<std::size_t>(params.population_size));
  int d_rcd = range.first;
  while (static_cast<int>(population.size()) < params.population_size) {
    population.push_back(make_candidate(d_rcd, rng.uniform(s, 2.0 * s), config));
    d_rcd = d_rcd == range.last ? range.first : d_rcd + 1;
  }
  return population;
}

std::vector<std::string> validate_candidate(const Candidate& c, const RopeConfig& config) {
  std::vector<std::string> violations;
  const int half = config.half_dim();
  if (c.lambdas.size() != static_cast<std::size_t>(half)) {
    violations.push_back("lambdas length " + std::to_string(c.lambdas.size()) + " != d/2");
    return violations;
  }
  const CandidateRange range = candidate_range(config);
  if (c.d_rcd_cos < range.first || c.d_rcd_cos > range.last) {
    violations.push_back("d_rcd_cos " + std::to_string(c.d_rcd_cos) + " outside [" +
                         std::to_string(range.first) + ", " + std::to_string(range.last) + "]");
    return violations;
  }
  const double s = config.extension_ratio();
  for (int i = c.d_rcd_cos; i < half; ++i) {
    const double l = c.lambdas[i];
    if (l < s * (1.0 - kRelTol) || l > 2.0 * s * (1.0 + kRelTol)) {
      violations.push_back("lambda[" + std::to_string(i) + "]=" + format_double(l) +
                           " outside [s, 2s]");
    }
    if (i > c.d_rcd_cos && l < c.lambdas[i - 1] * (1.0 - kRelTol)) {
      violations.push_back("tail decreases at " + std::to_string(i));
    }
  }
  if (c.lambdas[c.d_rcd_cos] >= 1.0) {
    const std::vector<double> head = ntk_anchored_fill(c.d_rcd_cos, c.lambdas[c.d_rcd_cos]);
    for (int i = 0; i < c.d_rcd_cos; ++i) {
      if (!close_rel(head[i], c.lambdas[i])) {
        violations.push_back("lambda[" + std::to_string(i) + "] differs from anchored fill");
      }
    }
  }
  if (c.fitness && !(*c.fitness >= 0.0)) violations.push_back("negative fitness");
  return violations;
}

Candidate mutate(const Candidate& c, const SearchParams& params, const RopeConfig& config,
                 Rng& rng) {
  const double s = config.extension_ratio();
  std::vector<double> tail(c.lambdas.begin() + c.d_rcd_cos, c.lambdas.end());
  for (double& l : tail) {
    if (rng.bernoulli(params.mutation_prob)) l = rng.uniform(s, 2.0 * s);
  }
  // Project back onto the non-decreasing set with a running maximum.
  for (std::size_t i = 1; i < tail.size(); ++i) tail[i] = std::max(tail[i], tail[i - 1]);
  return make_candidate(c.d_rcd_cos, tail, config);
}

std::vector<Candidate> update_topk(std::span<const Candidate> population, int k) {
  if (k < 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 0");
  for (const Candidate& c : population) {
    if (!c.fitness) throw Error(ErrorCode::kUnevaluatedCandidate, "candidate without fitness");
  }
  std::vector<Candidate> sorted(population.begin(), population.end());
  std::stable_sort(sorted.begin(), sorted.end(), candidate_less);
  if (static_cast<std::size_t>(k) < sorted.size()) sorted.resize(static_cast<std::size_t>(k));
  return sorted;
}

namespace {

class SearchState {
 public:
  SearchState(const RopeConfig& config, FitnessEvaluator& evaluator, const SearchParams& params,
              const EvolveOptions& options)
      : config_(config), evaluator_(evaluator), options_(options) {
    result_.config = config;
    result_.params = params;
    result_.seed = params.seed;
  }

  bool remember(const Candidate& c) { return seen_.insert(canonical_key(c)).second; }

  // Scores the batch in place. Results are keyed by index so the outcome does
  // not depend on thread interleaving.
  void evaluate(std::vector<Candidate>& batch) {
    const std::size_t n = batch.size();
    std::vector<double> scores(n, 0.0);
    std::vector<std::exception_ptr> errors(n);
    auto score_one = [&](std::size_t i) {
      try {
        const double f = evaluator_.evaluate(batch[i].lambdas, config_);
        if (!(f >= 0.0) || !std::isfinite(f)) {
          throw Error(ErrorCode::kEvaluatorFailure, "fitness must be finite and >= 0");
        }
        scores[i] = f;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };

    const int jobs = evaluator_.thread_safe() ? std::max(1, options_.jobs) : 1;
    if (jobs == 1 || n < 2) {
      for (std::size_t i = 0; i < n; ++i) {
        score_one(i);
        if (errors[i]) break;
      }
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> workers;
      const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
      for (std::size_t t = 0; t < count; ++t) {
        workers.emplace_back([&] {
          for (std::size_t i = next++; i < n; i = next++) score_one(i);
        });
      }
      for (auto& w : workers) w.join();
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (errors[i]) {
        throw SearchAborted("evaluator failed: " + error_message(errors[i]), result_);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      batch[i].fitness = scores[i];
      ++result_.evaluations;
      if (!result_.best.fitness || candidate_less(batch[i], result_.best)) {
        result_.best = batch[i];
      }
      if (options_.on_evaluated) options_.on_evaluated(batch[i]);
    }
  }

  void record_history() { result_.history.push_back(*result_.best.fitness); }

  SearchResult& result() { return result_; }

 private:
  const RopeConfig& config_;
  FitnessEvaluator& evaluator_;
  const EvolveOptions& options_;
  SearchResult result_;
  std::set<std::string> seen_;
};

}  // namespace

SearchResult evolve(const RopeConfig& config, FitnessEvaluator& evaluator,
                    const SearchParams& params, const EvolveOptions& options) {
  config.validate();
  params.validate();
  Rng rng(params.seed);
  SearchState state(config, evaluator, params, options);

  std::vector<Candidate> population;
  for (Candidate& c : init_population(config, params, rng)) {
    if (state.remember(c)) population.push_back(std::move(c));
  }
  state.evaluate(population);
  state.record_history();

  constexpr int kMaxAttempts = 10;
  for (int iter = 0; iter < params.iterations; ++iter) {
    const int k = std::min<int>(params.topk, static_cast<int>(population.size()));
    std::vector<Candidate> elites = update_topk(population, k);

    std::vector<Candidate> offspring;
    const int wanted = params.population_size - k;
    for (int j = 0; j < wanted; ++j) {
      const Candidate& parent = elites[static_cast<std::size_t>(j % k)];
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Candidate child = mutate(parent, params, config, rng);
        if (state.remember(child)) {
          offspring.push_back(std::move(child));
          break;
        }
      }
    }
    state.evaluate(offspring);

    // Elites carry forward unchanged; if deduplication starved the offspring
    // pool the next population is simply smaller.
    population = std::move(elites);
    population.insert(population.end(), std::make_move_iterator(offspring.begin()),
                      std::make_move_iterator(offspring.end()));
    state.record_history();
  }
  return std::move(state.result());
}

RescaleFactors to_factors(const SearchResult& result) {
  RescaleFactors f;
  f.method = RescaleMethod::kSearched;
  f.source_config = result.config;
  f.lambdas = result.best.lambdas;
  f.short_lambdas.assign(f.lambdas.size(), 1.0);
  f.critical_cos_index = result.best.d_rcd_cos;
  f.validate();
  return f;
}

std::string search_result_to_json(const SearchResult& r) {
  JsonWriter w;
  w.begin_object();
  w.key("config").begin_object()
      .key("theta_base").value(r.config.theta_base)
      .key("head_dim").value(r.config.head_dim)
      .key("pretrained_len").value(r.config.pretrained_len)
      .key("target_len").value(r.config.target_len)
      .end_object();
  w.key("params").begin_object()
      .key("population_size").value(r.params.population_size)
      .key("iterations").value(r.params.iterations)
      .key("mutation_prob").value(r.params.mutation_prob)
      .key("topk").value(r.params.topk)
      .key("seed").value(r.params.seed)
      .end_object();
  w.key("best").begin_object()
      .key("d_rcd_cos").value(r.best.d_rcd_cos)
      .key("lambdas").array(r.best.lambdas)
      .key("fitness");
  if (r.best.fitness) {
    w.value(*r.best.fitness);
  } else {
    w.null();
  }
  w.end_object();
  w.key("history").array(r.history);
  w.key("evaluations").value(r.evaluations);
  w.key("seed").value(r.seed);
  w.end_object();
  return w.take();
}

SearchResult search_result_from_json(std::string_view json) {
  try {
    const auto doc = nlohmann::json::parse(json);
    SearchResult r;
    const auto& c = doc.at("config");
    r.config = RopeConfig{c.at("theta_base").get<double>(), c.at("head_dim").get<int>(),
                          c.at("pretrained_len").get<std::int64_t>(),
                          c.at("target_len").get<std::int64_t>()};
    const auto& p = doc.at("params");
    r.params.population_size = p.at("population_size").get<int>();
    r.params.iterations = p.at("iterations").get<int>();
    r.params.mutation_prob = p.at("mutation_prob").get<double>();
    r.params.topk = p.at("topk").get<int>();
    r.params.seed = p.at("seed").get<std::uint64_t>();
    const auto& b = doc.at("best");
    r.best.d_rcd_cos = b.at("d_rcd_cos").get<int>();
    r.best.lambdas = b.at("lambdas").get<std::vector<double>>();
    if (!b.at("fitness").is_null()) r.best.fitness = b.at("fitness").get<double>();
    r.history = doc.at("history").get<std::vector<double>>();
    r.evaluations = doc.at("evaluations").get<std::int64_t>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad search result: ") + e.what());
  }
}

}  // namespace ropeext
