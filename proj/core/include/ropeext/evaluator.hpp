// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ropeext/protocol.hpp"
#include "ropeext/search.hpp"
#include "ropeext/transport.hpp"

namespace ropeext {

/// Protocol client. Any number of threads may submit; a single reader thread
/// routes responses to their request by request_id, so responses may arrive
/// in any order. Frames with an unknown id are dropped.
class EvaluatorClient {
 public:
  explicit EvaluatorClient(std::unique_ptr<FrameChannel> channel);
  ~EvaluatorClient();
  EvaluatorClient(const EvaluatorClient&) = delete;
  EvaluatorClient& operator=(const EvaluatorClient&) = delete;

  /// The future yields the response, or throws Error with kEvaluatorFailure
  /// (error frame), kMalformedFrame or kDisconnected.
  std::future<EvalResponse> submit(const EvalRequest& req);

  /// submit() + wait; throws Error(kTimeout) if nothing arrives in time.
  EvalResponse call(const EvalRequest& req, std::chrono::milliseconds timeout);

 private:
  void read_loop();
  void fail_all(ErrorCode code, const std::string& message);

  std::unique_ptr<FrameChannel> channel_;
  std::mutex write_mu_;
  std::mutex mu_;
  std::map<std::string, std::promise<EvalResponse>> pending_;
  bool closed_ = false;
  std::atomic<bool> stop_{false};
  std::thread reader_;
};

EvalResponse remote_evaluate(EvaluatorClient& client, const EvalRequest& req,
                             std::chrono::milliseconds timeout);
/// Opens a fresh channel to `endpoint` for a single request.
EvalResponse remote_evaluate(const Endpoint& endpoint, const EvalRequest& req,
                             std::chrono::milliseconds timeout);

/// Fitness backed by an external evaluator process.
class RemoteEvaluator final : public FitnessEvaluator {
 public:
  RemoteEvaluator(std::unique_ptr<FrameChannel> channel, CorpusRef corpus, EvalMode mode,
                  std::chrono::milliseconds timeout, bool concurrent = false);

  double evaluate(std::span<const double> lambdas, const RopeConfig& config) override;
  bool thread_safe() const override { return concurrent_; }

 private:
  EvaluatorClient client_;
  CorpusRef corpus_;
  EvalMode mode_;
  std::chrono::milliseconds timeout_;
  bool concurrent_;
  std::atomic<std::uint64_t> next_id_{0};
};

/// Test objective with a known optimum inside the feasible region.
struct SurrogateSpec {
  int d_rcd_cos = 0;
  std::vector<double> hidden_target;
  double ood_penalty_weight = 100.0;
};

/// sum_i (lambda_i - target_i)^2 + w * sum_{i >= tcd} max(0, s - lambda_i)^2
double surrogate_evaluate(std::span<const double> lambdas, const RopeConfig& config,
                          const SurrogateSpec& spec);

/// Target at the middle of the candidate range with a tail rising linearly
/// from 1.1 s to 1.9 s.
SurrogateSpec default_surrogate(const RopeConfig& config);

std::string surrogate_to_json(const SurrogateSpec& spec);
SurrogateSpec surrogate_from_json(std::string_view json);
SurrogateSpec load_surrogate(const std::filesystem::path& path);

class SurrogateEvaluator final : public FitnessEvaluator {
 public:
  explicit SurrogateEvaluator(SurrogateSpec spec) : spec_(std::move(spec)) {}
  double evaluate(std::span<const double> lambdas, const RopeConfig& config) override {
    return surrogate_evaluate(lambdas, config, spec_);
  }
  bool thread_safe() const override { return true; }

 private:
  SurrogateSpec spec_;
};

}  // namespace ropeext
