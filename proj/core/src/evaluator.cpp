// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ropeext/json_writer.hpp"

namespace ropeext {

EvaluatorClient::EvaluatorClient(std::unique_ptr<FrameChannel> channel)
    : channel_(std::move(channel)), reader_([this] { read_loop(); }) {}

EvaluatorClient::~EvaluatorClient() {
  stop_ = true;
  reader_.join();
  fail_all(ErrorCode::kDisconnected, "client shut down");
}

void EvaluatorClient::fail_all(ErrorCode code, const std::string& message) {
  std::lock_guard lock(mu_);
  for (auto& [id, promise] : pending_) {
    promise.set_exception(std::make_exception_ptr(Error(code, message + " (request " + id + ")")));
  }
  pending_.clear();
}

void EvaluatorClient::read_loop() {
  std::string frame;
  while (!stop_) {
    ReadStatus status;
    try {
      status = channel_->receive(frame, std::chrono::milliseconds(50));
    } catch (const FrameError& e) {
      // Cannot tell which request an unreadable frame belonged to.
      fail_all(ErrorCode::kMalformedFrame, e.what());
      continue;
    } catch (const Error& e) {
      status = ReadStatus::kClosed;
    }
    if (status == ReadStatus::kIdle) continue;
    if (status == ReadStatus::kClosed) {
      {
        std::lock_guard lock(mu_);
        closed_ = true;
      }
      fail_all(ErrorCode::kDisconnected, "evaluator closed the connection");
      return;
    }
    EvalResponse resp;
    try {
      resp = decode_response(frame);
    } catch (const FrameError& e) {
      fail_all(ErrorCode::kMalformedFrame, e.what());
      continue;
    }
    std::lock_guard lock(mu_);
    auto it = pending_.find(resp.request_id);
    if (it == pending_.end()) continue;  // unknown or timed-out id
    if (resp.error) {
      it->second.set_exception(std::make_exception_ptr(
          Error(ErrorCode::kEvaluatorFailure, "evaluator reported: " + *resp.error)));
    } else {
      it->second.set_value(std::move(resp));
    }
    pending_.erase(it);
  }
}

std::future<EvalResponse> EvaluatorClient::submit(const EvalRequest& req) {
  const std::string frame = encode_request(req);
  std::future<EvalResponse> fut;
  {
    std::lock_guard lock(mu_);
    if (closed_) throw Error(ErrorCode::kDisconnected, "evaluator connection is closed");
    auto [it, inserted] = pending_.try_emplace(req.request_id);
    if (!inserted) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate in-flight request_id " + req.request_id);
    }
    fut = it->second.get_future();
  }
  try {
    std::lock_guard lock(write_mu_);
    channel_->send(frame);
  } catch (const Error&) {
    std::lock_guard lock(mu_);
    pending_.erase(req.request_id);
    throw;
  }
  return fut;
}

EvalResponse EvaluatorClient::call(const EvalRequest& req, std::chrono::milliseconds timeout) {
  std::future<EvalResponse> fut = submit(req);
  if (fut.wait_for(timeout) != std::future_status::ready) {
    std::lock_guard lock(mu_);
    pending_.erase(req.request_id);
    throw Error(ErrorCode::kTimeout, "no response for " + req.request_id + " within " +
                                         std::to_string(timeout.count()) + " ms");
  }
  return fut.get();
}

EvalResponse remote_evaluate(EvaluatorClient& client, const EvalRequest& req,
                             std::chrono::milliseconds timeout) {
  return client.call(req, timeout);
}

EvalResponse remote_evaluate(const Endpoint& endpoint, const EvalRequest& req,
                             std::chrono::milliseconds timeout) {
  EvaluatorClient client(open_channel(endpoint));
  return client.call(req, timeout);
}

RemoteEvaluator::RemoteEvaluator(std::unique_ptr<FrameChannel> channel, CorpusRef corpus,
                                 EvalMode mode, std::chrono::milliseconds timeout, bool concurrent)
    : client_(std::move(channel)),
      corpus_(std::move(corpus)),
      mode_(mode),
      timeout_(timeout),
      concurrent_(concurrent) {}

double RemoteEvaluator::evaluate(std::span<const double> lambdas, const RopeConfig& config) {
  EvalRequest req;
  req.request_id = "req-" + std::to_string(next_id_++);
  req.config = config;
  req.lambdas.assign(lambdas.begin(), lambdas.end());
  req.corpus_ref = corpus_;
  req.mode = mode_;
  return client_.call(req, timeout_).fitness;
}

double surrogate_evaluate(std::span<const double> lambdas, const RopeConfig& config,
                          const SurrogateSpec& spec) {
  if (lambdas.size() != spec.hidden_target.size() ||
      lambdas.size() != static_cast<std::size_t>(config.half_dim())) {
    throw Error(ErrorCode::kLengthMismatch, "surrogate target and lambdas differ in length");
  }
  const double s = config.extension_ratio();
  const int critical = theoretical_critical_dimension(config).cosine_index;
  double fit = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double diff = lambdas[i] - spec.hidden_target[i];
    fit += diff * diff;
  }
  double penalty = 0.0;
  for (std::size_t i = static_cast<std::size_t>(critical); i < lambdas.size(); ++i) {
    const double gap = std::max(0.0, s - lambdas[i]);
    penalty += gap * gap;
  }
  return fit + spec.ood_penalty_weight * penalty;
}

SurrogateSpec default_surrogate(const RopeConfig& config) {
  const CandidateRange range = candidate_range(config);
  const int d_rcd = (range.first + range.last) / 2;
  const double s = config.extension_ratio();
  const int n = config.half_dim() - d_rcd;
  std::vector<double> tail(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
    tail[i] = s * (1.1 + 0.8 * t);
  }
  SurrogateSpec spec;
  spec.d_rcd_cos = d_rcd;
  spec.hidden_target = make_candidate(d_rcd, tail, config).lambdas;
  return spec;
}

std::string surrogate_to_json(const SurrogateSpec& spec) {
  JsonWriter w;
  w.begin_object()
      .key("d_rcd_cos").value(spec.d_rcd_cos)
      .key("hidden_target").array(spec.hidden_target)
      .key("ood_penalty_weight").value(spec.ood_penalty_weight)
      .end_object();
  return w.take();
}

SurrogateSpec surrogate_from_json(std::string_view json) {
  try {
    const auto doc = nlohmann::json::parse(json);
    SurrogateSpec spec;
    spec.d_rcd_cos = doc.at("d_rcd_cos").get<int>();
    spec.hidden_target = doc.at("hidden_target").get<std::vector<double>>();
    spec.ood_penalty_weight = doc.value("ood_penalty_weight", 100.0);
    if (!(spec.ood_penalty_weight > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "ood_penalty_weight must be positive");
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad surrogate spec: ") + e.what());
  }
}

SurrogateSpec load_surrogate(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return surrogate_from_json(ss.str());
}

}  // namespace ropeext
