// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/protocol.hpp"

#include <numeric>

#include <json.hpp>

#include "ropeext/json_writer.hpp"

namespace ropeext {

namespace {

using nlohmann::json;

std::string finish(std::string body) {
  if (body.size() + 1 > kMaxFrameBytes) {
    throw Error(ErrorCode::kInvalidArgument, "frame exceeds 64 MiB");
  }
  body.push_back('\n');
  return body;
}

json parse_frame(std::string_view frame) {
  if (frame.size() > kMaxFrameBytes) throw FrameError("frame exceeds 64 MiB", kMaxFrameBytes);
  if (!frame.empty() && frame.back() == '\n') frame.remove_suffix(1);
  if (frame.find('\n') != std::string_view::npos) {
    throw FrameError("embedded newline in frame", frame.find('\n'));
  }
  try {
    json doc = json::parse(frame);
    if (!doc.is_object()) throw FrameError("frame is not a JSON object", 0);
    return doc;
  } catch (const json::parse_error& e) {
    // nlohmann counts bytes from 1.
    throw FrameError(std::string("invalid JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
}

template <typename Fn>
auto with_structure_errors(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw FrameError(std::string("bad frame structure: ") + e.what(), 0);
  } catch (const FrameError&) {
    throw;
  } catch (const Error& e) {
    throw FrameError(std::string("bad frame content: ") + e.what(), 0);
  }
}

}  // namespace

std::string_view to_string(EvalMode mode) {
  return mode == EvalMode::kNeedlePpl ? "NEEDLE_PPL" : "FULL_PPL";
}

EvalMode parse_eval_mode(std::string_view s) {
  if (s == "NEEDLE_PPL" || s == "needle") return EvalMode::kNeedlePpl;
  if (s == "FULL_PPL" || s == "full") return EvalMode::kFullPpl;
  throw Error(ErrorCode::kInvalidArgument, "unknown eval mode '" + std::string(s) + "'");
}

std::string encode_request(const EvalRequest& req) {
  if (req.lambdas.size() != static_cast<std::size_t>(req.config.half_dim())) {
    throw Error(ErrorCode::kLengthMismatch, "lambdas length does not match head_dim/2");
  }
  JsonWriter w;
  w.begin_object()
      .key("request_id").value(req.request_id)
      .key("theta_base").value(req.config.theta_base)
      .key("head_dim").value(req.config.head_dim)
      .key("pretrained_len").value(req.config.pretrained_len)
      .key("target_len").value(req.config.target_len)
      .key("lambdas").array(req.lambdas)
      .key("corpus_ref");
  if (const auto* path = std::get_if<std::string>(&req.corpus_ref)) {
    w.value(*path);
  } else {
    w.begin_array();
    for (const auto& s : std::get<std::vector<NeedleSample>>(req.corpus_ref)) {
      w.raw(sample_to_json(s));
    }
    w.end_array();
  }
  w.key("mode").value(to_string(req.mode)).end_object();
  return finish(w.take());
}

std::string encode_response(const EvalResponse& resp) {
  JsonWriter w;
  w.begin_object().key("request_id").value(resp.request_id).key("fitness");
  if (resp.error) {
    w.null();
  } else {
    w.value(resp.fitness);
  }
  w.key("per_sample").array(resp.per_sample).key("error");
  if (resp.error) {
    w.value(*resp.error);
  } else {
    w.null();
  }
  w.end_object();
  return finish(w.take());
}

EvalRequest decode_request(std::string_view frame) {
  const json doc = parse_frame(frame);
  return with_structure_errors([&] {
    EvalRequest req;
    req.request_id = doc.at("request_id").get<std::string>();
    req.config.theta_base = doc.at("theta_base").get<double>();
    req.config.head_dim = doc.at("head_dim").get<int>();
    req.config.pretrained_len = doc.at("pretrained_len").get<std::int64_t>();
    req.config.target_len = doc.at("target_len").get<std::int64_t>();
    req.lambdas = doc.at("lambdas").get<std::vector<double>>();
    const json& corpus = doc.at("corpus_ref");
    if (corpus.is_string()) {
      req.corpus_ref = corpus.get<std::string>();
    } else {
      std::vector<NeedleSample> samples;
      for (const json& s : corpus) samples.push_back(sample_from_json(s.dump()));
      req.corpus_ref = std::move(samples);
    }
    req.mode = parse_eval_mode(doc.at("mode").get<std::string>());
    if (req.lambdas.size() != static_cast<std::size_t>(req.config.half_dim())) {
      throw FrameError("lambdas length does not match head_dim/2", 0);
    }
    return req;
  });
}

EvalResponse decode_response(std::string_view frame) {
  const json doc = parse_frame(frame);
  return with_structure_errors([&] {
    EvalResponse resp;
    resp.request_id = doc.at("request_id").get<std::string>();
    if (doc.contains("error") && !doc.at("error").is_null()) {
      resp.error = doc.at("error").get<std::string>();
    }
    const json& fitness = doc.at("fitness");
    if (fitness.is_null()) {
      if (!resp.error) throw FrameError("fitness is null without an error", 0);
    } else {
      resp.fitness = fitness.get<double>();
    }
    if (doc.contains("per_sample")) resp.per_sample = doc.at("per_sample").get<std::vector<double>>();
    return resp;
  });
}

EvalResponse make_response(std::string request_id, std::vector<double> per_sample) {
  EvalResponse resp;
  resp.request_id = std::move(request_id);
  if (!per_sample.empty()) {
    resp.fitness = std::accumulate(per_sample.begin(), per_sample.end(), 0.0) /
                   static_cast<double>(per_sample.size());
  }
  resp.per_sample = std::move(per_sample);
  return resp;
}

EvalResponse make_error_response(std::string request_id, std::string message) {
  EvalResponse resp;
  resp.request_id = std::move(request_id);
  resp.error = std::move(message);
  return resp;
}

}  // namespace ropeext
