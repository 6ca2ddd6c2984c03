// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/rescale.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "ropeext/error.hpp"
#include "ropeext/json_writer.hpp"

namespace ropeext {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int critical_or_zero(const RopeConfig& config) {
  try {
    return theoretical_critical_dimension(config).cosine_index;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateWindow) throw;
    return 0;  // every period already exceeds the window
  }
}

RescaleFactors make(RescaleMethod method, const RopeConfig& config, std::vector<double> lambdas) {
  RescaleFactors f;
  f.method = method;
  f.source_config = config;
  f.short_lambdas.assign(lambdas.size(), 1.0);
  f.lambdas = std::move(lambdas);
  f.critical_cos_index = critical_or_zero(config);
  return f;
}

}  // namespace

std::string_view to_string(RescaleMethod method) {
  switch (method) {
    case RescaleMethod::kPi: return "pi";
    case RescaleMethod::kNtk: return "ntk";
    case RescaleMethod::kYarn: return "yarn";
    case RescaleMethod::kSearched: return "searched";
    case RescaleMethod::kCustom: return "custom";
  }
  return "custom";
}

RescaleMethod parse_rescale_method(std::string_view tag) {
  if (tag == "pi") return RescaleMethod::kPi;
  if (tag == "ntk") return RescaleMethod::kNtk;
  if (tag == "yarn") return RescaleMethod::kYarn;
  if (tag == "searched") return RescaleMethod::kSearched;
  if (tag == "custom") return RescaleMethod::kCustom;
  throw Error(ErrorCode::kInvalidMethod, "unknown rescale method '" + std::string(tag) + "'");
}

void RescaleFactors::validate() const {
  source_config.validate();
  const auto half = static_cast<std::size_t>(source_config.half_dim());
  if (lambdas.size() != half) {
    throw Error(ErrorCode::kLengthMismatch, "factor vector length " + std::to_string(lambdas.size()) +
                                                " != d/2 = " + std::to_string(half));
  }
  if (!short_lambdas.empty() && short_lambdas.size() != half) {
    throw Error(ErrorCode::kLengthMismatch, "short factor vector length mismatch");
  }
  for (double l : lambdas) {
    if (!std::isfinite(l) || l < 1.0 - 1e-12) {
      throw Error(ErrorCode::kNonPositiveFactor, "factors must be finite and >= 1");
    }
  }
  if (critical_cos_index < 0 || critical_cos_index > static_cast<int>(half)) {
    throw Error(ErrorCode::kInvalidArgument, "critical_cos_index out of range");
  }
  if (method == RescaleMethod::kSearched) {
    const double s = source_config.extension_ratio();
    for (std::size_t i = static_cast<std::size_t>(critical_cos_index); i < half; ++i) {
      if (lambdas[i] < s * (1.0 - kRelTol) || lambdas[i] > 2.0 * s * (1.0 + kRelTol)) {
        throw Error(ErrorCode::kInvalidArgument, "searched factor outside [s, 2s]");
      }
      if (i > static_cast<std::size_t>(critical_cos_index) && lambdas[i] < lambdas[i - 1]) {
        throw Error(ErrorCode::kInvalidArgument, "searched factors must be non-decreasing");
      }
    }
  }
}

RescaleFactors pi_factors(const RopeConfig& config) {
  config.validate();
  return make(RescaleMethod::kPi, config,
              std::vector<double>(static_cast<std::size_t>(config.half_dim()),
                                  config.extension_ratio()));
}

double ntk_base(const RopeConfig& config) {
  config.validate();
  const double train_window = static_cast<double>(config.pretrained_len) / kTwoPi;
  if (!(train_window > 1.0)) {
    throw Error(ErrorCode::kDegenerateWindow, "pretrained_len must exceed 2*pi");
  }
  const double target_window = static_cast<double>(config.target_len) / kTwoPi;
  const double exponent = std::log(target_window) / std::log(train_window);
  return std::pow(config.theta_base, exponent);
}

RescaleFactors factors_from_base(const RopeConfig& config, double new_base) {
  config.validate();
  if (!(new_base >= config.theta_base)) {
    throw Error(ErrorCode::kBaseTooSmall, "new base must be >= theta_base");
  }
  const double ratio = new_base / config.theta_base;
  std::vector<double> lambdas(static_cast<std::size_t>(config.half_dim()));
  for (int i = 0; i < config.half_dim(); ++i) {
    lambdas[i] = std::pow(ratio, 2.0 * i / config.head_dim);
  }
  return make(RescaleMethod::kNtk, config, std::move(lambdas));
}

RescaleFactors yarn_factors(const RopeConfig& config, YarnParams params) {
  config.validate();
  if (!(params.alpha > 0.0) || !(params.alpha < params.beta)) {
    throw Error(ErrorCode::kInvalidGroupBounds, "require 0 < alpha < beta");
  }
  const double s = config.extension_ratio();
  const PeriodVector t = periods(config);
  std::vector<double> lambdas(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double rotations = static_cast<double>(config.pretrained_len) / t[i];
    if (rotations >= params.beta) {
      lambdas[i] = 1.0;
    } else if (rotations <= params.alpha) {
      lambdas[i] = s;
    } else {
      const double gamma = (rotations - params.alpha) / (params.beta - params.alpha);
      lambdas[i] = (1.0 - gamma) * s + gamma;
    }
  }
  return make(RescaleMethod::kYarn, config, std::move(lambdas));
}

std::vector<double> ntk_anchored_fill(int d_rcd_cos, double anchor) {
  if (d_rcd_cos < 1) {
    throw Error(ErrorCode::kInvalidArgument, "d_rcd_cos must be >= 1");
  }
  if (!(anchor >= 1.0)) {
    throw Error(ErrorCode::kNonPositiveFactor, "anchor must be >= 1");
  }
  std::vector<double> head(static_cast<std::size_t>(d_rcd_cos));
  for (int i = 0; i < d_rcd_cos; ++i) {
    head[i] = std::pow(anchor, static_cast<double>(i) / d_rcd_cos);
  }
  return head;
}

AngleVector rescaled_angles(const RescaleFactors& factors) {
  return rescaled_angles(factors.source_config, factors.lambdas);
}

OodReport ood_report(const RescaleFactors& factors) {
  return ood_report(factors.source_config, factors.lambdas, factors.critical_cos_index);
}

std::string factors_to_json(const RescaleFactors& factors) {
  factors.validate();
  const RopeConfig& c = factors.source_config;
  std::vector<double> short_lambdas = factors.short_lambdas;
  if (short_lambdas.empty()) short_lambdas.assign(factors.lambdas.size(), 1.0);
  JsonWriter w;
  w.begin_object()
      .key("method").value(to_string(factors.method))
      .key("theta_base").value(c.theta_base)
      .key("head_dim").value(c.head_dim)
      .key("pretrained_len").value(c.pretrained_len)
      .key("target_len").value(c.target_len)
      .key("critical_cos_index").value(factors.critical_cos_index)
      .key("long_factors").array(factors.lambdas)
      .key("short_factors").array(short_lambdas)
      .end_object();
  return w.take();
}

RescaleFactors factors_from_json(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
    RescaleFactors f;
    f.method = parse_rescale_method(doc.at("method").get<std::string>());
    f.source_config.theta_base = doc.at("theta_base").get<double>();
    f.source_config.head_dim = doc.at("head_dim").get<int>();
    f.source_config.pretrained_len = doc.at("pretrained_len").get<std::int64_t>();
    f.source_config.target_len = doc.at("target_len").get<std::int64_t>();
    f.critical_cos_index = doc.at("critical_cos_index").get<int>();
    f.lambdas = doc.at("long_factors").get<std::vector<double>>();
    if (doc.contains("short_factors")) {
      f.short_lambdas = doc.at("short_factors").get<std::vector<double>>();
    } else {
      f.short_lambdas.assign(f.lambdas.size(), 1.0);
    }
    f.validate();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad factor file: ") + e.what());
  }
}

void export_factors(const RescaleFactors& factors, const std::filesystem::path& path) {
  const std::string body = factors_to_json(factors);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  out << body << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

RescaleFactors import_factors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return factors_from_json(ss.str());
}

}  // namespace ropeext
