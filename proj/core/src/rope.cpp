// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/rope.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "ropeext/error.hpp"

namespace ropeext {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Ceiling that treats values within kRelTol of an integer as that integer, so
// an exact power of the base is not pushed up by rounding noise.
int tolerant_ceil(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= kRelTol * std::max(1.0, std::abs(x))) {
    return static_cast<int>(nearest);
  }
  return static_cast<int>(std::ceil(x));
}

void require_len(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::kLengthMismatch, std::string(what) + " has length " +
                                                std::to_string(got) + ", expected " +
                                                std::to_string(want));
  }
}

}  // namespace

void RopeConfig::validate() const {
  if (!(theta_base > 1.0) || !std::isfinite(theta_base)) {
    throw Error(ErrorCode::kInvalidConfig, "theta_base must be finite and > 1");
  }
  if (head_dim < 2 || head_dim % 2 != 0) {
    throw Error(ErrorCode::kInvalidConfig, "head_dim must be an even positive integer");
  }
  if (pretrained_len < 1) {
    throw Error(ErrorCode::kInvalidConfig, "pretrained_len must be >= 1");
  }
  if (target_len < pretrained_len) {
    throw Error(ErrorCode::kInvalidConfig, "target_len must be >= pretrained_len");
  }
}

namespace presets {

RopeConfig phi3_mini(std::int64_t target_len) {
  return RopeConfig{10000.0, 96, 2048, target_len};
}

RopeConfig llama3_8b(std::int64_t target_len) {
  return RopeConfig{500000.0, 128, 8192, target_len};
}

RopeConfig by_name(std::string_view name, std::int64_t target_len) {
  if (name == "phi3-mini") return phi3_mini(target_len);
  if (name == "llama3-8b") return llama3_8b(target_len);
  throw Error(ErrorCode::kInvalidArgument, "unknown preset '" + std::string(name) + "'");
}

}  // namespace presets

AngleVector rotation_angles(const RopeConfig& config) {
  config.validate();
  AngleVector out;
  out.values.resize(static_cast<std::size_t>(config.half_dim()));
  for (int i = 0; i < config.half_dim(); ++i) {
    out.values[i] = std::pow(config.theta_base, -2.0 * i / config.head_dim);
  }
  return out;
}

PeriodVector periods(const AngleVector& angles) {
  PeriodVector out;
  out.values.reserve(angles.size());
  for (double a : angles.values) out.values.push_back(kTwoPi / a);
  return out;
}

PeriodVector periods(const RopeConfig& config) { return periods(rotation_angles(config)); }

double critical_position(const RopeConfig& config, int n_periods) {
  config.validate();
  if (n_periods < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_periods must be >= 1");
  }
  const double window = static_cast<double>(config.pretrained_len) / (kTwoPi * n_periods);
  if (!(window > 1.0)) {
    throw Error(ErrorCode::kDegenerateWindow,
                "pretrained_len / (2*pi*n) must exceed 1 (got " + std::to_string(window) + ")");
  }
  return 0.5 * config.head_dim * std::log(window) / std::log(config.theta_base);
}

int coverage_dimension(const RopeConfig& config, int n_periods) {
  // The boundary can land past the last pair when every period fits in the
  // window; clamp to d/2 (no dimension needs rescaling).
  const int raw = tolerant_ceil(critical_position(config, n_periods));
  return std::clamp(raw, 1, config.half_dim());
}

CriticalDim theoretical_critical_dimension(const RopeConfig& config) {
  const int cos_index = coverage_dimension(config, 1);
  return CriticalDim{2 * cos_index, cos_index};
}

AngleVector rescaled_angles(const RopeConfig& config, std::span<const double> lambdas) {
  AngleVector out = rotation_angles(config);
  require_len(lambdas.size(), out.size(), "factor vector");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) {
      throw Error(ErrorCode::kNonPositiveFactor,
                  "factor " + std::to_string(i) + " is not a positive finite value");
    }
    out.values[i] /= lambdas[i];
  }
  return out;
}

OodReport ood_report(const RopeConfig& config, std::span<const double> lambdas,
                     int critical_cos_index) {
  config.validate();
  require_len(lambdas.size(), static_cast<std::size_t>(config.half_dim()), "factor vector");
  const double s = config.extension_ratio();
  OodReport report;
  report.per_dim_ratio.reserve(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    report.per_dim_ratio.push_back(s / lambdas[i]);
    if (static_cast<int>(i) >= critical_cos_index && lambdas[i] < s * (1.0 - kRelTol)) {
      report.violating_dims.push_back(static_cast<int>(i));
    }
  }
  report.clean = report.violating_dims.empty();
  return report;
}

std::vector<double> apply_rope(std::span<const double> vec, std::int64_t position,
                               const AngleVector& angles) {
  require_len(vec.size(), 2 * angles.size(), "vector");
  std::vector<double> out(vec.size());
  const double pos = static_cast<double>(position);
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double phase = pos * angles[i];
    const double c = std::cos(phase);
    const double s = std::sin(phase);
    const double x = vec[2 * i];
    const double y = vec[2 * i + 1];
    out[2 * i] = c * x - s * y;
    out[2 * i + 1] = s * x + c * y;
  }
  return out;
}

double relative_attention_score(std::span<const double> q, std::span<const double> k,
                                std::int64_t m, std::int64_t n, const AngleVector& angles) {
  require_len(q.size(), 2 * angles.size(), "query");
  require_len(k.size(), 2 * angles.size(), "key");
  const std::vector<double> qm = apply_rope(q, m, angles);
  const std::vector<double> kn = apply_rope(k, n, angles);
  double dot = 0.0;
  for (std::size_t i = 0; i < qm.size(); ++i) dot += qm[i] * kn[i];
  return dot;
}

std::vector<double> decay_profile(const AngleVector& angles, std::int64_t max_distance) {
  if (max_distance < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_distance must be >= 1");
  }
  const std::size_t half = angles.size();
  std::vector<double> out(static_cast<std::size_t>(max_distance) + 1, 0.0);
  if (half == 0) return out;
  for (std::int64_t r = 0; r <= max_distance; ++r) {
    std::complex<double> partial{0.0, 0.0};
    double total = 0.0;
    for (std::size_t j = 0; j < half; ++j) {
      partial += std::polar(1.0, static_cast<double>(r) * angles[j]);
      total += std::abs(partial);
    }
    out[static_cast<std::size_t>(r)] = total / static_cast<double>(half);
  }
  return out;
}

}  // namespace ropeext
