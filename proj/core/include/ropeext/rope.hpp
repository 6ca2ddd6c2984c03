// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ropeext {

/// One context-extension problem: a RoPE parameterisation plus the window it
/// was pre-trained on and the window it should be extended to.
struct RopeConfig {
  double theta_base = 10000.0;
  int head_dim = 96;
  std::int64_t pretrained_len = 2048;
  std::int64_t target_len = 131072;

  /// Number of rotation pairs ("cosine dimensions"), d/2.
  int half_dim() const noexcept { return head_dim / 2; }
  /// s = L / L_train, the uniform lower bound on factors past the critical dimension.
  double extension_ratio() const noexcept {
    return static_cast<double>(target_len) / static_cast<double>(pretrained_len);
  }

  /// Throws Error(kInvalidConfig) when an invariant is broken.
  void validate() const;

  friend bool operator==(const RopeConfig&, const RopeConfig&) = default;
};

namespace presets {
RopeConfig phi3_mini(std::int64_t target_len = 131072);
RopeConfig llama3_8b(std::int64_t target_len = 131072);
/// Looks a preset up by its CLI name ("phi3-mini", "llama3-8b").
RopeConfig by_name(std::string_view name, std::int64_t target_len = 131072);
}  // namespace presets

/// Radians advanced per token, one entry per cosine dimension.
struct AngleVector {
  std::vector<double> values;
  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Tokens per full rotation, one entry per cosine dimension.
struct PeriodVector {
  std::vector<double> values;
  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// The first dimension whose period reaches the pre-trained window. Both the
/// full-dimension count (as usually quoted, e.g. 62 for Phi3-mini) and the
/// 0-based cosine index into factor vectors (31) are kept.
struct CriticalDim {
  int full_index = 0;
  int cosine_index = 0;

  friend bool operator==(const CriticalDim&, const CriticalDim&) = default;
};

struct OodReport {
  /// s / lambda_i: rotations seen over L under the rescaled angle relative to
  /// rotations seen over L_train originally. Values above 1 leave the trained range.
  std::vector<double> per_dim_ratio;
  std::vector<int> violating_dims;
  bool clean = true;
};

/// Relative tolerance used for every period / factor comparison.
inline constexpr double kRelTol = 1e-9;

AngleVector rotation_angles(const RopeConfig& config);
PeriodVector periods(const RopeConfig& config);
PeriodVector periods(const AngleVector& angles);

/// Un-rounded position of the critical boundary: (d/2) log_base(L_train / (2 pi n)).
double critical_position(const RopeConfig& config, int n_periods = 1);

CriticalDim theoretical_critical_dimension(const RopeConfig& config);

/// Cosine index of the first dimension whose period exceeds L_train / n_periods.
int coverage_dimension(const RopeConfig& config, int n_periods);

AngleVector rescaled_angles(const RopeConfig& config, std::span<const double> lambdas);

OodReport ood_report(const RopeConfig& config, std::span<const double> lambdas,
                     int critical_cos_index);

std::vector<double> apply_rope(std::span<const double> vec, std::int64_t position,
                               const AngleVector& angles);

double relative_attention_score(std::span<const double> q, std::span<const double> k,
                                std::int64_t m, std::int64_t n, const AngleVector& angles);

/// Upper-bound proxy for attention decay with relative distance r:
/// (1/(d/2)) * sum_{l=1..d/2} |sum_{j<l} exp(i r theta_j)|, for r in [0, max_distance].
/// Experimental diagnostic.
std::vector<double> decay_profile(const AngleVector& angles, std::int64_t max_distance);

}  // namespace ropeext
