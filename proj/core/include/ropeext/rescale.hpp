// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ropeext/rope.hpp"

namespace ropeext {

enum class RescaleMethod { kPi, kNtk, kYarn, kSearched, kCustom };

std::string_view to_string(RescaleMethod method);
/// Accepts the lower-case tags used in factor files ("pi", "ntk", ...).
RescaleMethod parse_rescale_method(std::string_view tag);

/// Per-cosine-dimension divisors applied to the rotation angles.
struct RescaleFactors {
  RescaleMethod method = RescaleMethod::kCustom;
  std::vector<double> lambdas;
  /// Index from which this vector claims every lambda_i >= L / L_train.
  int critical_cos_index = 0;
  RopeConfig source_config;
  /// Factors used inside the pre-trained window; all ones unless set.
  std::vector<double> short_lambdas;

  /// Throws on length mismatch, factors below 1, or (for kSearched) a tail
  /// that is decreasing or outside [s, 2s].
  void validate() const;
};

/// Group boundaries for YaRN, in periods-per-pretrained-window units.
struct YarnParams {
  double alpha = 1.0;
  double beta = 32.0;
};

RescaleFactors pi_factors(const RopeConfig& config);

/// Smallest base satisfying base >= theta^(log_{L_train/2pi}(L/2pi)).
double ntk_base(const RopeConfig& config);

/// lambda_i = (new_base / theta_base)^(2i/d).
RescaleFactors factors_from_base(const RopeConfig& config, double new_base);

RescaleFactors yarn_factors(const RopeConfig& config, YarnParams params = {});

/// Head factors for dims below d_rcd when theta_{d_rcd} is pinned to anchor:
/// lambda_i = anchor^(i / d_rcd_cos), i in [0, d_rcd_cos).
std::vector<double> ntk_anchored_fill(int d_rcd_cos, double anchor);

AngleVector rescaled_angles(const RescaleFactors& factors);
OodReport ood_report(const RescaleFactors& factors);

std::string factors_to_json(const RescaleFactors& factors);
RescaleFactors factors_from_json(std::string_view json);

/// Writes the factor file; throws Error(kIoError) if the path cannot be written.
void export_factors(const RescaleFactors& factors, const std::filesystem::path& path);
RescaleFactors import_factors(const std::filesystem::path& path);

}  // namespace ropeext
