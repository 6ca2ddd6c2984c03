// Copyright 2026 The ropeext Authors
// SPDX-License-Identifier: Apache-2.0

#include "ropeext/rescale.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ropeext/error.hpp"
#include "ropeext/rng.hpp"

namespace ropeext {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

TEST(PiFactorsTest, ConstantRatio) {
  const RescaleFactors f = pi_factors(presets::phi3_mini());
  ASSERT_EQ(f.lambdas.size(), 48u);
  for (double l : f.lambdas) EXPECT_EQ(l, 64.0);
  EXPECT_EQ(f.method, RescaleMethod::kPi);
  EXPECT_EQ(f.critical_cos_index, 31);
  EXPECT_TRUE(ood_report(f).clean);
}

TEST(NtkTest, Phi3BaseAndFactors) {
  const RopeConfig c = presets::phi3_mini();
  EXPECT_NEAR(ntk_base(c) / 7494912.8896, 1.0, 1e-9);
  const RescaleFactors f = factors_from_base(c, ntk_base(c));
  EXPECT_DOUBLE_EQ(f.lambdas[0], 1.0);
  EXPECT_NEAR(f.lambdas[31], 71.88198956624723, 1e-8);
  EXPECT_NEAR(f.lambdas[47], 652.9435242, 1e-5);
  EXPECT_TRUE(ood_report(f).clean);
}

TEST(NtkTest, Llama3IsCleanAtCriticalDim) {
  const RopeConfig c = presets::llama3_8b();
  EXPECT_NEAR(ntk_base(c) / 79760692.22, 1.0, 1e-9);
  const RescaleFactors f = factors_from_base(c, ntk_base(c));
  EXPECT_NEAR(f.lambdas[35], 16.02015049, 1e-6);
  EXPECT_TRUE(ood_report(f).clean);
}

TEST(NtkTest, BaseTooSmall) {
  const RopeConfig c = presets::phi3_mini();
  EXPECT_EQ(code_of([&] { factors_from_base(c, 5000.0); }), ErrorCode::kBaseTooSmall);
  const RescaleFactors same = factors_from_base(c, c.theta_base);
  for (double l : same.lambdas) EXPECT_DOUBLE_EQ(l, 1.0);
}

TEST(NtkTest, FactorsAreNonDecreasingAndAtLeastOne) {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const RopeConfig c = testing::random_config(rng);
    const RescaleFactors f = factors_from_base(c, ntk_base(c));
    ASSERT_GE(f.lambdas[0], 1.0);
    for (std::size_t i = 1; i < f.lambdas.size(); ++i) ASSERT_GE(f.lambdas[i], f.lambdas[i - 1]);
  }
}

TEST(YarnTest, MatchesDirectRampEvaluation) {
  const RopeConfig c = presets::phi3_mini();
  const RescaleFactors f = yarn_factors(c);
  for (int i = 0; i < 48; ++i) {
    const double period = 2.0 * std::numbers::pi * std::pow(10000.0, 2.0 * i / 96.0);
    const double r = 2048.0 / period;
    double expected;
    if (r < 1.0) {
      expected = 64.0;
    } else if (r > 32.0) {
      expected = 1.0;
    } else {
      const double g = (r - 1.0) / 31.0;
      expected = (1.0 - g) * 64.0 + g;
    }
    EXPECT_NEAR(f.lambdas[i], expected, 1e-9 * expected) << i;
  }
  // Periods past the critical dimension never fit once in the window: pure PI there.
  for (int i = 31; i < 48; ++i) EXPECT_DOUBLE_EQ(f.lambdas[i], 64.0);
  EXPECT_DOUBLE_EQ(f.lambdas[0], 1.0);
  EXPECT_TRUE(ood_report(f).clean);
}

TEST(YarnTest, BoundsAndMonotone) {
  Rng rng(37);
  for (int trial = 0; trial < 300; ++trial) {
    const RopeConfig c = testing::random_config(rng);
    const double s = c.extension_ratio();
    const RescaleFactors f = yarn_factors(c, {rng.uniform(0.5, 2.0), rng.uniform(8.0, 64.0)});
    for (std::size_t i = 0; i < f.lambdas.size(); ++i) {
      ASSERT_GE(f.lambdas[i], 1.0 - 1e-12);
      ASSERT_LE(f.lambdas[i], s * (1 + 1e-12));
      if (i > 0) ASSERT_GE(f.lambdas[i], f.lambdas[i - 1] - 1e-12);
    }
  }
}

TEST(YarnTest, InvalidGroupBounds) {
  const RopeConfig c = presets::phi3_mini();
  EXPECT_EQ(code_of([&] { yarn_factors(c, {32.0, 1.0}); }), ErrorCode::kInvalidGroupBounds);
  EXPECT_EQ(code_of([&] { yarn_factors(c, {4.0, 4.0}); }), ErrorCode::kInvalidGroupBounds);
  EXPECT_EQ(code_of([&] { yarn_factors(c, {0.0, 4.0}); }), ErrorCode::kInvalidGroupBounds);
}

TEST(AnchoredFillTest, GeometricUpToAnchor) {
  const auto head = ntk_anchored_fill(4, 16.0);
  ASSERT_EQ(head.size(), 4u);
  EXPECT_DOUBLE_EQ(head[0], 1.0);
  EXPECT_DOUBLE_EQ(head[1], 2.0);
  EXPECT_DOUBLE_EQ(head[2], 4.0);
  EXPECT_DOUBLE_EQ(head[3], 8.0);
  EXPECT_THROW(ntk_anchored_fill(0, 16.0), Error);
  EXPECT_THROW(ntk_anchored_fill(3, 0.5), Error);
}

TEST(RescaleMethodTest, TagsRoundTrip) {
  for (auto m : {RescaleMethod::kPi, RescaleMethod::kNtk, RescaleMethod::kYarn,
                 RescaleMethod::kSearched, RescaleMethod::kCustom}) {
    EXPECT_EQ(parse_rescale_method(to_string(m)), m);
  }
  EXPECT_EQ(code_of([] { parse_rescale_method("dynamic"); }), ErrorCode::kInvalidMethod);
}

TEST(RescaleFactorsTest, ValidateRejectsBadVectors) {
  RescaleFactors f = pi_factors(presets::phi3_mini());
  f.lambdas.pop_back();
  EXPECT_EQ(code_of([&] { f.validate(); }), ErrorCode::kLengthMismatch);

  f = pi_factors(presets::phi3_mini());
  f.lambdas[3] = 0.5;
  EXPECT_EQ(code_of([&] { f.validate(); }), ErrorCode::kNonPositiveFactor);

  f = pi_factors(presets::phi3_mini());
  f.method = RescaleMethod::kSearched;
  f.lambdas[40] = 63.0;
  EXPECT_THROW(f.validate(), Error);
  f.lambdas[40] = 129.0;
  EXPECT_THROW(f.validate(), Error);
  f.lambdas[40] = 100.0;
  EXPECT_THROW(f.validate(), Error);  // decreasing at 41
  f.lambdas[41] = 100.0;
  f.lambdas[42] = 100.0;
  EXPECT_THROW(f.validate(), Error);  // still decreasing at 43
}

TEST(FactorFileTest, RoundTripIsBitExact) {
  Rng rng(41);
  const auto dir = std::filesystem::temp_directory_path() / "ropeext_rescale_test";
  std::filesystem::create_directories(dir);
  for (int trial = 0; trial < 50; ++trial) {
    const RopeConfig c = testing::random_config(rng);
    RescaleFactors f = trial % 2 ? yarn_factors(c) : factors_from_base(c, ntk_base(c) * 1.5);
    for (double& l : f.short_lambdas) l = rng.uniform(1.0, 3.0);
    const auto path = dir / ("f" + std::to_string(trial) + ".json");
    export_factors(f, path);
    const RescaleFactors g = import_factors(path);
    ASSERT_EQ(g.method, f.method);
    ASSERT_EQ(g.source_config, f.source_config);
    ASSERT_EQ(g.critical_cos_index, f.critical_cos_index);
    ASSERT_EQ(g.lambdas, f.lambdas);
    ASSERT_EQ(g.short_lambdas, f.short_lambdas);
    ASSERT_EQ(factors_to_json(g), factors_to_json(f));
  }
  std::filesystem::remove_all(dir);
}

TEST(FactorFileTest, KeyOrderAndMissingShortFactors) {
  const std::string json = factors_to_json(pi_factors(RopeConfig{10000.0, 4, 64, 128}));
  EXPECT_EQ(json,
            "{\"method\":\"pi\",\"theta_base\":10000,\"head_dim\":4,\"pretrained_len\":64,"
            "\"target_len\":128,\"critical_cos_index\":1,\"long_factors\":[2,2],"
            "\"short_factors\":[1,1]}");
  const RescaleFactors f = factors_from_json(
      R"({"method":"custom","theta_base":10000,"head_dim":4,"pretrained_len":64,)"
      R"("target_len":128,"critical_cos_index":1,"long_factors":[1,3]})");
  EXPECT_EQ(f.short_lambdas, (std::vector<double>{1.0, 1.0}));
  EXPECT_THROW(factors_from_json("{\"method\":\"pi\"}"), Error);
  EXPECT_EQ(code_of([] { import_factors("/nonexistent/ropeext/factors.json"); }),
            ErrorCode::kIoError);
  EXPECT_EQ(code_of([&] { export_factors(pi_factors(presets::phi3_mini()), "/nonexistent/x/y.json"); }),
            ErrorCode::kIoError);
}

}  // namespace
}  // namespace ropeext
