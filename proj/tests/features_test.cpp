// tests/features_test.cpp

// Copyright 2026  The beamkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "beamkit/features.hpp"

namespace beamkit {
namespace {

Spectrogram Filled(Eigen::Index m, Eigen::Index t, const std::function<Complex(Eigen::Index, Eigen::Index, Eigen::Index)> &fn) {
  Spectrogram s(m, t, StftConfig{16, 4}, 16000);
  for (Eigen::Index c = 0; c < m; ++c)
    for (Eigen::Index i = 0; i < t; ++i)
      for (Eigen::Index f = 0; f < s.num_bins(); ++f) s(c, i, f) = fn(c, i, f);
  return s;
}

TEST(LogPower, UnitMagnitude) {
  const auto s = Filled(1, 3, [](auto, auto, auto f) { return std::polar(1.0, 0.3 * f); });
  const RealPlane lp = LogPower(s, 0);
  EXPECT_NEAR(lp.abs().maxCoeff(), 0.0, 1e-11);
}

TEST(LogPower, ZeroFloor) {
  const auto s = Filled(1, 2, [](auto, auto, auto) { return Complex(0.0); });
  const RealPlane lp = LogPower(s, 0);
  EXPECT_NEAR(lp(0, 0), std::log(1e-12), 1e-12);
  EXPECT_NEAR(lp(0, 0), -27.631, 1e-3);
}

TEST(LogPower, MagnitudeE) {
  const auto s = Filled(1, 2, [](auto, auto, auto f) { return std::polar(std::numbers::e, 1.0 * f); });
  EXPECT_NEAR(LogPower(s, 0)(1, 3), 2.0, 1e-9);
}

TEST(LogPower, ChannelOutOfRange) {
  const auto s = Filled(2, 2, [](auto, auto, auto) { return Complex(1.0); });
  EXPECT_THROW(LogPower(s, 2), Error);
}

TEST(Ipd, IdenticalChannels) {
  const auto s = Filled(3, 4, [](auto, auto t, auto f) {
    return Complex(std::sin(1.0 + t * 7.0 + f), std::cos(3.0 * t - f));
  });
  const FeatureTensor ft = IpdFeatures(s, 0);
  ASSERT_EQ(ft.num_planes(), 5);
  for (Eigen::Index p = 1; p < 5; p += 2) {
    EXPECT_NEAR((ft.planes[p] - 1.0).abs().maxCoeff(), 0.0, 1e-12);
    EXPECT_NEAR(ft.planes[p + 1].abs().maxCoeff(), 0.0, 1e-12);
  }
}

TEST(Ipd, QuarterTurn) {
  const auto s = Filled(2, 3, [](auto c, auto t, auto f) {
    const Complex ref = std::polar(1.0 + t, 0.4 * f);
    return c == 0 ? ref : ref * std::polar(1.0, std::numbers::pi / 2);
  });
  const FeatureTensor ft = IpdFeatures(s, 0);
  EXPECT_NEAR(ft.planes[1].abs().maxCoeff(), 0.0, 1e-12);
  EXPECT_NEAR((ft.planes[2] - 1.0).abs().maxCoeff(), 0.0, 1e-12);
}

TEST(Ipd, ZeroMagnitudeBinsHaveZeroPhase) {
  const auto s = Filled(2, 2, [](auto c, auto, auto) { return c == 0 ? Complex(0.0) : Complex(0.0, 1.0); });
  const FeatureTensor ft = IpdFeatures(s, 0);
  // arg(i) - 0 = pi/2
  EXPECT_NEAR(ft.planes[2](0, 0), 1.0, 1e-12);
  const auto both_zero = Filled(2, 2, [](auto, auto, auto) { return Complex(0.0); });
  const FeatureTensor z = IpdFeatures(both_zero, 1);
  EXPECT_EQ(z.planes[1](1, 1), 1.0);
  EXPECT_EQ(z.planes[2](1, 1), 0.0);
}

TEST(Ipd, PythagoreanIdentityAndLayout) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ph(-std::numbers::pi, std::numbers::pi);
  const auto s = Filled(4, 6, [&](auto, auto, auto) { return std::polar(1.0, ph(rng)); });
  const FeatureTensor ft = IpdFeatures(s, 2);
  ASSERT_EQ(ft.num_planes(), 1 + 2 * 3);
  EXPECT_EQ(ft.reference_channel, 2);
  for (Eigen::Index p = 1; p < ft.num_planes(); p += 2)
    EXPECT_LT((ft.planes[p].square() + ft.planes[p + 1].square() - 1.0).abs().maxCoeff(), 1e-9);
  // Plane 1/2 belong to channel 0.
  const double expected = std::arg(s(0, 1, 2)) - std::arg(s(2, 1, 2));
  EXPECT_NEAR(ft.planes[1](1, 2), std::cos(expected), 1e-12);
  EXPECT_NEAR(ft.planes[2](1, 2), std::sin(expected), 1e-12);
}

TEST(Ipd, InvariantToCommonPhaseAndLogPowerToPhase) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  auto s = Filled(3, 5, [&](auto, auto, auto) { return Complex(g(rng), g(rng)); });
  const FeatureTensor a = IpdFeatures(s, 0);
  s *= std::polar(1.0, 1.234);
  const FeatureTensor b = IpdFeatures(s, 0);
  for (Eigen::Index p = 0; p < a.num_planes(); ++p)
    EXPECT_LT((a.planes[p] - b.planes[p]).abs().maxCoeff(), 1e-9);
}

TEST(Ipd, NeedsTwoChannels) {
  const auto s = Filled(1, 2, [](auto, auto, auto) { return Complex(1.0); });
  try {
    IpdFeatures(s, 0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kTooFewChannels);
  }
}

}  // namespace
}  // namespace beamkit
