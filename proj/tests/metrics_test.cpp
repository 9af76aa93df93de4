// tests/metrics_test.cpp

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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "beamkit/metrics.hpp"

namespace beamkit {
namespace {

std::vector<double> Gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto &x : v) x = g(rng);
  return v;
}

Spectrogram RandomSpectrogram(Eigen::Index m, Eigen::Index t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Spectrogram s(m, t, StftConfig{16, 4}, 16000);
  for (auto &v : s.data()) v = {g(rng), g(rng)};
  return s;
}

TEST(SiSnr, IdentityAndScaleHitCap) {
  const auto ref = Gaussian(1000, 1);
  EXPECT_EQ(SiSnr(ref, ref), 100.0);
  std::vector<double> twice(ref);
  for (auto &x : twice) x *= 2.0;
  EXPECT_EQ(SiSnr(twice, ref), 100.0);
}

TEST(SiSnr, OrthogonalEqualPowerIsZero) {
  // Gram-Schmidt a random vector against ref and match its norm.
  const auto ref = Gaussian(1000, 2);
  auto n = Gaussian(1000, 3);
  double dot = 0, rr = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += n[i] * ref[i];
    rr += ref[i] * ref[i];
  }
  double nn = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    n[i] -= dot / rr * ref[i];
    nn += n[i] * n[i];
  }
  std::vector<double> est(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) est[i] = ref[i] + n[i] * std::sqrt(rr / nn);
  EXPECT_NEAR(SiSnr(est, ref), 0.0, 1e-9);
}

TEST(SiSnr, ScaleInvariant) {
  const auto ref = Gaussian(500, 4);
  auto est = Gaussian(500, 5);
  for (std::size_t i = 0; i < est.size(); ++i) est[i] += ref[i];
  const double base = SiSnr(est, ref);
  for (double c : {-3.0, 0.01, 7.0}) {
    std::vector<double> scaled(est);
    for (auto &x : scaled) x *= c;
    EXPECT_NEAR(SiSnr(scaled, ref), base, 1e-9);
  }
}

TEST(SiSnr, Errors) {
  const std::vector<double> zero(10, 0.0), a(10, 1.0), b(9, 1.0);
  EXPECT_THROW(SiSnr(a, zero), Error);
  EXPECT_THROW(SiSnr(a, b), Error);
  EXPECT_THROW(SiSnr(Waveform{RealMatrix::Ones(2, 10), 16000}, Waveform{RealMatrix::Ones(1, 10), 16000}), Error);
}

TEST(Snr, HandValue) {
  const std::vector<double> ref{1.0, -1.0, 1.0, -1.0};
  const std::vector<double> est{1.1, -1.1, 1.1, -1.1};
  EXPECT_NEAR(Snr(est, ref), 20.0, 1e-9);
}

TEST(MaskLoss, TrivialCases) {
  const Spectrogram y = RandomSpectrogram(3, 10, 6);
  EXPECT_EQ(MaskLoss(y, Mask::Constant(10, y.num_bins(), 1.0), y), 0.0);
  const Spectrogram target = RandomSpectrogram(3, 10, 7);
  double mean_abs = 0.0;
  for (const auto &v : target.data()) mean_abs += std::abs(v);
  mean_abs /= static_cast<double>(target.data().size());
  EXPECT_NEAR(MaskLoss(y, Mask::Constant(10, y.num_bins(), 0.0), target), mean_abs, 1e-12);
}

TEST(MaskLoss, MatchesBruteForce) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Spectrogram y = RandomSpectrogram(2 + trial, 7, 10 + trial), target = RandomSpectrogram(2 + trial, 7, 20 + trial);
    Mask m{RealPlane(7, y.num_bins())};
    for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values(i) = u(rng);
    double sum = 0.0;
    for (Eigen::Index c = 0; c < y.num_channels(); ++c)
      for (Eigen::Index t = 0; t < 7; ++t)
        for (Eigen::Index f = 0; f < y.num_bins(); ++f) {
          const Complex d = y(c, t, f) * m.values(t, f) - target(c, t, f);
          sum += std::sqrt(d.real() * d.real() + d.imag() * d.imag());
        }
    const double expect = sum / (static_cast<double>(y.num_channels()) * 7 * y.num_bins());
    EXPECT_NEAR(MaskLoss(y, m, target), expect, 1e-12);
    EXPECT_GE(MaskLoss(y, m, target), 0.0);
  }
}

TEST(MaskLoss, ShapeMismatch) {
  const Spectrogram y = RandomSpectrogram(2, 7, 30);
  EXPECT_THROW(MaskLoss(y, Mask::Constant(7, y.num_bins(), 1.0), RandomSpectrogram(3, 7, 31)), Error);
  EXPECT_THROW(MaskLoss(y, Mask::Constant(6, y.num_bins(), 1.0), y), Error);
}

TEST(EvalReport, JsonLine) {
  EvalReport r{"clip0", 12.5, 3.25, 11.0, std::nullopt};
  EXPECT_EQ(ToJsonLine(r),
            "{\"clip\":\"clip0\",\"si_snr_db\":12.5,\"si_snr_improvement_db\":3.25,\"snr_db\":11.0,\"mask_loss\":null}\n");
}

}  // namespace
}  // namespace beamkit
