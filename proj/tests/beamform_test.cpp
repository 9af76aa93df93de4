// tests/beamform_test.cpp

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

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "beamkit/beamform.hpp"
#include "support/oracles.hpp"

namespace beamkit {
namespace {

using testing::RandomComplexVector;
using testing::RandomHpd;

CovariancePair SingleBin(const Eigen::MatrixXcd &s, const Eigen::MatrixXcd &n) {
  return CovariancePair{{s}, {n}};
}

Spectrogram RandomSpectrogram(Eigen::Index m, Eigen::Index t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Spectrogram s(m, t, StftConfig{16, 4}, 16000);
  for (auto &v : s.data()) v = {g(rng), g(rng)};
  return s;
}

Mask RandomMask(Eigen::Index t, Eigen::Index f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mask m{RealPlane(t, f)};
  for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values(i) = u(rng);
  return m;
}

TEST(Mvdr, WorkedExample) {
  Eigen::MatrixXcd s(2, 2);
  s << 1.0, 1.0, 1.0, 1.0;
  const auto sol = MvdrWeights(SingleBin(s, Eigen::MatrixXcd::Identity(2, 2)), 0);
  EXPECT_NEAR(std::abs(sol.weights(0, 0) - 0.5), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(sol.weights(0, 1) - 0.5), 0.0, 1e-12);
}

TEST(Mvdr, MatchesExplicitInverse) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = 2 + trial % 4;
    const Eigen::MatrixXcd s = RandomHpd(m, rng), n = RandomHpd(m, rng);
    const Eigen::MatrixXcd ratio = n.fullPivLu().inverse() * s;
    const Complex tr = ratio.trace();
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto sol = MvdrWeights(SingleBin(s, n), r);
      const Eigen::VectorXcd expect = ratio.col(r) / tr;
      EXPECT_LT((sol.weights.row(0).transpose() - expect).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(Mvdr, DistortionlessForRankOneSpeech) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = 2 + trial % 7;
    const Eigen::VectorXcd d = RandomComplexVector(m, rng);
    const Eigen::MatrixXcd s = 2.5 * d * d.adjoint();
    const Eigen::MatrixXcd n = RandomHpd(m, rng);
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::VectorXcd w = MvdrWeights(SingleBin(s, n), r).weights.row(0).transpose();
      EXPECT_NEAR(std::abs(w.dot(d) - d(r)), 0.0, 1e-9 * std::abs(d(r)) + 1e-12);
    }
  }
}

TEST(Mvdr, ZeroSpeechPassesReferenceThrough) {
  std::mt19937_64 rng(3);
  const auto sol = MvdrWeights(SingleBin(Eigen::MatrixXcd::Zero(3, 3), RandomHpd(3, rng)), 2);
  EXPECT_EQ(sol.weights.row(0).transpose(), Eigen::VectorXcd::Unit(3, 2));
}

TEST(Mvdr, SingularNoiseStillFinite) {
  Eigen::MatrixXcd n = Eigen::MatrixXcd::Zero(2, 2);
  n(0, 0) = 1.0;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Identity(2, 2);
  const auto sol = MvdrWeights(SingleBin(s, n), 0);
  EXPECT_TRUE(sol.weights.allFinite());
}

TEST(Mvdr, Errors) {
  std::mt19937_64 rng(4);
  const auto cov = SingleBin(RandomHpd(2, rng), RandomHpd(2, rng));
  EXPECT_THROW(MvdrWeights(cov, 2), Error);
  EXPECT_THROW(MvdrWeights(cov, -1), Error);
  EXPECT_THROW(MvdrWeights(CovariancePair{}, 0), Error);
  auto bad = cov;
  bad.speech[0](0, 0) = std::nan("");
  try {
    MvdrWeights(bad, 0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kNonFinite);
  }
}

TEST(Covariance, ComplementMatchesLoopOracle) {
  const Spectrogram y = RandomSpectrogram(3, 30, 5);
  const Mask mask = RandomMask(30, y.num_bins(), 6);
  const CovariancePair cov = EstimateCovariances(y, mask, CovMode::kComplement);
  for (Eigen::Index f = 0; f < y.num_bins(); ++f) {
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(3, 3), n = s;
    double ms = 0.0, mn = 0.0;
    for (Eigen::Index t = 0; t < 30; ++t) {
      const double w = mask.values(t, f);
      ms += w;
      mn += 1.0 - w;
      for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) {
          const Complex outer = y(i, t, f) * std::conj(y(j, t, f));
          s(i, j) += w * outer;
          n(i, j) += (1.0 - w) * outer;
        }
    }
    s /= ms;
    n /= mn;
    n.diagonal().array() += 1e-6 * n.trace().real() / 3.0;
    EXPECT_LT((cov.speech[f] - s).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((cov.noise[f] - n).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(HermitianError(cov.speech[f]), 0.0);
    EXPECT_GE(MinEigenvalue(cov.speech[f]), -1e-12);
  }
}

TEST(Covariance, SubtractModeSumsToAverage) {
  const Spectrogram y = RandomSpectrogram(4, 25, 7);
  const Mask mask = RandomMask(25, y.num_bins(), 8);
  const CovariancePair cov = EstimateCovariances(y, mask, CovMode::kSubtract);
  for (Eigen::Index f = 0; f < y.num_bins(); ++f) {
    const Eigen::MatrixXcd yf = y.Bin(f);
    const Eigen::MatrixXcd avg = yf * yf.adjoint() / 25.0;
    Eigen::MatrixXcd unloaded = avg - cov.speech[f];
    const double loading = 1e-6 * std::abs(unloaded.trace().real()) / 4.0;
    Eigen::MatrixXcd sum = cov.speech[f] + cov.noise[f];
    sum.diagonal().array() -= loading;
    EXPECT_LT((sum - avg).cwiseAbs().maxCoeff(), 1e-12 * avg.cwiseAbs().maxCoeff());
  }
}

TEST(Covariance, AverageSplitsByMeanMask) {
  // (1/T) sum Y Y^H = wbar * Phi_s + (1 - wbar) * Phi_n(complement), unloaded.
  const Spectrogram y = RandomSpectrogram(3, 40, 23);
  Mask mask = RandomMask(40, y.num_bins(), 24);
  for (Eigen::Index f = 0; f < y.num_bins(); ++f) {
    const double wbar = mask.values.col(f).mean();
    const CovariancePair cov = EstimateCovariances(y, mask, CovMode::kComplement);
    Eigen::MatrixXcd n = cov.noise[f];
    // Undo the loading: the unloaded trace t satisfies t + 3 * 1e-6 * t / 3 = trace(loaded).
    const double t = n.trace().real() / (1.0 + 1e-6);
    n.diagonal().array() -= 1e-6 * t / 3.0;
    const Eigen::MatrixXcd yf = y.Bin(f);
    const Eigen::MatrixXcd avg = yf * yf.adjoint() / 40.0;
    EXPECT_LT((wbar * cov.speech[f] + (1.0 - wbar) * n - avg).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Covariance, ZeroMaskFallsBack) {
  const Spectrogram y = RandomSpectrogram(2, 10, 9);
  const CovariancePair cov = EstimateCovariances(y, Mask::Constant(10, y.num_bins(), 0.0));
  for (Eigen::Index f = 0; f < y.num_bins(); ++f) {
    EXPECT_EQ(cov.speech[f].cwiseAbs().maxCoeff(), 0.0);
    const Eigen::MatrixXcd yf = y.Bin(f);
    Eigen::MatrixXcd avg = yf * yf.adjoint() / 10.0;
    avg.diagonal().array() += 1e-6 * avg.trace().real() / 2.0;
    EXPECT_LT((cov.noise[f] - avg).cwiseAbs().maxCoeff(), 1e-12);
  }
  const auto sol = MvdrWeights(cov, 1);
  for (Eigen::Index f = 0; f < y.num_bins(); ++f)
    EXPECT_EQ(sol.weights.row(f).transpose(), Eigen::VectorXcd::Unit(2, 1));
}

TEST(Covariance, FullMaskComplementFallsBack) {
  const Spectrogram y = RandomSpectrogram(2, 10, 10);
  const CovariancePair cov = EstimateCovariances(y, Mask::Constant(10, y.num_bins(), 1.0));
  for (Eigen::Index f = 0; f < y.num_bins(); ++f) EXPECT_TRUE(cov.noise[f].allFinite());
}

TEST(Covariance, MaskShapeChecked) {
  const Spectrogram y = RandomSpectrogram(2, 10, 11);
  try {
    EstimateCovariances(y, Mask::Constant(9, y.num_bins(), 0.5));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kShapeMismatch);
  }
}

TEST(Apply, MatchesHermitianInnerProduct) {
  const Spectrogram y = RandomSpectrogram(3, 12, 12);
  std::mt19937_64 rng(13);
  BeamformerSolution sol{Eigen::MatrixXcd(y.num_bins(), 3), 0};
  for (Eigen::Index f = 0; f < y.num_bins(); ++f) sol.weights.row(f) = RandomComplexVector(3, rng).transpose();
  const Spectrogram out = Apply(y, sol);
  ASSERT_EQ(out.num_channels(), 1);
  for (Eigen::Index t = 0; t < 12; ++t)
    for (Eigen::Index f = 0; f < y.num_bins(); ++f) {
      Complex e = 0.0;
      for (Eigen::Index m = 0; m < 3; ++m) e += std::conj(sol.weights(f, m)) * y(m, t, f);
      EXPECT_NEAR(std::abs(out(0, t, f) - e), 0.0, 1e-12);
    }
}

TEST(Apply, Linear) {
  const Spectrogram a = RandomSpectrogram(3, 12, 14), b = RandomSpectrogram(3, 12, 15);
  const auto sol = MvdrWeights(EstimateCovariances(a, RandomMask(12, a.num_bins(), 16)), 0);
  Spectrogram sum = a;
  for (std::size_t i = 0; i < sum.data().size(); ++i) sum.data()[i] = 2.0 * a.data()[i] - 0.5 * b.data()[i];
  const Spectrogram oa = Apply(a, sol), ob = Apply(b, sol), os = Apply(sum, sol);
  for (std::size_t i = 0; i < os.data().size(); ++i)
    EXPECT_NEAR(std::abs(os.data()[i] - (2.0 * oa.data()[i] - 0.5 * ob.data()[i])), 0.0, 1e-10);
}

TEST(Apply, ShapeMismatch) {
  const Spectrogram y = RandomSpectrogram(3, 12, 17);
  BeamformerSolution sol{Eigen::MatrixXcd::Zero(y.num_bins(), 2), 0};
  EXPECT_THROW(Apply(y, sol), Error);
}

TEST(Stack, ChannelsMatchIndividualSolves) {
  const Spectrogram y = RandomSpectrogram(4, 20, 18);
  const CovariancePair cov = EstimateCovariances(y, RandomMask(20, y.num_bins(), 19));
  const Spectrogram stacked = StackReferenceChannels(y, cov);
  ASSERT_EQ(stacked.num_channels(), 4);
  for (Eigen::Index r = 0; r < 4; ++r) {
    const Spectrogram single = Apply(y, MvdrWeights(cov, r));
    for (Eigen::Index t = 0; t < 20; ++t)
      for (Eigen::Index f = 0; f < y.num_bins(); ++f) EXPECT_EQ(stacked(r, t, f), single(0, t, f));
  }
}

TEST(Stack, SingleChannelIsIdentity) {
  const Spectrogram y = RandomSpectrogram(1, 15, 20);
  const Spectrogram stacked = StackReferenceChannels(y, EstimateCovariances(y, RandomMask(15, y.num_bins(), 21)));
  for (std::size_t i = 0; i < y.data().size(); ++i) EXPECT_NEAR(std::abs(stacked.data()[i] - y.data()[i]), 0.0, 1e-12);
}

TEST(Mvdr, ImprovesSnrForPlantedSource) {
  // One directional source plus spatially white noise; the oracle power
  // ratio mask drives the covariances.
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g;
  const Eigen::Index m = 4, frames = 200;
  Spectrogram speech(m, frames, StftConfig{16, 4}, 16000), noise = speech, y = speech;
  const Eigen::Index bins = speech.num_bins();
  std::vector<Eigen::VectorXcd> steer;
  for (Eigen::Index f = 0; f < bins; ++f) steer.push_back(RandomComplexVector(m, rng));
  Mask mask{RealPlane(frames, bins)};
  for (Eigen::Index t = 0; t < frames; ++t)
    for (Eigen::Index f = 0; f < bins; ++f) {
      const Complex s(g(rng), g(rng));
      double ps = 0.0, pn = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        speech(i, t, f) = s * steer[f](i);
        noise(i, t, f) = Complex(g(rng), g(rng));
        y(i, t, f) = speech(i, t, f) + noise(i, t, f);
      }
      ps = std::norm(speech(0, t, f));
      pn = std::norm(noise(0, t, f));
      mask.values(t, f) = ps / (ps + pn);
    }
  const auto sol = MvdrWeights(EstimateCovariances(y, mask), 0);
  const Spectrogram os = Apply(speech, sol), on = Apply(noise, sol);
  double in_s = 0, in_n = 0, out_s = 0, out_n = 0;
  for (Eigen::Index t = 0; t < frames; ++t)
    for (Eigen::Index f = 0; f < bins; ++f) {
      in_s += std::norm(speech(0, t, f));
      in_n += std::norm(noise(0, t, f));
      out_s += std::norm(os(0, t, f));
      out_n += std::norm(on(0, t, f));
    }
  const double gain_db = 10.0 * std::log10(out_s / out_n) - 10.0 * std::log10(in_s / in_n);
  EXPECT_GT(gain_db, 3.0);
}

}  // namespace
}  // namespace beamkit
