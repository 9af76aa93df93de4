// beamkit/beamform.hpp

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

#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "beamkit/error.hpp"
#include "beamkit/linalg.hpp"
#include "beamkit/mask.hpp"
#include "beamkit/stft.hpp"

namespace beamkit {

// How the noise covariance is formed from the speech mask.
enum class CovMode {
  kComplement,  // (1 - M)-weighted average of Y Y^H
  kSubtract,    // time-average of Y Y^H minus the speech covariance
};

struct CovariancePair {
  std::vector<Eigen::MatrixXcd> speech;  // per frequency, Hermitian PSD
  std::vector<Eigen::MatrixXcd> noise;   // per frequency, Hermitian, loaded

  Eigen::Index num_bins() const { return static_cast<Eigen::Index>(speech.size()); }
};

struct BeamformerSolution {
  Eigen::MatrixXcd weights;  // F x M, row f holds w_f^T
  Eigen::Index reference = 0;
};

constexpr double kNoiseLoading = 1e-6;
constexpr double kMaskMassFloor = 1e-8;
constexpr double kTraceFloor = 1e-10;

// Mask-weighted spatial covariances per frequency. Where the speech mask has
// no mass, the speech covariance is zero and the noise covariance falls back
// to the plain time average; the same fallback covers a complement mask with
// no mass.
inline CovariancePair EstimateCovariances(const Spectrogram &y, const Mask &mask,
                                          CovMode mode = CovMode::kComplement) {
  CheckMaskShape(mask, y.num_frames(), y.num_bins());
  const Eigen::Index M = y.num_channels(), T = y.num_frames(), F = y.num_bins();
  CovariancePair cov;
  cov.speech.reserve(static_cast<std::size_t>(F));
  cov.noise.reserve(static_cast<std::size_t>(F));
  for (Eigen::Index f = 0; f < F; ++f) {
    const Eigen::MatrixXcd yf = y.Bin(f);
    const Eigen::VectorXd m = mask.values.col(f).matrix();
    const Eigen::MatrixXcd average = yf * yf.adjoint() / static_cast<double>(T);
    const double speech_mass = m.sum();
    Eigen::MatrixXcd phi_s, phi_n;
    if (speech_mass < kMaskMassFloor) {
      phi_s = Eigen::MatrixXcd::Zero(M, M);
      phi_n = average;
    } else {
      phi_s = yf * m.asDiagonal() * yf.adjoint() / speech_mass;
      if (mode == CovMode::kSubtract) {
        phi_n = average - phi_s;
      } else {
        const Eigen::VectorXd c = Eigen::VectorXd::Ones(T) - m;
        const double noise_mass = c.sum();
        phi_n = noise_mass < kMaskMassFloor ? average
                                            : Eigen::MatrixXcd(yf * c.asDiagonal() * yf.adjoint() / noise_mass);
      }
    }
    phi_s = Hermitize(phi_s);
    phi_n = Hermitize(phi_n);
    LoadDiagonal(&phi_n, kNoiseLoading);
    cov.speech.push_back(std::move(phi_s));
    cov.noise.push_back(std::move(phi_n));
  }
  return cov;
}

namespace detail {

// Phi_n^{-1} Phi_s by linear solve, with its trace.
struct MvdrNumerator {
  Eigen::MatrixXcd ratio;
  Complex trace;
};

inline MvdrNumerator ComputeNumerator(const Eigen::MatrixXcd &phi_s,
                                      const Eigen::MatrixXcd &phi_n) {
  if (!phi_s.allFinite() || !phi_n.allFinite())
    throw Error(Errc::kNonFinite, "covariance has non-finite entries");
  MvdrNumerator n;
  n.ratio = SolveHermitian(phi_n, phi_s);
  n.trace = n.ratio.trace();
  return n;
}

inline Eigen::VectorXcd WeightsFor(const MvdrNumerator &n, Eigen::Index reference) {
  if (!(std::abs(n.trace) >= kTraceFloor) || !n.ratio.allFinite())
    return Eigen::VectorXcd::Unit(n.ratio.rows(), reference);
  return n.ratio.col(reference) / n.trace;
}

inline void CheckReference(const CovariancePair &cov, Eigen::Index reference) {
  if (cov.speech.empty()) throw Error(Errc::kInvalidArgument, "empty covariance pair");
  if (reference < 0 || reference >= cov.speech[0].rows())
    throw Error(Errc::kInvalidArgument, "reference channel out of range");
}

}  // namespace detail

// w_f = Phi_n^{-1} Phi_s u / trace(Phi_n^{-1} Phi_s). Frequencies whose trace
// falls below 1e-10 pass the reference channel through (w = u).
inline BeamformerSolution MvdrWeights(const CovariancePair &cov, Eigen::Index reference) {
  detail::CheckReference(cov, reference);
  const Eigen::Index F = cov.num_bins(), M = cov.speech[0].rows();
  BeamformerSolution sol;
  sol.reference = reference;
  sol.weights.resize(F, M);
  for (Eigen::Index f = 0; f < F; ++f) {
    const auto n = detail::ComputeNumerator(cov.speech[static_cast<std::size_t>(f)],
                                            cov.noise[static_cast<std::size_t>(f)]);
    sol.weights.row(f) = detail::WeightsFor(n, reference).transpose();
  }
  return sol;
}

// Solutions for every reference channel; the per-frequency solve and trace
// are shared, only the selected column changes.
inline std::vector<BeamformerSolution> MvdrWeightsAllReferences(const CovariancePair &cov) {
  detail::CheckReference(cov, 0);
  const Eigen::Index F = cov.num_bins(), M = cov.speech[0].rows();
  std::vector<BeamformerSolution> sols(static_cast<std::size_t>(M));
  for (Eigen::Index r = 0; r < M; ++r) {
    sols[static_cast<std::size_t>(r)].reference = r;
    sols[static_cast<std::size_t>(r)].weights.resize(F, M);
  }
  for (Eigen::Index f = 0; f < F; ++f) {
    const auto n = detail::ComputeNumerator(cov.speech[static_cast<std::size_t>(f)],
                                            cov.noise[static_cast<std::size_t>(f)]);
    for (Eigen::Index r = 0; r < M; ++r)
      sols[static_cast<std::size_t>(r)].weights.row(f) = detail::WeightsFor(n, r).transpose();
  }
  return sols;
}

// BF_{t,f} = w_f^H Y_{t,f}
inline Spectrogram Apply(const Spectrogram &y, const BeamformerSolution &sol) {
  if (sol.weights.rows() != y.num_bins() || sol.weights.cols() != y.num_channels())
    throw Error(Errc::kShapeMismatch, "beamformer weights do not match spectrogram");
  Spectrogram out(1, y.num_frames(), y.config(), y.sample_rate_hz());
  for (Eigen::Index t = 0; t < y.num_frames(); ++t) {
    for (Eigen::Index f = 0; f < y.num_bins(); ++f) {
      Complex acc = 0.0;
      for (Eigen::Index m = 0; m < y.num_channels(); ++m)
        acc += std::conj(sol.weights(f, m)) * y(m, t, f);
      out(0, t, f) = acc;
    }
  }
  return out;
}

// Channel r of the result is the beamformer output with reference r.
inline Spectrogram ApplyStack(const Spectrogram &y, const std::vector<BeamformerSolution> &sols) {
  Spectrogram out(static_cast<Eigen::Index>(sols.size()), y.num_frames(), y.config(),
                  y.sample_rate_hz());
  for (std::size_t r = 0; r < sols.size(); ++r) {
    const Spectrogram bf = Apply(y, sols[r]);
    for (Eigen::Index t = 0; t < y.num_frames(); ++t)
      for (Eigen::Index f = 0; f < y.num_bins(); ++f)
        out(static_cast<Eigen::Index>(r), t, f) = bf(0, t, f);
  }
  return out;
}

inline Spectrogram StackReferenceChannels(const Spectrogram &y, const CovariancePair &cov) {
  return ApplyStack(y, MvdrWeightsAllReferences(cov));
}

}  // namespace beamkit
