// beamkit/cacgmm.hpp

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "beamkit/error.hpp"
#include "beamkit/features.hpp"
#include "beamkit/linalg.hpp"
#include "beamkit/mask.hpp"
#include "beamkit/stft.hpp"

namespace beamkit {

struct CacgmmConfig {
  int components = 2;
  int max_iters = 30;
  // Diagonal loading of each shape matrix, as a fraction of trace / M.
  double b_loading = 1e-4;
  double z_floor = 1e-10;
  std::uint64_t seed = 0;
};

inline void Validate(const CacgmmConfig &cfg) {
  if (cfg.components < 1) throw Error(Errc::kInvalidArgument, "components must be >= 1");
  if (cfg.max_iters < 1) throw Error(Errc::kInvalidArgument, "max_iters must be >= 1");
  if (!(cfg.b_loading > 0.0)) throw Error(Errc::kInvalidArgument, "b_loading must be > 0");
}

// Per-frequency mixture parameters and the posteriors they induce.
struct CacgmmState {
  Eigen::ArrayXXd alpha;              // F x K mixture weights
  std::vector<Eigen::MatrixXcd> shape;  // F * K Hermitian PD M x M, index f * K + k
  std::vector<RealPlane> gamma;       // K planes, each T x F
  std::vector<double> loglik_history;

  Eigen::Index num_components() const { return alpha.cols(); }
  Eigen::Index num_bins() const { return alpha.rows(); }

  Eigen::MatrixXcd &B(Eigen::Index f, Eigen::Index k) {
    return shape[static_cast<std::size_t>(f * num_components() + k)];
  }
  const Eigen::MatrixXcd &B(Eigen::Index f, Eigen::Index k) const {
    return shape[static_cast<std::size_t>(f * num_components() + k)];
  }
};

// Unit-norm observation vectors Z = S / ||S||. Bins whose norm falls below
// `z_floor` emit e_1.
inline Spectrogram DirectionalStats(const Spectrogram &s, double z_floor = 1e-10) {
  if (s.num_channels() < 2)
    throw Error(Errc::kTooFewChannels, "directional statistics need at least two channels");
  Spectrogram z = s;
  for (Eigen::Index t = 0; t < s.num_frames(); ++t) {
    for (Eigen::Index f = 0; f < s.num_bins(); ++f) {
      double norm2 = 0.0;
      for (Eigen::Index m = 0; m < s.num_channels(); ++m) norm2 += std::norm(s(m, t, f));
      const double norm = std::sqrt(norm2);
      if (norm < z_floor) {
        for (Eigen::Index m = 0; m < s.num_channels(); ++m)
          z(m, t, f) = m == 0 ? Complex(1.0) : Complex(0.0);
      } else {
        for (Eigen::Index m = 0; m < s.num_channels(); ++m) z(m, t, f) /= norm;
      }
    }
  }
  return z;
}

namespace detail {

// log((M-1)!) - log 2 - M log(pi)
inline double CacgLogNormalizer(Eigen::Index m) {
  return std::lgamma(static_cast<double>(m)) - std::numbers::ln2 -
         static_cast<double>(m) * std::log(std::numbers::pi);
}

inline Eigen::LLT<Eigen::MatrixXcd> FactorShape(const Eigen::MatrixXcd &b) {
  Eigen::LLT<Eigen::MatrixXcd> llt(b);
  if (llt.info() != Eigen::Success)
    throw Error(Errc::kNotPositiveDefinite, "cACG shape matrix");
  return llt;
}

inline double LogDet(const Eigen::LLT<Eigen::MatrixXcd> &llt) {
  return 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
}

// z_t^H B^{-1} z_t for every column of `z`.
inline Eigen::ArrayXd QuadForms(const Eigen::LLT<Eigen::MatrixXcd> &llt,
                                const Eigen::MatrixXcd &z) {
  const Eigen::MatrixXcd y = llt.matrixL().solve(z);
  return y.colwise().squaredNorm().transpose().array();
}

}  // namespace detail

// Log density of the complex angular central Gaussian on the unit sphere of
// C^M: (M-1)! / (2 pi^M det B) * (z^H B^{-1} z)^{-M}.
inline double CacgLogPdf(const Eigen::VectorXcd &z, const Eigen::MatrixXcd &b) {
  const auto llt = detail::FactorShape(b);
  const Eigen::Index m = z.size();
  const double quad = detail::QuadForms(llt, z)(0);
  return detail::CacgLogNormalizer(m) - detail::LogDet(llt) -
         static_cast<double>(m) * std::log(quad);
}

struct Posteriors {
  std::vector<RealPlane> gamma;  // K planes, each T x F
  double loglik = 0.0;           // sum over bins of log sum_k alpha pdf
};

// Posterior of each component at every bin, normalized by log-sum-exp.
inline Posteriors EStep(const Spectrogram &z, const CacgmmState &state) {
  const Eigen::Index K = state.num_components(), T = z.num_frames(), F = z.num_bins();
  const Eigen::Index M = z.num_channels();
  Posteriors out;
  out.gamma.assign(static_cast<std::size_t>(K), RealPlane(T, F));
  const double norm_const = detail::CacgLogNormalizer(M);
  Eigen::ArrayXXd log_num(K, T);
  for (Eigen::Index f = 0; f < F; ++f) {
    const Eigen::MatrixXcd zf = z.Bin(f);
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto llt = detail::FactorShape(state.B(f, k));
      const Eigen::ArrayXd quad = detail::QuadForms(llt, zf);
      const double a = state.alpha(f, k);
      const double log_alpha = a > 0.0 ? std::log(a) : -std::numeric_limits<double>::infinity();
      log_num.row(k) = (log_alpha + norm_const - detail::LogDet(llt) -
                        static_cast<double>(M) * quad.log())
                           .transpose();
    }
    for (Eigen::Index t = 0; t < T; ++t) {
      const double peak = log_num.col(t).maxCoeff();
      const double lse = peak + std::log((log_num.col(t) - peak).exp().sum());
      out.loglik += lse;
      for (Eigen::Index k = 0; k < K; ++k)
        out.gamma[static_cast<std::size_t>(k)](t, f) = std::exp(log_num(k, t) - lse);
    }
  }
  return out;
}

// One EM maximization step. Mixture weights are posterior means over time;
// each shape matrix takes one fixed-point step
//   B = M * sum_t g_t z z^H / (z^H B_old^{-1} z) / sum_t g_t,
// is Hermitian-symmetrized and diagonally loaded. A component with no
// posterior mass at a frequency is rescued with weight 1e-6 and B = I.
inline CacgmmState MStep(const Spectrogram &z, const std::vector<RealPlane> &gamma,
                         const CacgmmState &state, double b_loading = 1e-4) {
  const Eigen::Index K = state.num_components(), T = z.num_frames(), F = z.num_bins();
  const Eigen::Index M = z.num_channels();
  if (static_cast<Eigen::Index>(gamma.size()) != K)
    throw Error(Errc::kShapeMismatch, "posterior count differs from component count");
  CacgmmState next = state;
  for (Eigen::Index f = 0; f < F; ++f) {
    const Eigen::MatrixXcd zf = z.Bin(f);
    for (Eigen::Index k = 0; k < K; ++k) {
      const Eigen::ArrayXd g = gamma[static_cast<std::size_t>(k)].col(f);
      const double mass = g.sum();
      if (mass < 1e-10) {
        next.alpha(f, k) = 1e-6;
        next.B(f, k) = Eigen::MatrixXcd::Identity(M, M);
        continue;
      }
      next.alpha(f, k) = mass / static_cast<double>(T);
      const auto llt = detail::FactorShape(state.B(f, k));
      const Eigen::ArrayXd weight = g / detail::QuadForms(llt, zf);
      Eigen::MatrixXcd b = zf * weight.matrix().asDiagonal() * zf.adjoint();
      b *= static_cast<double>(M) / mass;
      b = Hermitize(b);
      LoadDiagonal(&b, b_loading);
      next.B(f, k) = std::move(b);
    }
    next.alpha.row(f) /= next.alpha.row(f).sum();
  }
  return next;
}

inline CacgmmState InitialState(Eigen::Index bins, Eigen::Index components, Eigen::Index channels) {
  CacgmmState s;
  s.alpha = Eigen::ArrayXXd::Constant(bins, components, 1.0 / static_cast<double>(components));
  s.shape.assign(static_cast<std::size_t>(bins * components),
                 Eigen::MatrixXcd::Identity(channels, channels));
  return s;
}

// Posteriors drawn from a symmetric Dirichlet(1) at every bin.
inline std::vector<RealPlane> RandomPosteriors(Eigen::Index components, Eigen::Index frames,
                                               Eigen::Index bins, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<RealPlane> gamma(static_cast<std::size_t>(components), RealPlane(frames, bins));
  std::vector<double> draw(static_cast<std::size_t>(components));
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (Eigen::Index f = 0; f < bins; ++f) {
      double total = 0.0;
      for (auto &d : draw) total += (d = expo(rng));
      for (Eigen::Index k = 0; k < components; ++k)
        gamma[static_cast<std::size_t>(k)](t, f) = draw[static_cast<std::size_t>(k)] / total;
    }
  }
  return gamma;
}

// EM from given initial posteriors: an M-step from identity shapes, then
// max_iters E-steps with an M-step between consecutive ones. The returned
// posteriors belong to the returned parameters.
inline CacgmmState FitFrom(const Spectrogram &z, std::vector<RealPlane> initial_gamma,
                           const CacgmmConfig &cfg) {
  Validate(cfg);
  CacgmmState state = InitialState(z.num_bins(), cfg.components, z.num_channels());
  state = MStep(z, initial_gamma, state, cfg.b_loading);
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    Posteriors post = EStep(z, state);
    state.loglik_history.push_back(post.loglik);
    state.gamma = std::move(post.gamma);
    if (iter + 1 < cfg.max_iters) state = MStep(z, state.gamma, state, cfg.b_loading);
  }
  return state;
}

inline CacgmmState Fit(const Spectrogram &s, const CacgmmConfig &cfg) {
  Validate(cfg);
  if (s.num_channels() < 2)
    throw Error(Errc::kTooFewChannels, "cACGMM needs at least two channels");
  if (s.num_frames() < cfg.components)
    throw Error(Errc::kInvalidArgument, "fewer frames than mixture components");
  const Spectrogram z = DirectionalStats(s, cfg.z_floor);
  return FitFrom(z, RandomPosteriors(cfg.components, s.num_frames(), s.num_bins(), cfg.seed),
                 cfg);
}

// perm[k] is the old component index that lands in slot k.
using Permutation = std::vector<int>;

// Reorders components at frequency f.
inline void PermuteFrequency(CacgmmState *state, Eigen::Index f, const Permutation &perm) {
  const Eigen::Index K = state->num_components();
  const Eigen::ArrayXd alpha = state->alpha.row(f).transpose();
  std::vector<Eigen::MatrixXcd> shapes;
  std::vector<Eigen::ArrayXd> acts;
  for (Eigen::Index k = 0; k < K; ++k) {
    shapes.push_back(state->B(f, k));
    if (!state->gamma.empty()) acts.push_back(state->gamma[static_cast<std::size_t>(k)].col(f));
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto src = static_cast<std::size_t>(perm[static_cast<std::size_t>(k)]);
    state->alpha(f, k) = alpha(static_cast<Eigen::Index>(src));
    state->B(f, k) = shapes[src];
    if (!acts.empty()) state->gamma[static_cast<std::size_t>(k)].col(f) = acts[src];
  }
}

namespace detail {

inline std::vector<Permutation> AllPermutations(int k) {
  std::vector<Permutation> out;
  Permutation p(static_cast<std::size_t>(k));
  std::iota(p.begin(), p.end(), 0);
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Permutation of the activities at frequency f maximizing the summed Pearson
// correlation with the centroids. Enumeration starts at the identity and only
// a strictly better score replaces the incumbent.
inline std::size_t BestPermutation(const std::vector<RealPlane> &gamma, Eigen::Index f,
                                   const std::vector<std::vector<double>> &centroids,
                                   const std::vector<Permutation> &perms) {
  const std::size_t K = gamma.size();
  std::vector<std::vector<double>> acts(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::ArrayXd col = gamma[k].col(f);
    acts[k].assign(col.data(), col.data() + col.size());
  }
  std::vector<double> corr(K * K);
  for (std::size_t src = 0; src < K; ++src)
    for (std::size_t slot = 0; slot < K; ++slot)
      corr[src * K + slot] = Pearson(acts[src], centroids[slot]);
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < perms.size(); ++i) {
    double score = 0.0;
    for (std::size_t slot = 0; slot < K; ++slot)
      score += corr[static_cast<std::size_t>(perms[i][slot]) * K + slot];
    if (score > best_score + 1e-12) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

inline std::vector<std::vector<double>> Centroids(const std::vector<RealPlane> &gamma) {
  std::vector<std::vector<double>> c(gamma.size());
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    const Eigen::ArrayXd mean = gamma[k].rowwise().mean();
    c[k].assign(mean.data(), mean.data() + mean.size());
  }
  return c;
}

}  // namespace detail

// Resolves the per-frequency label permutation by correlating posterior
// activity sequences across frequencies. Centroids are bootstrapped by
// visiting frequencies from most to least decisive (largest posterior
// variance over time) and greedily aligning each to the running sum; then up
// to 10 refinement rounds re-align every frequency to the mean activity until
// no permutation changes. When `applied` is given it receives, per frequency,
// the composed permutation that was applied to the input labels.
inline CacgmmState AlignPermutations(const CacgmmState &state,
                                     std::vector<Permutation> *applied = nullptr) {
  const Eigen::Index K = state.num_components(), F = state.num_bins();
  if (K > 6) throw Error(Errc::kInvalidArgument, "permutation search limited to K <= 6");
  CacgmmState out = state;
  Permutation identity(static_cast<std::size_t>(K));
  std::iota(identity.begin(), identity.end(), 0);
  std::vector<Permutation> total(static_cast<std::size_t>(F), identity);
  if (K == 1 || F <= 1 || out.gamma.empty()) {
    if (applied) *applied = total;
    return out;
  }
  const Eigen::Index T = out.gamma[0].rows();
  const auto perms = detail::AllPermutations(static_cast<int>(K));

  auto apply = [&](Eigen::Index f, const Permutation &p) {
    PermuteFrequency(&out, f, p);
    Permutation composed(p.size());
    auto &cur = total[static_cast<std::size_t>(f)];
    for (std::size_t k = 0; k < p.size(); ++k)
      composed[k] = cur[static_cast<std::size_t>(p[k])];
    cur = std::move(composed);
  };

  std::vector<double> decisiveness(static_cast<std::size_t>(F), 0.0);
  for (Eigen::Index f = 0; f < F; ++f) {
    for (const auto &g : out.gamma) {
      const Eigen::ArrayXd col = g.col(f);
      decisiveness[static_cast<std::size_t>(f)] += (col - col.mean()).square().sum();
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(F));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return decisiveness[static_cast<std::size_t>(a)] > decisiveness[static_cast<std::size_t>(b)];
  });

  std::vector<std::vector<double>> running(static_cast<std::size_t>(K),
                                           std::vector<double>(static_cast<std::size_t>(T), 0.0));
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Eigen::Index f = order[i];
    if (i > 0) {
      const std::size_t best = detail::BestPermutation(out.gamma, f, running, perms);
      if (best != 0) apply(f, perms[best]);
    }
    for (Eigen::Index k = 0; k < K; ++k)
      for (Eigen::Index t = 0; t < T; ++t)
        running[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)] +=
            out.gamma[static_cast<std::size_t>(k)](t, f);
  }

  for (int round = 0; round < 10; ++round) {
    const auto centroids = detail::Centroids(out.gamma);
    bool changed = false;
    for (Eigen::Index f = 0; f < F; ++f) {
      const std::size_t best = detail::BestPermutation(out.gamma, f, centroids, perms);
      if (best != 0) {
        apply(f, perms[best]);
        changed = true;
      }
    }
    if (!changed) break;
  }
  if (applied) *applied = std::move(total);
  return out;
}

// Component whose masked reference-channel frame energy correlates best with
// the unmasked frame energy. Ties go to the lower index.
inline Eigen::Index SelectSpeech(const Spectrogram &s, const CacgmmState &state,
                                 Eigen::Index reference) {
  const Eigen::Index K = state.num_components();
  if (K <= 1) return 0;
  if (reference < 0 || reference >= s.num_channels())
    throw Error(Errc::kInvalidArgument, "reference channel out of range");
  const Eigen::Index T = s.num_frames(), F = s.num_bins();
  std::vector<double> total(static_cast<std::size_t>(T), 0.0);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index f = 0; f < F; ++f) total[static_cast<std::size_t>(t)] += std::norm(s(reference, t, f));
  Eigen::Index best = 0;
  double best_corr = -std::numeric_limits<double>::infinity();
  std::vector<double> env(static_cast<std::size_t>(T));
  for (Eigen::Index k = 0; k < K; ++k) {
    const RealPlane &g = state.gamma[static_cast<std::size_t>(k)];
    for (Eigen::Index t = 0; t < T; ++t) {
      double e = 0.0;
      for (Eigen::Index f = 0; f < F; ++f) {
        const double a = std::abs(s(reference, t, f)) * g(t, f);
        e += a * a;
      }
      env[static_cast<std::size_t>(t)] = e;
    }
    const double c = Pearson(env, total);
    if (c > best_corr) {
      best_corr = c;
      best = k;
    }
  }
  return best;
}

struct Extraction {
  Spectrogram speech;  // S masked by the selected posterior on every channel
  Mask mask;           // the selected posterior
  CacgmmState state;   // aligned
  Eigen::Index speech_component = 0;
};

// Fit, align, select the speech component, and mask every channel with its
// posterior.
inline Extraction Extract(const Spectrogram &s, const CacgmmConfig &cfg,
                          Eigen::Index reference = 0) {
  Extraction out;
  out.state = AlignPermutations(Fit(s, cfg));
  out.speech_component = SelectSpeech(s, out.state, reference);
  out.mask = Mask(out.state.gamma[static_cast<std::size_t>(out.speech_component)]
                      .max(0.0)
                      .min(1.0));
  out.speech = ApplyMask(s, out.mask);
  return out;
}

}  // namespace beamkit
