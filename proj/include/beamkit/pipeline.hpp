// beamkit/pipeline.hpp

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

#include <string>
#include <variant>
#include <vector>

#include "beamkit/audio_io.hpp"
#include "beamkit/beamform.hpp"
#include "beamkit/cacgmm.hpp"
#include "beamkit/error.hpp"
#include "beamkit/linalg.hpp"
#include "beamkit/mask.hpp"
#include "beamkit/maskers.hpp"
#include "beamkit/scenegen.hpp"
#include "beamkit/stft.hpp"

namespace beamkit {

struct PipelineConfig {
  // Share of the beamformer output in the final remix.
  double alpha = 0.2;
  Eigen::Index reference = 0;
  MaskProvider first_masker = CacgmmMasker{};
  MaskProvider second_masker = CacgmmMasker{};
  CovMode cov_mode = CovMode::kComplement;
  StftConfig stft;
};

// alpha * bf + (1 - alpha) * masked, bin by bin.
inline Spectrogram Remix(const Spectrogram &bf, const Spectrogram &masked, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(Errc::kInvalidArgument, "alpha must lie in [0, 1]");
  if (!bf.SameShape(masked))
    throw Error(Errc::kShapeMismatch, "remix inputs differ in shape");
  Spectrogram out = bf;
  for (std::size_t i = 0; i < out.data().size(); ++i)
    out.data()[i] = alpha * bf.data()[i] + (1.0 - alpha) * masked.data()[i];
  return out;
}

// Every intermediate of one Enhance call.
struct EnhanceResult {
  Waveform output;
  Spectrogram mixture;        // Y, M channels
  Mask first_mask;            // drives the covariance estimate
  Spectrogram first_masked;   // reference channel of Y masked by first_mask
  CovariancePair covariances;
  std::vector<BeamformerSolution> solutions;  // one per reference channel
  Spectrogram stacked;        // M-channel stack of beamformer outputs
  Mask second_mask;           // estimated on the stack
  Spectrogram beamformed;     // reference channel of the stack
  Spectrogram masked;         // second_mask applied to beamformed
  Spectrogram remixed;
};

// An oracle provider's stems mapped through the stacked beamformer, so the
// second mask is computed in the domain it is applied to. Other providers are
// returned unchanged.
inline MaskProvider InBeamformedDomain(const MaskProvider &provider,
                                       const std::vector<BeamformerSolution> &sols,
                                       Eigen::Index reference) {
  if (const auto *oracle = std::get_if<OracleMasker>(&provider)) {
    return OracleMasker{ApplyStack(oracle->speech, sols), ApplyStack(oracle->noise, sols),
                        reference};
  }
  return provider;
}

// Oracle masker over a scene's speech stem and the sum of its other stems.
inline OracleMasker OracleFromScene(const Scene &scene, const StftConfig &stft,
                                    Eigen::Index channel) {
  return OracleMasker{Analyze(scene.speech(), stft), Analyze(scene.Noise(), stft), channel};
}

namespace detail {

inline void AssertStageInvariants([[maybe_unused]] const EnhanceResult &r) {
#ifndef NDEBUG
  Validate(r.first_mask);
  Validate(r.second_mask);
  for (std::size_t f = 0; f < r.covariances.speech.size(); ++f) {
    const double scale = 1.0 + r.covariances.speech[f].cwiseAbs().maxCoeff();
    if (HermitianError(r.covariances.speech[f]) > 1e-9 * scale ||
        HermitianError(r.covariances.noise[f]) > 1e-9 * (1.0 + r.covariances.noise[f].cwiseAbs().maxCoeff()))
      throw Error(Errc::kInvalidArgument, "covariance lost Hermitian symmetry");
  }
#endif
}

}  // namespace detail

// Mask -> covariances -> MVDR stacked over every reference channel -> second
// mask on the stack -> remix with the beamformer output -> inverse STFT. The
// output has the input's length.
inline EnhanceResult Enhance(const Waveform &y, const PipelineConfig &cfg) {
  Validate(y);
  if (y.num_channels() < 2)
    throw Error(Errc::kTooFewChannels, "enhance needs a multichannel input");
  if (cfg.reference < 0 || cfg.reference >= y.num_channels())
    throw Error(Errc::kInvalidArgument, "reference channel out of range");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
    throw Error(Errc::kInvalidArgument, "alpha must lie in [0, 1]");

  EnhanceResult r;
  r.mixture = Analyze(y, cfg.stft);
  r.first_mask = Provide(cfg.first_masker, r.mixture);
  r.first_masked = ApplyMask(r.mixture.Channel(cfg.reference), r.first_mask);
  r.covariances = EstimateCovariances(r.mixture, r.first_mask, cfg.cov_mode);
  r.solutions = MvdrWeightsAllReferences(r.covariances);
  r.stacked = ApplyStack(r.mixture, r.solutions);
  r.second_mask =
      Provide(InBeamformedDomain(cfg.second_masker, r.solutions, cfg.reference), r.stacked);
  r.beamformed = r.stacked.Channel(cfg.reference);
  r.masked = ApplyMask(r.beamformed, r.second_mask);
  r.remixed = Remix(r.beamformed, r.masked, cfg.alpha);
  r.output = FitLength(Synthesize(r.remixed), y.num_frames());
  detail::AssertStageInvariants(r);
  return r;
}

struct TargetConfig {
  StftConfig stft;
  CacgmmConfig cacgmm;
  Eigen::Index reference = 0;
};

struct TargetResult {
  Waveform target;  // single channel, input length
  Extraction extraction;
};

// The cleaning stage: cACGMM extraction on the recording, resynthesized on
// the reference channel.
inline TargetResult MakeTarget(const Waveform &recording, const TargetConfig &cfg) {
  Validate(recording);
  if (recording.num_channels() < 2)
    throw Error(Errc::kTooFewChannels, "target extraction needs a multichannel recording");
  const Spectrogram s = Analyze(recording, cfg.stft);
  TargetResult r;
  r.extraction = Extract(s, cfg.cacgmm, cfg.reference);
  r.target = FitLength(Synthesize(r.extraction.speech.Channel(cfg.reference)),
                       recording.num_frames());
  return r;
}

}  // namespace beamkit
