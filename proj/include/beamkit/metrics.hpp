// beamkit/metrics.hpp

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
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "beamkit/audio_io.hpp"
#include "beamkit/error.hpp"
#include "beamkit/mask.hpp"
#include "beamkit/stft.hpp"

namespace beamkit {

constexpr double kDbCap = 100.0;

namespace detail {

inline double CappedDb(double num, double den) {
  if (den <= 0.0) return num > 0.0 ? kDbCap : -kDbCap;
  if (num <= 0.0) return -kDbCap;
  return std::clamp(10.0 * std::log10(num / den), -kDbCap, kDbCap);
}

inline std::span<const double> Mono(const Waveform &w, const char *what) {
  if (w.num_channels() != 1)
    throw Error(Errc::kInvalidArgument, std::string(what) + " must be single-channel");
  return {w.samples.data(), static_cast<std::size_t>(w.num_frames())};
}

}  // namespace detail

// Scale-invariant SNR in dB, capped at +-100 dB. No mean removal.
inline double SiSnr(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size())
    throw Error(Errc::kShapeMismatch, "estimate and reference lengths differ");
  double dot = 0.0, ref_energy = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    dot += est[i] * ref[i];
    ref_energy += ref[i] * ref[i];
  }
  if (ref_energy <= 0.0) throw Error(Errc::kZeroPower, "reference is all zeros");
  const double scale = dot / ref_energy;
  double target = 0.0, error = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double s = scale * ref[i];
    const double e = est[i] - s;
    target += s * s;
    error += e * e;
  }
  return detail::CappedDb(target, error);
}

inline double SiSnr(const Waveform &est, const Waveform &ref) {
  return SiSnr(detail::Mono(est, "estimate"), detail::Mono(ref, "reference"));
}

// Plain SNR of `est` against `ref` in dB, capped at +-100 dB.
inline double Snr(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size())
    throw Error(Errc::kShapeMismatch, "estimate and reference lengths differ");
  double signal = 0.0, error = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    signal += ref[i] * ref[i];
    error += (est[i] - ref[i]) * (est[i] - ref[i]);
  }
  if (signal <= 0.0) throw Error(Errc::kZeroPower, "reference is all zeros");
  return detail::CappedDb(signal, error);
}

inline double Snr(const Waveform &est, const Waveform &ref) {
  return Snr(detail::Mono(est, "estimate"), detail::Mono(ref, "reference"));
}

// Mean over (m, t, f) of |Y * M - target|.
inline double MaskLoss(const Spectrogram &y, const Mask &mask, const Spectrogram &target) {
  if (!y.SameShape(target))
    throw Error(Errc::kShapeMismatch, "mixture and target spectrograms differ in shape");
  CheckMaskShape(mask, y.num_frames(), y.num_bins());
  double total = 0.0;
  for (Eigen::Index m = 0; m < y.num_channels(); ++m)
    for (Eigen::Index t = 0; t < y.num_frames(); ++t)
      for (Eigen::Index f = 0; f < y.num_bins(); ++f)
        total += std::abs(y(m, t, f) * mask.values(t, f) - target(m, t, f));
  const auto count = static_cast<double>(y.data().size());
  return count > 0 ? total / count : 0.0;
}

struct EvalReport {
  std::string clip;
  double si_snr_db = 0.0;
  std::optional<double> si_snr_improvement_db;
  double snr_db = 0.0;
  std::optional<double> mask_loss;
};

inline nlohmann::ordered_json ToJson(const EvalReport &r) {
  nlohmann::ordered_json j;
  j["clip"] = r.clip;
  j["si_snr_db"] = r.si_snr_db;
  j["si_snr_improvement_db"] =
      r.si_snr_improvement_db ? nlohmann::ordered_json(*r.si_snr_improvement_db) : nullptr;
  j["snr_db"] = r.snr_db;
  j["mask_loss"] = r.mask_loss ? nlohmann::ordered_json(*r.mask_loss) : nullptr;
  return j;
}

// One newline-terminated JSON object.
inline std::string ToJsonLine(const EvalReport &r) { return ToJson(r).dump() + "\n"; }

}  // namespace beamkit
