// beamkit/mask.hpp

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

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "beamkit/error.hpp"
#include "beamkit/features.hpp"

namespace beamkit {

// Real T x F time-frequency mask with values in [0, 1].
struct Mask {
  RealPlane values;

  Mask() = default;
  explicit Mask(RealPlane v) : values(std::move(v)) {}

  static Mask Constant(Eigen::Index frames, Eigen::Index bins, double v) {
    return Mask(RealPlane::Constant(frames, bins, v));
  }

  Eigen::Index num_frames() const { return values.rows(); }
  Eigen::Index num_bins() const { return values.cols(); }
};

inline void Validate(const Mask &m) {
  if (!m.values.allFinite()) throw Error(Errc::kNonFinite, "mask contains NaN or Inf");
  if (m.values.size() > 0 && (m.values.minCoeff() < 0.0 || m.values.maxCoeff() > 1.0))
    throw Error(Errc::kInvalidArgument, "mask values outside [0, 1]");
}

inline void CheckMaskShape(const Mask &m, Eigen::Index frames, Eigen::Index bins) {
  if (m.num_frames() != frames || m.num_bins() != bins)
    throw Error(Errc::kShapeMismatch,
                "expected mask " + std::to_string(frames) + "x" + std::to_string(bins) +
                    ", found " + std::to_string(m.num_frames()) + "x" +
                    std::to_string(m.num_bins()));
}

// Multiplies every channel of `s` by the mask.
inline Spectrogram ApplyMask(const Spectrogram &s, const Mask &m) {
  CheckMaskShape(m, s.num_frames(), s.num_bins());
  Spectrogram out = s;
  for (Eigen::Index c = 0; c < s.num_channels(); ++c)
    for (Eigen::Index t = 0; t < s.num_frames(); ++t)
      for (Eigen::Index f = 0; f < s.num_bins(); ++f) out(c, t, f) *= m.values(t, f);
  return out;
}

}  // namespace beamkit
