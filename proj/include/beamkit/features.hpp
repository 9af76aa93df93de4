// beamkit/features.hpp

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
#include "beamkit/stft.hpp"

namespace beamkit {

// Real T x F plane.
using RealPlane = Eigen::ArrayXXd;

constexpr double kLogPowerFloor = 1e-12;

// Spectro-spatial input features, C x T x F with C = 1 + 2 (M - 1).
// Plane 0 holds the reference channel's log power. Each non-reference
// channel m, in increasing channel order, contributes cos(IPD) then sin(IPD).
struct FeatureTensor {
  std::vector<RealPlane> planes;
  Eigen::Index reference_channel = 0;

  Eigen::Index num_planes() const { return static_cast<Eigen::Index>(planes.size()); }
};

// ln(|Y|^2 + 1e-12) of one channel.
inline RealPlane LogPower(const Spectrogram &s, Eigen::Index channel) {
  if (channel < 0 || channel >= s.num_channels())
    throw Error(Errc::kInvalidArgument, "channel " + std::to_string(channel) + " out of range");
  RealPlane out(s.num_frames(), s.num_bins());
  for (Eigen::Index t = 0; t < s.num_frames(); ++t)
    for (Eigen::Index f = 0; f < s.num_bins(); ++f)
      out(t, f) = std::log(std::norm(s(channel, t, f)) + kLogPowerFloor);
  return out;
}

// cos/sin of the phase difference between channel m and the reference. The
// phase of an exactly zero bin is taken as 0.
inline FeatureTensor IpdFeatures(const Spectrogram &s, Eigen::Index reference) {
  if (s.num_channels() < 2)
    throw Error(Errc::kTooFewChannels, "IPD features need at least two channels");
  FeatureTensor out;
  out.reference_channel = reference;
  out.planes.push_back(LogPower(s, reference));
  const Eigen::Index frames = s.num_frames(), bins = s.num_bins();
  for (Eigen::Index m = 0; m < s.num_channels(); ++m) {
    if (m == reference) continue;
    RealPlane cos_plane(frames, bins), sin_plane(frames, bins);
    for (Eigen::Index t = 0; t < frames; ++t) {
      for (Eigen::Index f = 0; f < bins; ++f) {
        const Complex a = s(m, t, f), r = s(reference, t, f);
        const double pa = a == Complex(0.0) ? 0.0 : std::arg(a);
        const double pr = r == Complex(0.0) ? 0.0 : std::arg(r);
        const double ipd = pa - pr;
        cos_plane(t, f) = std::cos(ipd);
        sin_plane(t, f) = std::sin(ipd);
      }
    }
    out.planes.push_back(std::move(cos_plane));
    out.planes.push_back(std::move(sin_plane));
  }
  return out;
}

}  // namespace beamkit
