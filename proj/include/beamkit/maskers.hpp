// beamkit/maskers.hpp

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
#include <cstdint>
#include <cstring>
#include <string>
#include <variant>
#include <vector>

#include "beamkit/audio_io.hpp"
#include "beamkit/cacgmm.hpp"
#include "beamkit/error.hpp"
#include "beamkit/mask.hpp"
#include "beamkit/stft.hpp"

namespace beamkit {

// MSK1 layout: "MSK1", uint32 T, uint32 F (little endian), then T * F
// little-endian float32 values, frame-major.
inline void WriteMask(const std::string &path, const Mask &m) {
  std::vector<unsigned char> buf;
  buf.reserve(12 + static_cast<std::size_t>(m.values.size()) * 4);
  detail::PutTag(&buf, "MSK1");
  detail::PutU32(&buf, static_cast<std::uint32_t>(m.num_frames()));
  detail::PutU32(&buf, static_cast<std::uint32_t>(m.num_bins()));
  for (Eigen::Index t = 0; t < m.num_frames(); ++t)
    for (Eigen::Index f = 0; f < m.num_bins(); ++f)
      detail::PutU32(&buf, detail::FloatToBits(static_cast<float>(m.values(t, f))));
  detail::WriteAllBytesAtomic(path, buf);
}

inline Mask ReadMask(const std::string &path) {
  const std::vector<unsigned char> bytes = detail::ReadAllBytes(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "MSK1", 4) != 0)
    throw Error(Errc::kBadMagic, path + ": expected MSK1");
  if (bytes.size() < 12) throw Error(Errc::kTruncatedPayload, path + ": short header");
  const std::uint64_t frames = detail::ReadU32(bytes.data() + 4);
  const std::uint64_t bins = detail::ReadU32(bytes.data() + 8);
  const std::uint64_t need = frames * bins * 4;
  if (bytes.size() - 12 < need)
    throw Error(Errc::kTruncatedPayload,
                path + ": declared " + std::to_string(frames) + "x" + std::to_string(bins) +
                    " needs " + std::to_string(need) + " payload bytes, found " +
                    std::to_string(bytes.size() - 12));
  Mask m(RealPlane(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(bins)));
  const unsigned char *p = bytes.data() + 12;
  for (Eigen::Index t = 0; t < m.num_frames(); ++t)
    for (Eigen::Index f = 0; f < m.num_bins(); ++f, p += 4)
      m.values(t, f) = detail::BitsToFloat(detail::ReadU32(p));
  return m;
}

// Clamps values that stray from [0, 1] by at most 1e-6; anything further out,
// or NaN, is an error.
inline Mask SanitizeMask(Mask m) {
  constexpr double kSlack = 1e-6;
  if (!m.values.allFinite()) throw Error(Errc::kNonFinite, "mask contains NaN or Inf");
  if (m.values.size() > 0 &&
      (m.values.minCoeff() < -kSlack || m.values.maxCoeff() > 1.0 + kSlack))
    throw Error(Errc::kInvalidArgument, "mask values outside [0, 1]");
  m.values = m.values.max(0.0).min(1.0);
  return m;
}

// Ideal ratio mask on magnitudes: |S| / (|S| + |N| + 1e-12).
inline Mask OracleIrm(const Spectrogram &speech, const Spectrogram &noise, Eigen::Index channel) {
  if (!speech.SameShape(noise))
    throw Error(Errc::kShapeMismatch, "speech and noise spectrograms differ in shape");
  if (channel < 0 || channel >= speech.num_channels())
    throw Error(Errc::kInvalidArgument, "channel out of range");
  Mask m(RealPlane(speech.num_frames(), speech.num_bins()));
  for (Eigen::Index t = 0; t < speech.num_frames(); ++t) {
    for (Eigen::Index f = 0; f < speech.num_bins(); ++f) {
      const double s = std::abs(speech(channel, t, f));
      const double n = std::abs(noise(channel, t, f));
      m.values(t, f) = s / (s + n + 1e-12);
    }
  }
  return m;
}

// Ground-truth stems in the same STFT domain as the signal being masked.
struct OracleMasker {
  Spectrogram speech;
  Spectrogram noise;
  Eigen::Index channel = 0;
};

struct CacgmmMasker {
  CacgmmConfig config;
  Eigen::Index reference = 0;
};

struct FileMasker {
  std::string path;
};

using MaskProvider = std::variant<OracleMasker, CacgmmMasker, FileMasker>;

inline Mask Provide(const MaskProvider &provider, const Spectrogram &y) {
  struct Visitor {
    const Spectrogram &y;
    Mask operator()(const OracleMasker &p) const {
      Mask m = OracleIrm(p.speech, p.noise, p.channel);
      CheckMaskShape(m, y.num_frames(), y.num_bins());
      return m;
    }
    Mask operator()(const CacgmmMasker &p) const {
      return SanitizeMask(Extract(y, p.config, p.reference).mask);
    }
    Mask operator()(const FileMasker &p) const {
      Mask m = ReadMask(p.path);
      CheckMaskShape(m, y.num_frames(), y.num_bins());
      return SanitizeMask(std::move(m));
    }
  };
  return std::visit(Visitor{y}, provider);
}

}  // namespace beamkit
