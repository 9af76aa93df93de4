// beamkit/audio_io.hpp

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
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "beamkit/error.hpp"

namespace beamkit {

// channels x frames, each channel contiguous.
using RealMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Waveform {
  RealMatrix samples;
  int sample_rate_hz = 16000;

  Waveform() = default;
  Waveform(RealMatrix s, int rate) : samples(std::move(s)), sample_rate_hz(rate) {}

  Eigen::Index num_channels() const { return samples.rows(); }
  Eigen::Index num_frames() const { return samples.cols(); }
  double duration_seconds() const {
    return static_cast<double>(num_frames()) / sample_rate_hz;
  }

  // Single-channel copy of channel `c`.
  Waveform channel(Eigen::Index c) const {
    if (c < 0 || c >= num_channels())
      throw Error(Errc::kInvalidArgument,
                  "channel " + std::to_string(c) + " out of range");
    return Waveform(samples.row(c), sample_rate_hz);
  }
};

inline void Validate(const Waveform &w) {
  if (w.sample_rate_hz <= 0)
    throw Error(Errc::kInvalidArgument, "sample rate must be positive");
  if (!w.samples.allFinite())
    throw Error(Errc::kNonFinite, "waveform contains NaN or Inf");
}

enum class WavCodec { kPcm16, kFloat32 };

namespace detail {

inline std::uint16_t ReadU16(const unsigned char *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t ReadU32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void PutU16(std::vector<unsigned char> *buf, std::uint16_t v) {
  buf->push_back(static_cast<unsigned char>(v & 0xff));
  buf->push_back(static_cast<unsigned char>(v >> 8));
}

inline void PutU32(std::vector<unsigned char> *buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    buf->push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void PutTag(std::vector<unsigned char> *buf, const char *tag) {
  buf->insert(buf->end(), tag, tag + 4);
}

inline std::vector<unsigned char> ReadAllBytes(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::kMissingFile, path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(is),
                                    std::istreambuf_iterator<char>());
}

// Writes through a temporary sibling file and renames it into place, so a
// reader never observes a partially written file.
inline void WriteAllBytesAtomic(const std::string &path,
                                const std::vector<unsigned char> &bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(Errc::kUnwritablePath, path);
    os.write(reinterpret_cast<const char *>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error(Errc::kUnwritablePath, path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::kUnwritablePath, path);
  }
}

inline float BitsToFloat(std::uint32_t bits) {
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

inline std::uint32_t FloatToBits(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  return bits;
}

}  // namespace detail

inline Waveform ReadWav(const std::string &path) {
  const std::vector<unsigned char> bytes = detail::ReadAllBytes(path);
  const unsigned char *p = bytes.data();
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw Error(Errc::kMalformedHeader, path + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const unsigned char *chunk = p + pos;
    const std::uint32_t size = detail::ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > n)
        throw Error(Errc::kMalformedHeader, path + ": short fmt chunk");
      format = detail::ReadU16(p + body);
      channels = detail::ReadU16(p + body + 2);
      rate = detail::ReadU32(p + body + 4);
      bits = detail::ReadU16(p + body + 14);
      // WAVE_FORMAT_EXTENSIBLE: the real format tag leads the subformat GUID.
      if (format == 0xFFFE) {
        if (size < 40)
          throw Error(Errc::kMalformedHeader, path + ": short extensible fmt");
        format = detail::ReadU16(p + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt)
        throw Error(Errc::kMalformedHeader, path + ": data before fmt");
      if (channels == 0 || rate == 0)
        throw Error(Errc::kMalformedHeader, path + ": zero channels or rate");
      const bool pcm16 = format == 1 && bits == 16;
      const bool float32 = format == 3 && bits == 32;
      if (!pcm16 && !float32)
        throw Error(Errc::kUnsupportedCodec,
                    path + ": format " + std::to_string(format) + ", " +
                        std::to_string(bits) + " bits");
      const std::size_t avail = std::min<std::size_t>(size, n - body);
      const std::size_t frame_bytes = channels * (bits / 8);
      const std::size_t frames = avail / frame_bytes;
      Waveform w;
      w.sample_rate_hz = static_cast<int>(rate);
      w.samples.resize(channels, static_cast<Eigen::Index>(frames));
      const unsigned char *d = p + body;
      for (std::size_t i = 0; i < frames; ++i) {
        for (std::uint16_t c = 0; c < channels; ++c) {
          const unsigned char *s = d + i * frame_bytes + c * (bits / 8);
          double v;
          if (pcm16) {
            v = static_cast<std::int16_t>(detail::ReadU16(s)) / 32768.0;
          } else {
            v = detail::BitsToFloat(detail::ReadU32(s));
          }
          w.samples(c, static_cast<Eigen::Index>(i)) = v;
        }
      }
      return w;
    }
    pos = body + size + (size & 1);
  }
  throw Error(Errc::kMalformedHeader, path + ": no data chunk");
}

inline std::int16_t QuantizePcm16(double x) {
  const double hi = 1.0 - 1.0 / 32768.0;
  const double clamped = std::clamp(x, -1.0, hi);
  return static_cast<std::int16_t>(std::lround(clamped * 32768.0));
}

inline void WriteWav(const std::string &path, const Waveform &w,
                     WavCodec codec = WavCodec::kFloat32) {
  Validate(w);
  const std::uint16_t channels = static_cast<std::uint16_t>(w.num_channels());
  const std::uint16_t bits = codec == WavCodec::kPcm16 ? 16 : 32;
  const std::uint32_t frames = static_cast<std::uint32_t>(w.num_frames());
  const std::uint32_t data_bytes = frames * channels * (bits / 8);

  std::vector<unsigned char> buf;
  buf.reserve(44 + data_bytes);
  detail::PutTag(&buf, "RIFF");
  detail::PutU32(&buf, 36 + data_bytes);
  detail::PutTag(&buf, "WAVE");
  detail::PutTag(&buf, "fmt ");
  detail::PutU32(&buf, 16);
  detail::PutU16(&buf, codec == WavCodec::kPcm16 ? 1 : 3);
  detail::PutU16(&buf, channels);
  detail::PutU32(&buf, static_cast<std::uint32_t>(w.sample_rate_hz));
  detail::PutU32(&buf, static_cast<std::uint32_t>(w.sample_rate_hz) * channels * (bits / 8));
  detail::PutU16(&buf, static_cast<std::uint16_t>(channels * (bits / 8)));
  detail::PutU16(&buf, bits);
  detail::PutTag(&buf, "data");
  detail::PutU32(&buf, data_bytes);
  for (std::uint32_t i = 0; i < frames; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const double v = w.samples(c, i);
      if (codec == WavCodec::kPcm16) {
        detail::PutU16(&buf, static_cast<std::uint16_t>(QuantizePcm16(v)));
      } else {
        detail::PutU32(&buf, detail::FloatToBits(static_cast<float>(v)));
      }
    }
  }
  detail::WriteAllBytesAtomic(path, buf);
}

// Windowed-sinc resampling. The lowpass cutoff sits at 0.9 of the lower
// Nyquist frequency; the kernel spans 16 zero crossings on either side
// (32 taps per output phase) under a Kaiser window with beta 8.6. Weights
// are renormalized per output sample over the in-range taps, which keeps DC
// exact up to the signal edges.
inline Waveform Resample(const Waveform &w, int target_rate_hz) {
  Validate(w);
  if (target_rate_hz <= 0)
    throw Error(Errc::kInvalidArgument, "target rate must be positive");
  if (target_rate_hz == w.sample_rate_hz) return w;

  constexpr double kBeta = 8.6;
  constexpr double kZeroCrossings = 16.0;
  const double ratio = static_cast<double>(target_rate_hz) / w.sample_rate_hz;
  const double cutoff = 0.9 * std::min(1.0, ratio);
  const double half_width = kZeroCrossings / cutoff;
  const double i0_beta = std::cyl_bessel_i(0.0, kBeta);

  const Eigen::Index in_len = w.num_frames();
  const auto out_len = static_cast<Eigen::Index>(std::llround(in_len * ratio));
  Waveform out;
  out.sample_rate_hz = target_rate_hz;
  out.samples = RealMatrix::Zero(w.num_channels(), out_len);

  std::vector<double> taps;
  for (Eigen::Index n = 0; n < out_len; ++n) {
    const double center = static_cast<double>(n) / ratio;
    const auto first = std::max<Eigen::Index>(
        0, static_cast<Eigen::Index>(std::ceil(center - half_width)));
    const auto last = std::min<Eigen::Index>(
        in_len - 1, static_cast<Eigen::Index>(std::floor(center + half_width)));
    if (last < first) continue;
    taps.assign(static_cast<std::size_t>(last - first + 1), 0.0);
    double norm = 0.0;
    for (Eigen::Index k = first; k <= last; ++k) {
      const double x = center - static_cast<double>(k);
      const double r = x / half_width;
      const double window = std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
      const double arg = M_PI * cutoff * x;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double h = cutoff * sinc * window;
      taps[static_cast<std::size_t>(k - first)] = h;
      norm += h;
    }
    if (std::abs(norm) < 1e-12) continue;
    for (Eigen::Index c = 0; c < w.num_channels(); ++c) {
      double acc = 0.0;
      for (Eigen::Index k = first; k <= last; ++k)
        acc += taps[static_cast<std::size_t>(k - first)] * w.samples(c, k);
      out.samples(c, n) = acc / norm;
    }
  }
  return out;
}

}  // namespace beamkit
