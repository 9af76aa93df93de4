// beamkit/stft.hpp

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
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "beamkit/audio_io.hpp"
#include "beamkit/error.hpp"

namespace beamkit {

using Complex = std::complex<double>;

// 32 ms window, 8 ms hop at 16 kHz. The FFT length equals the window length.
struct StftConfig {
  int window_len = 512;
  int hop = 128;

  int fft_len() const { return window_len; }
  int num_bins() const { return window_len / 2 + 1; }
};

inline void Validate(const StftConfig &cfg) {
  const bool pow2 = cfg.window_len > 0 && (cfg.window_len & (cfg.window_len - 1)) == 0;
  if (!pow2)
    throw Error(Errc::kInvalidArgument, "window_len must be a power of two");
  if (cfg.hop <= 0 || cfg.window_len % cfg.hop != 0)
    throw Error(Errc::kInvalidArgument, "hop must divide window_len");
}

// Periodic hann: w[n] = 0.5 - 0.5 cos(2 pi n / N).
inline std::vector<double> HannWindow(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

// Complex M x T x F tensor, bins contiguous per frame.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(Eigen::Index channels, Eigen::Index frames, StftConfig cfg,
              int sample_rate_hz)
      : channels_(channels),
        frames_(frames),
        bins_(cfg.num_bins()),
        config_(cfg),
        sample_rate_hz_(sample_rate_hz),
        data_(static_cast<std::size_t>(channels * frames * cfg.num_bins())) {}

  Eigen::Index num_channels() const { return channels_; }
  Eigen::Index num_frames() const { return frames_; }
  Eigen::Index num_bins() const { return bins_; }
  const StftConfig &config() const { return config_; }
  int sample_rate_hz() const { return sample_rate_hz_; }

  Complex &operator()(Eigen::Index m, Eigen::Index t, Eigen::Index f) {
    return data_[Offset(m, t, f)];
  }
  const Complex &operator()(Eigen::Index m, Eigen::Index t, Eigen::Index f) const {
    return data_[Offset(m, t, f)];
  }

  std::vector<Complex> &data() { return data_; }
  const std::vector<Complex> &data() const { return data_; }

  bool SameShape(const Spectrogram &o) const {
    return channels_ == o.channels_ && frames_ == o.frames_ && bins_ == o.bins_;
  }

  // Channel `m` as a single-channel spectrogram.
  Spectrogram Channel(Eigen::Index m) const {
    if (m < 0 || m >= channels_)
      throw Error(Errc::kInvalidArgument, "channel " + std::to_string(m) + " out of range");
    Spectrogram out(1, frames_, config_, sample_rate_hz_);
    const auto per = static_cast<std::size_t>(frames_ * bins_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(m * frames_ * bins_), per,
                out.data_.begin());
    return out;
  }

  // M x T snapshot matrix of frequency `f`.
  Eigen::MatrixXcd Bin(Eigen::Index f) const {
    Eigen::MatrixXcd y(channels_, frames_);
    for (Eigen::Index m = 0; m < channels_; ++m)
      for (Eigen::Index t = 0; t < frames_; ++t) y(m, t) = (*this)(m, t, f);
    return y;
  }

  Spectrogram &operator*=(Complex c) {
    for (auto &v : data_) v *= c;
    return *this;
  }

 private:
  std::size_t Offset(Eigen::Index m, Eigen::Index t, Eigen::Index f) const {
    return static_cast<std::size_t>((m * frames_ + t) * bins_ + f);
  }

  Eigen::Index channels_ = 0;
  Eigen::Index frames_ = 0;
  Eigen::Index bins_ = 0;
  StftConfig config_;
  int sample_rate_hz_ = 16000;
  std::vector<Complex> data_;
};

inline Eigen::Index NumFrames(Eigen::Index length, const StftConfig &cfg) {
  if (length < cfg.window_len) return 0;
  return 1 + (length - cfg.window_len) / cfg.hop;
}

// Forward STFT. Frames are windowed by a periodic hann before an unnormalized
// one-sided FFT; the signal is not padded beyond the last full frame.
inline Spectrogram Analyze(const Waveform &w, const StftConfig &cfg = {}) {
  Validate(cfg);
  Validate(w);
  if (w.num_frames() < cfg.window_len)
    throw Error(Errc::kSignalTooShort,
                std::to_string(w.num_frames()) + " < " + std::to_string(cfg.window_len));
  const Eigen::Index frames = NumFrames(w.num_frames(), cfg);
  Spectrogram s(w.num_channels(), frames, cfg, w.sample_rate_hz);
  const std::vector<double> window = HannWindow(cfg.window_len);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(cfg.window_len));
  std::vector<Complex> spec;
  for (Eigen::Index m = 0; m < w.num_channels(); ++m) {
    for (Eigen::Index t = 0; t < frames; ++t) {
      const Eigen::Index start = t * cfg.hop;
      for (int n = 0; n < cfg.window_len; ++n)
        frame[static_cast<std::size_t>(n)] =
            window[static_cast<std::size_t>(n)] * w.samples(m, start + n);
      fft.fwd(spec, frame);
      for (Eigen::Index f = 0; f < s.num_bins(); ++f)
        s(m, t, f) = spec[static_cast<std::size_t>(f)];
    }
  }
  return s;
}

// Inverse STFT by weighted overlap-add with the analysis window, normalized by
// the summed squared window. Samples covered by window_len/hop frames are
// reconstructed exactly. Near the ends the normalizer is floored at 1% of its
// peak, so edge samples fade in and out rather than amplifying whatever a
// modified frame left in its window tail.
inline Waveform Synthesize(const Spectrogram &s) {
  const StftConfig &cfg = s.config();
  Validate(cfg);
  if (s.num_bins() != cfg.num_bins() ||
      s.data().size() != static_cast<std::size_t>(s.num_channels() * s.num_frames() * s.num_bins()))
    throw Error(Errc::kShapeMismatch, "spectrogram inconsistent with its config");

  const Eigen::Index length =
      s.num_frames() == 0 ? 0 : (s.num_frames() - 1) * cfg.hop + cfg.window_len;
  const std::vector<double> window = HannWindow(cfg.window_len);
  std::vector<double> norm(static_cast<std::size_t>(length), 0.0);
  for (Eigen::Index t = 0; t < s.num_frames(); ++t)
    for (int n = 0; n < cfg.window_len; ++n)
      norm[static_cast<std::size_t>(t * cfg.hop + n)] +=
          window[static_cast<std::size_t>(n)] * window[static_cast<std::size_t>(n)];
  const double floor = 0.01 * (norm.empty() ? 1.0 : *std::max_element(norm.begin(), norm.end()));

  Waveform w(RealMatrix::Zero(s.num_channels(), length), s.sample_rate_hz());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> spec(static_cast<std::size_t>(s.num_bins()));
  std::vector<double> frame;
  for (Eigen::Index m = 0; m < s.num_channels(); ++m) {
    for (Eigen::Index t = 0; t < s.num_frames(); ++t) {
      for (Eigen::Index f = 0; f < s.num_bins(); ++f)
        spec[static_cast<std::size_t>(f)] = s(m, t, f);
      fft.inv(frame, spec, cfg.fft_len());
      for (int n = 0; n < cfg.window_len; ++n)
        w.samples(m, t * cfg.hop + n) +=
            window[static_cast<std::size_t>(n)] * frame[static_cast<std::size_t>(n)];
    }
    for (Eigen::Index i = 0; i < length; ++i)
      w.samples(m, i) /= std::max(norm[static_cast<std::size_t>(i)], floor);
  }
  return w;
}

// Zero-pads or truncates every channel to `length` frames.
inline Waveform FitLength(const Waveform &w, Eigen::Index length) {
  Waveform out(RealMatrix::Zero(w.num_channels(), length), w.sample_rate_hz);
  const Eigen::Index n = std::min(length, w.num_frames());
  out.samples.leftCols(n) = w.samples.leftCols(n);
  return out;
}

}  // namespace beamkit
