// beamkit/scenegen.hpp

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
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "beamkit/audio_io.hpp"
#include "beamkit/error.hpp"

namespace beamkit {

struct ArrayGeometry {
  std::vector<Eigen::Vector3d> mic_positions;  // meters
  double sound_speed = 343.0;                  // m/s
  int sample_rate_hz = 16000;

  Eigen::Index num_mics() const { return static_cast<Eigen::Index>(mic_positions.size()); }

  Eigen::Vector3d Centroid() const {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto &p : mic_positions) c += p;
    return mic_positions.empty() ? c : Eigen::Vector3d(c / static_cast<double>(mic_positions.size()));
  }

  double Radius() const {
    const Eigen::Vector3d c = Centroid();
    double r = 0.0;
    for (const auto &p : mic_positions) r = std::max(r, (p - c).norm());
    return r;
  }
};

inline void Validate(const ArrayGeometry &g) {
  if (g.mic_positions.empty()) throw Error(Errc::kInvalidArgument, "array has no microphones");
  if (!(g.sound_speed > 0.0) || g.sample_rate_hz <= 0)
    throw Error(Errc::kInvalidArgument, "sound speed and sample rate must be positive");
  for (std::size_t i = 0; i < g.mic_positions.size(); ++i)
    for (std::size_t j = i + 1; j < g.mic_positions.size(); ++j)
      if ((g.mic_positions[i] - g.mic_positions[j]).norm() < 1e-9)
        throw Error(Errc::kInvalidArgument, "microphone positions must be distinct");
}

// Four mics on the corners of a horizontal square of side `side`.
inline ArrayGeometry SquareArray(double side, int sample_rate_hz = 16000) {
  const double h = side / 2.0;
  return {{{-h, -h, 0.0}, {h, -h, 0.0}, {h, h, 0.0}, {-h, h, 0.0}}, 343.0, sample_rate_hz};
}

// Two 4-mic clusters (2 cm squares) 18 cm apart, one at each side of a head.
inline ArrayGeometry EarArrays(int sample_rate_hz = 16000) {
  ArrayGeometry g{{}, 343.0, sample_rate_hz};
  for (double side : {-0.09, 0.09})
    for (const auto &p : SquareArray(0.02).mic_positions)
      g.mic_positions.push_back(p + Eigen::Vector3d(0.0, side, 0.0));
  return g;
}

// M mics along the y axis.
inline ArrayGeometry LinearArray(int mics, double spacing, int sample_rate_hz = 16000) {
  ArrayGeometry g{{}, 343.0, sample_rate_hz};
  for (int i = 0; i < mics; ++i) g.mic_positions.emplace_back(0.0, i * spacing, 0.0);
  return g;
}

// Direction measured from the array centroid; azimuth counterclockwise from
// +x in the horizontal plane.
struct SourceDirection {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  double distance_m = 2.0;

  Eigen::Vector3d Offset() const {
    const double az = azimuth_deg * std::numbers::pi / 180.0;
    const double el = elevation_deg * std::numbers::pi / 180.0;
    return distance_m * Eigen::Vector3d(std::cos(el) * std::cos(az),
                                        std::cos(el) * std::sin(az), std::sin(el));
  }
};

namespace detail {

// x delayed by `delay` samples (may be negative or fractional), Kaiser
// windowed sinc with 16 taps on each side.
inline void FractionalDelay(std::span<const double> x, double delay, double gain,
                            std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (std::abs(delay - std::round(delay)) < 1e-9) {
    const auto shift = static_cast<std::ptrdiff_t>(std::llround(delay));
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const std::ptrdiff_t j = i - shift;
      out[static_cast<std::size_t>(i)] = (j >= 0 && j < n) ? gain * x[static_cast<std::size_t>(j)] : 0.0;
    }
    return;
  }
  constexpr int kHalf = 16;
  constexpr double kBeta = 8.0;
  const double i0 = std::cyl_bessel_i(0.0, kBeta);
  const auto whole = static_cast<std::ptrdiff_t>(std::floor(delay));
  const double frac = delay - static_cast<double>(whole);
  std::vector<double> taps(2 * kHalf);
  // out[i] = sum_j x[j] h(i - delay - j); with j = i - whole - k the
  // argument is k - frac for k in [-kHalf + 1, kHalf].
  for (int k = -kHalf + 1; k <= kHalf; ++k) {
    const double u = k - frac;
    const double r = u / (kHalf + 1);
    const double win = std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0;
    const double arg = std::numbers::pi * u;
    taps[static_cast<std::size_t>(k + kHalf - 1)] = (std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg) * win;
  }
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -kHalf + 1; k <= kHalf; ++k) {
      const std::ptrdiff_t j = i - whole - k;
      if (j >= 0 && j < n) acc += taps[static_cast<std::size_t>(k + kHalf - 1)] * x[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = gain * acc;
  }
}

inline double MeanPower(const Waveform &w) {
  return w.samples.size() == 0 ? 0.0 : w.samples.squaredNorm() / static_cast<double>(w.samples.size());
}

}  // namespace detail

// Anechoic far-field image of a mono source at every microphone: delay
// (r_m - r_0) / c and gain r_0 / r_m relative to mic 0.
inline Waveform Steer(const Waveform &src, const ArrayGeometry &geom, const SourceDirection &dir) {
  Validate(geom);
  Validate(src);
  if (src.num_channels() != 1) throw Error(Errc::kInvalidArgument, "steer expects a mono source");
  if (!(dir.distance_m > geom.Radius()))
    throw Error(Errc::kSourceInsideArray, "source distance " + std::to_string(dir.distance_m) +
                                              " m within array radius");
  const Eigen::Vector3d source = geom.Centroid() + dir.Offset();
  const double r0 = (source - geom.mic_positions[0]).norm();
  Waveform out(RealMatrix::Zero(geom.num_mics(), src.num_frames()), src.sample_rate_hz);
  const std::span<const double> x(src.samples.data(), static_cast<std::size_t>(src.num_frames()));
  for (Eigen::Index m = 0; m < geom.num_mics(); ++m) {
    const double rm = (source - geom.mic_positions[static_cast<std::size_t>(m)]).norm();
    const double delay = (rm - r0) / geom.sound_speed * src.sample_rate_hz;
    const double gain = m == 0 ? 1.0 : r0 / rm;
    detail::FractionalDelay(x, delay, gain,
                            std::span<double>(out.samples.row(m).data(),
                                              static_cast<std::size_t>(src.num_frames())));
  }
  return out;
}

struct SnrMix {
  Waveform mixture;
  double gain = 1.0;  // applied to the noise
};

// speech + g * noise with g chosen so that the power ratio (averaged over
// all channels and samples) equals snr_db.
inline SnrMix MixAtSnr(const Waveform &speech, const Waveform &noise, double snr_db) {
  if (speech.samples.rows() != noise.samples.rows() || speech.samples.cols() != noise.samples.cols())
    throw Error(Errc::kShapeMismatch, "speech and noise shapes differ");
  const double ps = detail::MeanPower(speech), pn = detail::MeanPower(noise);
  if (!(ps > 0.0) || !(pn > 0.0)) throw Error(Errc::kZeroPower, "mix_at_snr input has zero power");
  SnrMix r;
  r.gain = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  r.mixture = Waveform(speech.samples + r.gain * noise.samples, speech.sample_rate_hz);
  return r;
}

struct Stem {
  std::string label;
  Waveform audio;                          // M channels
  std::optional<SourceDirection> direction;  // empty for diffuse ambient
  double snr_vs_speech_db = 0.0;
};

struct Scene {
  Waveform mixture;
  std::vector<Stem> stems;
  Eigen::Index speech_index = 0;
  ArrayGeometry geometry;
  double snr_db = 0.0;
  std::uint64_t rng_seed = 0;
  std::uint64_t ambient_seed = 0;

  const Waveform &speech() const { return stems[static_cast<std::size_t>(speech_index)].audio; }

  // Everything except the speech stem.
  Waveform Noise() const {
    Waveform n(RealMatrix::Zero(mixture.num_channels(), mixture.num_frames()), mixture.sample_rate_hz);
    for (std::size_t k = 0; k < stems.size(); ++k)
      if (static_cast<Eigen::Index>(k) != speech_index) n.samples += stems[k].audio.samples;
    return n;
  }
};

struct SceneOptions {
  double snr_db = -3.0;
  std::uint64_t rng_seed = 0;
  std::uint64_t ambient_seed = 0;
  // Ambient power relative to the speech image; nullopt disables it.
  std::optional<double> ambient_rel_db = -20.0;
  double duration_s = 9.0;
  // Minimum azimuth separation between any two directional sources.
  double min_separation_deg = 30.0;
  double min_distance_m = 1.0;
  double max_distance_m = 3.0;
  double max_elevation_deg = 15.0;
  // Distractor levels vary uniformly within +-this around the speech level.
  double distractor_spread_db = 5.0;
};

namespace detail {

inline Waveform TileTo(const Waveform &src, Eigen::Index length) {
  if (src.num_frames() == 0) throw Error(Errc::kZeroPower, "empty source clip");
  Waveform out(RealMatrix(1, length), src.sample_rate_hz);
  for (Eigen::Index i = 0; i < length; ++i) out.samples(0, i) = src.samples(0, i % src.num_frames());
  return out;
}

inline double AzimuthGap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

}  // namespace detail

// One speech source and the distractors steered to random, well separated
// directions, plus diffuse Gaussian ambient noise, mixed so the speech image
// sits at opts.snr_db against everything else. Sources are tiled or cut to
// opts.duration_s.
inline Scene MakeScene(const Waveform &speech_src, const std::vector<Waveform> &distractor_srcs,
                       const ArrayGeometry &geom, const SceneOptions &opts) {
  Validate(geom);
  const auto length = static_cast<Eigen::Index>(std::llround(opts.duration_s * geom.sample_rate_hz));
  if (length <= 0) throw Error(Errc::kInvalidArgument, "scene duration must be positive");
  auto mono = [&](const Waveform &w) {
    if (w.sample_rate_hz != geom.sample_rate_hz)
      throw Error(Errc::kInvalidArgument, "source rate differs from array rate");
    return detail::TileTo(w.num_channels() == 1 ? w : w.channel(0), length);
  };

  std::mt19937_64 rng(opts.rng_seed);
  std::uniform_real_distribution<double> azimuth(0.0, 360.0);
  std::uniform_real_distribution<double> elevation(-opts.max_elevation_deg, opts.max_elevation_deg);
  std::uniform_real_distribution<double> distance(opts.min_distance_m, opts.max_distance_m);
  std::uniform_real_distribution<double> level(-opts.distractor_spread_db, opts.distractor_spread_db);

  std::vector<SourceDirection> dirs;
  auto draw_direction = [&]() {
    SourceDirection d;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      d.azimuth_deg = azimuth(rng);
      const bool ok = std::all_of(dirs.begin(), dirs.end(), [&](const SourceDirection &o) {
        return detail::AzimuthGap(o.azimuth_deg, d.azimuth_deg) >= opts.min_separation_deg;
      });
      if (ok) break;
    }
    d.elevation_deg = elevation(rng);
    d.distance_m = std::max(distance(rng), geom.Radius() * 2.0 + 1e-3);
    dirs.push_back(d);
    return d;
  };

  Scene scene;
  scene.geometry = geom;
  scene.snr_db = opts.snr_db;
  scene.rng_seed = opts.rng_seed;
  scene.ambient_seed = opts.ambient_seed;

  const SourceDirection speech_dir = draw_direction();
  Waveform speech = Steer(mono(speech_src), geom, speech_dir);
  const double speech_power = detail::MeanPower(speech);
  if (!(speech_power > 0.0)) throw Error(Errc::kZeroPower, "speech source is silent");

  std::vector<Stem> noise_stems;
  for (std::size_t i = 0; i < distractor_srcs.size(); ++i) {
    const SourceDirection dir = draw_direction();
    Waveform img = Steer(mono(distractor_srcs[i]), geom, dir);
    const double p = detail::MeanPower(img);
    if (!(p > 0.0)) throw Error(Errc::kZeroPower, "distractor " + std::to_string(i) + " is silent");
    img.samples *= std::sqrt(speech_power / p * std::pow(10.0, level(rng) / 10.0));
    noise_stems.push_back({"distractor_" + std::to_string(i + 1), std::move(img), dir, 0.0});
  }
  if (opts.ambient_rel_db) {
    std::mt19937_64 amb_rng(opts.ambient_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Waveform amb(RealMatrix(geom.num_mics(), length), geom.sample_rate_hz);
    for (Eigen::Index m = 0; m < amb.num_channels(); ++m)
      for (Eigen::Index i = 0; i < length; ++i) amb.samples(m, i) = gauss(amb_rng);
    amb.samples *= std::sqrt(speech_power * std::pow(10.0, *opts.ambient_rel_db / 10.0) /
                             detail::MeanPower(amb));
    noise_stems.push_back({"ambient", std::move(amb), std::nullopt, 0.0});
  }
  if (noise_stems.empty()) throw Error(Errc::kZeroPower, "scene has no noise sources");

  Waveform bed(RealMatrix::Zero(geom.num_mics(), length), geom.sample_rate_hz);
  for (const auto &s : noise_stems) bed.samples += s.audio.samples;
  const SnrMix mix = MixAtSnr(speech, bed, opts.snr_db);

  scene.stems.push_back({"speech", speech, speech_dir, 0.0});
  scene.speech_index = 0;
  for (auto &s : noise_stems) {
    s.audio.samples *= mix.gain;
    s.snr_vs_speech_db = 10.0 * std::log10(speech_power / detail::MeanPower(s.audio));
    scene.stems.push_back(std::move(s));
  }
  scene.mixture = Waveform(RealMatrix::Zero(geom.num_mics(), length), geom.sample_rate_hz);
  for (const auto &s : scene.stems) scene.mixture.samples += s.audio.samples;
  return scene;
}

// Persists `mixture.wav`, `stem_<k>.wav` (float32) and `scene.json`.
inline void SaveScene(const std::string &dir, const Scene &scene) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::kUnwritablePath, dir);
  const std::filesystem::path root(dir);
  WriteWav((root / "mixture.wav").string(), scene.mixture, WavCodec::kFloat32);
  nlohmann::ordered_json j;
  j["sample_rate_hz"] = scene.mixture.sample_rate_hz;
  j["num_channels"] = scene.mixture.num_channels();
  j["speech_index"] = scene.speech_index;
  j["snr_db"] = scene.snr_db;
  j["rng_seed"] = scene.rng_seed;
  j["ambient_seed"] = scene.ambient_seed;
  j["sound_speed"] = scene.geometry.sound_speed;
  j["mic_positions"] = nlohmann::ordered_json::array();
  for (const auto &p : scene.geometry.mic_positions) j["mic_positions"].push_back({p.x(), p.y(), p.z()});
  j["stems"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < scene.stems.size(); ++k) {
    const Stem &s = scene.stems[k];
    const std::string file = "stem_" + std::to_string(k) + ".wav";
    WriteWav((root / file).string(), s.audio, WavCodec::kFloat32);
    nlohmann::ordered_json e;
    e["label"] = s.label;
    e["file"] = file;
    if (s.direction) {
      e["azimuth_deg"] = s.direction->azimuth_deg;
      e["elevation_deg"] = s.direction->elevation_deg;
      e["distance_m"] = s.direction->distance_m;
    } else {
      e["azimuth_deg"] = nullptr;
      e["elevation_deg"] = nullptr;
      e["distance_m"] = nullptr;
    }
    e["snr_vs_speech_db"] = s.snr_vs_speech_db;
    j["stems"].push_back(e);
  }
  const std::string text = j.dump(2) + "\n";
  detail::WriteAllBytesAtomic((root / "scene.json").string(),
                              std::vector<unsigned char>(text.begin(), text.end()));
}

inline Scene LoadScene(const std::string &dir) {
  const std::filesystem::path root(dir);
  const auto bytes = detail::ReadAllBytes((root / "scene.json").string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception &e) {
    throw Error(Errc::kMalformedHeader, (root / "scene.json").string() + ": " + e.what());
  }
  try {
    Scene scene;
    scene.mixture = ReadWav((root / "mixture.wav").string());
    scene.speech_index = j.at("speech_index").get<Eigen::Index>();
    scene.snr_db = j.at("snr_db").get<double>();
    scene.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    scene.ambient_seed = j.at("ambient_seed").get<std::uint64_t>();
    scene.geometry.sound_speed = j.at("sound_speed").get<double>();
    scene.geometry.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    for (const auto &p : j.at("mic_positions"))
      scene.geometry.mic_positions.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                                                p.at(2).get<double>());
    for (const auto &e : j.at("stems")) {
      Stem s;
      s.label = e.at("label").get<std::string>();
      s.audio = ReadWav((root / e.at("file").get<std::string>()).string());
      if (!e.at("azimuth_deg").is_null())
        s.direction = SourceDirection{e.at("azimuth_deg").get<double>(), e.at("elevation_deg").get<double>(),
                                      e.at("distance_m").get<double>()};
      s.snr_vs_speech_db = e.at("snr_vs_speech_db").get<double>();
      scene.stems.push_back(std::move(s));
    }
    if (scene.speech_index < 0 || scene.speech_index >= static_cast<Eigen::Index>(scene.stems.size()))
      throw Error(Errc::kMalformedHeader, "speech_index out of range");
    return scene;
  } catch (const nlohmann::json::exception &e) {
    throw Error(Errc::kMalformedHeader, (root / "scene.json").string() + ": " + e.what());
  }
}

}  // namespace beamkit
