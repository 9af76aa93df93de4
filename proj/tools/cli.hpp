// tools/cli.hpp

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
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "beamkit/beamkit.hpp"

namespace beamkit::cli {

// Exit codes.
constexpr int kOk = 0;
constexpr int kUsageError = 1;
constexpr int kProcessingError = 2;

struct MixArgs {
  std::string speech;
  std::vector<std::string> distractors;
  double snr_db = -3.0;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> ambient_seed;
  double ambient_db = -20.0;
  bool no_ambient = false;
  double duration_s = 9.0;
  std::string geometry = "ears8";
  double spacing = 0.05;
  int rate = 16000;
  std::string out;
};

struct CacgmmArgs {
  int components = 2;
  int iters = 30;
  std::uint64_t seed = 0;
};

struct ExtractArgs {
  std::string in;
  CacgmmArgs cacgmm;
  Eigen::Index reference = 0;
  int rate = 16000;
  std::string out;
  std::string mask_out;
};

struct EnhanceArgs {
  std::string in;
  std::string masker1 = "cacgmm";
  std::string masker2 = "cacgmm";
  double alpha = 0.2;
  std::string cov_mode = "complement";
  CacgmmArgs cacgmm;
  Eigen::Index reference = 0;
  int rate = 16000;
  std::string out;
  std::string dump_stages;
};

struct EvalArgs {
  std::string est;
  std::string ref;
  std::string mix;
  std::string mask;
  std::string clip;
  Eigen::Index channel = 0;
};

namespace detail {

inline Waveform AtRate(const Waveform &w, int rate) {
  return w.sample_rate_hz == rate ? w : Resample(w, rate);
}

inline CacgmmConfig ToConfig(const CacgmmArgs &a) {
  CacgmmConfig c;
  c.components = a.components;
  c.max_iters = a.iters;
  c.seed = a.seed;
  return c;
}

inline void WriteText(const std::string &path, const std::string &text) {
  beamkit::detail::WriteAllBytesAtomic(path, std::vector<unsigned char>(text.begin(), text.end()));
}

// Usage problems detected after parsing but before any file is touched.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MaskerSpec {
  enum class Kind { kOracle, kCacgmm, kFile } kind;
  std::string path;
};

inline MaskerSpec ParseMasker(const std::string &spec) {
  if (spec == "cacgmm") return {MaskerSpec::Kind::kCacgmm, {}};
  if (spec.rfind("oracle:", 0) == 0 && spec.size() > 7) return {MaskerSpec::Kind::kOracle, spec.substr(7)};
  if (spec.rfind("file:", 0) == 0 && spec.size() > 5) return {MaskerSpec::Kind::kFile, spec.substr(5)};
  throw UsageError("masker must be oracle:<dir>, cacgmm or file:<msk>, got '" + spec + "'");
}

inline MaskProvider BuildMasker(const MaskerSpec &spec, const EnhanceArgs &args,
                                const StftConfig &stft) {
  switch (spec.kind) {
    case MaskerSpec::Kind::kCacgmm:
      return CacgmmMasker{ToConfig(args.cacgmm), args.reference};
    case MaskerSpec::Kind::kFile:
      return FileMasker{spec.path};
    case MaskerSpec::Kind::kOracle: {
      const Scene scene = LoadScene(spec.path);
      const Waveform speech = AtRate(scene.speech(), args.rate);
      const Waveform noise = AtRate(scene.Noise(), args.rate);
      return OracleMasker{Analyze(speech, stft), Analyze(noise, stft), args.reference};
    }
  }
  throw UsageError("unknown masker");
}

inline ArrayGeometry BuildGeometry(const MixArgs &a) {
  if (a.geometry == "ears8") return EarArrays(a.rate);
  if (a.geometry == "square4") return SquareArray(a.spacing, a.rate);
  if (a.geometry.rfind("linear", 0) == 0) {
    const int mics = std::stoi(a.geometry.substr(6));
    return LinearArray(mics, a.spacing, a.rate);
  }
  throw UsageError("unknown geometry '" + a.geometry + "'");
}

inline Waveform MonoSource(const std::string &path, int rate) {
  const Waveform w = ReadWav(path);
  return AtRate(w.num_channels() == 1 ? w : w.channel(0), rate);
}

inline int RunMix(const MixArgs &a, std::ostream &out) {
  const ArrayGeometry geom = BuildGeometry(a);
  const Waveform speech = MonoSource(a.speech, a.rate);
  std::vector<Waveform> distractors;
  for (const auto &p : a.distractors) distractors.push_back(MonoSource(p, a.rate));
  SceneOptions opts;
  opts.snr_db = a.snr_db;
  opts.rng_seed = a.seed;
  opts.ambient_seed = a.ambient_seed.value_or(a.seed);
  opts.ambient_rel_db = a.no_ambient ? std::nullopt : std::optional<double>(a.ambient_db);
  opts.duration_s = a.duration_s;
  const Scene scene = MakeScene(speech, distractors, geom, opts);
  SaveScene(a.out, scene);
  nlohmann::ordered_json j;
  j["scene"] = a.out;
  j["num_channels"] = scene.mixture.num_channels();
  j["num_frames"] = scene.mixture.num_frames();
  j["speech_index"] = scene.speech_index;
  out << j.dump() << "\n";
  return kOk;
}

inline int RunExtract(const ExtractArgs &a, std::ostream &out) {
  const Waveform rec = AtRate(ReadWav(a.in), a.rate);
  TargetConfig cfg;
  cfg.cacgmm = ToConfig(a.cacgmm);
  cfg.reference = a.reference;
  const TargetResult r = MakeTarget(rec, cfg);
  WriteWav(a.out, r.target, WavCodec::kFloat32);
  if (!a.mask_out.empty()) WriteMask(a.mask_out, r.extraction.mask);
  nlohmann::ordered_json j;
  j["out"] = a.out;
  j["speech_component"] = r.extraction.speech_component;
  j["final_loglik"] = r.extraction.state.loglik_history.back();
  out << j.dump() << "\n";
  return kOk;
}

inline int RunEnhance(const EnhanceArgs &a, std::ostream &out) {
  const Waveform y = AtRate(ReadWav(a.in), a.rate);
  PipelineConfig cfg;
  cfg.alpha = a.alpha;
  cfg.reference = a.reference;
  cfg.cov_mode = a.cov_mode == "subtract" ? CovMode::kSubtract : CovMode::kComplement;
  cfg.first_masker = BuildMasker(ParseMasker(a.masker1), a, cfg.stft);
  cfg.second_masker = BuildMasker(ParseMasker(a.masker2), a, cfg.stft);
  const EnhanceResult r = Enhance(y, cfg);
  WriteWav(a.out, r.output, WavCodec::kFloat32);
  if (!a.dump_stages.empty()) {
    const std::filesystem::path dir(a.dump_stages);
    std::filesystem::create_directories(dir);
    const Eigen::Index n = y.num_frames();
    WriteMask((dir / "first_mask.msk").string(), r.first_mask);
    WriteMask((dir / "second_mask.msk").string(), r.second_mask);
    WriteWav((dir / "first_masked.wav").string(), FitLength(Synthesize(r.first_masked), n));
    WriteWav((dir / "stacked.wav").string(), FitLength(Synthesize(r.stacked), n));
    WriteWav((dir / "beamformed.wav").string(), FitLength(Synthesize(r.beamformed), n));
    WriteWav((dir / "masked.wav").string(), FitLength(Synthesize(r.masked), n));
    WriteWav((dir / "remixed.wav").string(), r.output);
  }
  nlohmann::ordered_json j;
  j["out"] = a.out;
  j["num_frames"] = r.output.num_frames();
  out << j.dump() << "\n";
  return kOk;
}

inline int RunEval(const EvalArgs &a, std::ostream &out, std::ostream &err) {
  const Waveform est_all = ReadWav(a.est), ref_all = ReadWav(a.ref);
  auto pick = [&](const Waveform &w) { return w.num_channels() == 1 ? w : w.channel(a.channel); };
  Waveform est = pick(est_all), ref = pick(ref_all);
  std::optional<Waveform> mix;
  if (!a.mix.empty()) mix = pick(ReadWav(a.mix));
  Eigen::Index n = std::min(est.num_frames(), ref.num_frames());
  if (mix) n = std::min(n, mix->num_frames());
  if (est.num_frames() != ref.num_frames() || (mix && mix->num_frames() != ref.num_frames()))
    err << "beamkit eval: lengths differ, comparing the first " << n << " samples\n";
  est = FitLength(est, n);
  ref = FitLength(ref, n);

  EvalReport report;
  report.clip = a.clip.empty() ? std::filesystem::path(a.est).filename().string() : a.clip;
  report.si_snr_db = SiSnr(est, ref);
  report.snr_db = Snr(est, ref);
  if (mix) {
    *mix = FitLength(*mix, n);
    report.si_snr_improvement_db = report.si_snr_db - SiSnr(*mix, ref);
    if (!a.mask.empty()) {
      const Mask m = ReadMask(a.mask);
      report.mask_loss = MaskLoss(Analyze(*mix), m, Analyze(ref));
    }
  }
  out << ToJsonLine(report);
  return kOk;
}

// Turns config-file entries into argv tokens for options the user did not
// pass. Entries nested under the subcommand name win over top-level ones.
inline std::vector<std::string> ConfigArgs(const nlohmann::json &config, const CLI::App &sub,
                                           const std::vector<std::string> &user_args) {
  nlohmann::json merged = nlohmann::json::object();
  for (const auto &[key, value] : config.items())
    if (!value.is_object()) merged[key] = value;
  if (config.contains(sub.get_name()) && config[sub.get_name()].is_object())
    for (const auto &[key, value] : config[sub.get_name()].items()) merged[key] = value;

  std::vector<std::string> args;
  for (const auto &[key, value] : merged.items()) {
    const std::string flag = "--" + key;
    if (sub.get_option_no_throw(flag) == nullptr) continue;
    const bool given = std::any_of(user_args.begin(), user_args.end(), [&](const std::string &a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    auto scalar = [](const nlohmann::json &v) {
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      args.push_back(flag);
      for (const auto &v : value) args.push_back(scalar(v));
    } else {
      args.push_back(flag);
      args.push_back(scalar(value));
    }
  }
  return args;
}

}  // namespace detail

// Parses argv, runs the named subcommand and returns the process exit code.
// Results go to `out`, diagnostics to `err`.
inline int Dispatch(int argc, const char *const *argv, std::ostream &out = std::cout,
                    std::ostream &err = std::cerr) {
  CLI::App app{"beamkit: multichannel speech denoising with cACGMM clustering and mask-based MVDR"};
  app.name("beamkit");
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON file of flag defaults (flags take precedence)")
      ->check(CLI::ExistingFile);

  MixArgs mix;
  auto *mix_cmd = app.add_subcommand("mix", "Generate a synthetic multichannel scene directory");
  mix_cmd->add_option("--speech", mix.speech, "Speech source WAV")->required();
  mix_cmd->add_option("--distractors", mix.distractors, "Distractor source WAVs")->required();
  mix_cmd->add_option("--snr-db", mix.snr_db, "Speech-to-noise ratio of the mixture")->capture_default_str();
  mix_cmd->add_option("--seed", mix.seed, "Direction and level seed")->capture_default_str();
  mix_cmd->add_option("--ambient-seed", mix.ambient_seed, "Ambient noise seed (defaults to --seed)");
  mix_cmd->add_option("--ambient-db", mix.ambient_db, "Ambient level relative to speech")->capture_default_str();
  mix_cmd->add_flag("--no-ambient", mix.no_ambient, "Disable diffuse ambient noise");
  mix_cmd->add_option("--duration", mix.duration_s, "Scene length in seconds")->capture_default_str();
  mix_cmd->add_option("--geometry", mix.geometry, "ears8, square4 or linear<M>")->capture_default_str();
  mix_cmd->add_option("--spacing", mix.spacing, "Mic spacing for square4/linear (m)")->capture_default_str();
  mix_cmd->add_option("--rate", mix.rate, "Scene sample rate")->capture_default_str();
  mix_cmd->add_option("--out", mix.out, "Output scene directory")->required();

  ExtractArgs ex;
  auto *ex_cmd = app.add_subcommand("extract", "cACGMM pseudo-target extraction");
  ex_cmd->add_option("--in", ex.in, "Multichannel recording WAV")->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--components", ex.cacgmm.components, "Mixture components K")->capture_default_str()->check(CLI::Range(1, 6));
  ex_cmd->add_option("--iters", ex.cacgmm.iters, "EM iterations")->capture_default_str()->check(CLI::PositiveNumber);
  ex_cmd->add_option("--seed", ex.cacgmm.seed, "Initialization seed")->capture_default_str();
  ex_cmd->add_option("--reference", ex.reference, "Reference channel")->capture_default_str();
  ex_cmd->add_option("--rate", ex.rate, "Processing sample rate")->capture_default_str()->check(CLI::PositiveNumber);
  ex_cmd->add_option("--out", ex.out, "Output WAV")->required();
  ex_cmd->add_option("--mask-out", ex.mask_out, "Write the speech mask (MSK1)");

  EnhanceArgs en;
  auto *en_cmd = app.add_subcommand("enhance", "Mask -> MVDR -> mask -> remix enhancement");
  en_cmd->add_option("--in", en.in, "Multichannel mixture WAV")->required()->check(CLI::ExistingFile);
  en_cmd->add_option("--masker1", en.masker1, "oracle:<scene-dir>, cacgmm or file:<msk>")->capture_default_str();
  en_cmd->add_option("--masker2", en.masker2, "oracle:<scene-dir>, cacgmm or file:<msk>")->capture_default_str();
  en_cmd->add_option("--alpha", en.alpha, "Beamformer share of the remix")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  en_cmd->add_option("--cov-mode", en.cov_mode, "Noise covariance estimator")->capture_default_str()->check(CLI::IsMember({"complement", "subtract"}));
  en_cmd->add_option("--components", en.cacgmm.components, "cACGMM components")->capture_default_str()->check(CLI::Range(1, 6));
  en_cmd->add_option("--iters", en.cacgmm.iters, "cACGMM EM iterations")->capture_default_str()->check(CLI::PositiveNumber);
  en_cmd->add_option("--seed", en.cacgmm.seed, "cACGMM seed")->capture_default_str();
  en_cmd->add_option("--reference", en.reference, "Reference channel")->capture_default_str();
  en_cmd->add_option("--rate", en.rate, "Processing sample rate")->capture_default_str()->check(CLI::PositiveNumber);
  en_cmd->add_option("--out", en.out, "Output WAV")->required();
  en_cmd->add_option("--dump-stages", en.dump_stages, "Directory for intermediate masks and signals");

  EvalArgs ev;
  auto *ev_cmd = app.add_subcommand("eval", "Objective metrics as one JSON line");
  ev_cmd->add_option("--est", ev.est, "Estimate WAV")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--ref", ev.ref, "Reference WAV")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--mix", ev.mix, "Unprocessed mixture WAV")->check(CLI::ExistingFile);
  ev_cmd->add_option("--mask", ev.mask, "MSK1 mask for the mask loss (needs --mix)")->check(CLI::ExistingFile);
  ev_cmd->add_option("--clip", ev.clip, "Clip identifier for the report");
  ev_cmd->add_option("--channel", ev.channel, "Channel used from multichannel files")->capture_default_str();

  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> full = args;
  // Config entries are appended as extra tokens for flags not given on the
  // command line, so explicit flags always win.
  std::string scanned_config;
  CLI::App *scanned_sub = nullptr;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) scanned_config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) scanned_config = args[i].substr(9);
    if (scanned_sub == nullptr) scanned_sub = app.get_subcommand_no_throw(args[i]);
  }
  if (!scanned_config.empty() && scanned_sub != nullptr) {
    std::ifstream is(scanned_config);
    if (!is) {
      err << "beamkit: cannot open config file " << scanned_config << "\n";
      return kUsageError;
    }
    nlohmann::json config;
    try {
      config = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception &e) {
      err << "beamkit: bad config file: " << e.what() << "\n";
      return kUsageError;
    }
    if (!config.is_object()) {
      err << "beamkit: config file must hold a JSON object\n";
      return kUsageError;
    }
    const auto extra = detail::ConfigArgs(config, *scanned_sub, args);
    full.insert(full.end(), extra.begin(), extra.end());
  }

  try {
    app.parse(std::vector<std::string>(full.rbegin(), full.rend()));
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << "beamkit: " << e.what() << "\n" << "Run with --help for usage.\n";
    return kUsageError;
  }

  try {
    if (mix_cmd->parsed()) {
      detail::BuildGeometry(mix);
      return detail::RunMix(mix, out);
    }
    if (ex_cmd->parsed()) return detail::RunExtract(ex, out);
    if (en_cmd->parsed()) {
      detail::ParseMasker(en.masker1);
      detail::ParseMasker(en.masker2);
      return detail::RunEnhance(en, out);
    }
    if (ev_cmd->parsed()) {
      if (!ev.mask.empty() && ev.mix.empty()) throw detail::UsageError("--mask requires --mix");
      return detail::RunEval(ev, out, err);
    }
  } catch (const detail::UsageError &e) {
    err << "beamkit: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error &e) {
    err << "beamkit: " << e.what() << "\n";
    return kProcessingError;
  } catch (const std::exception &e) {
    err << "beamkit: " << e.what() << "\n";
    return kProcessingError;
  }
  err << "beamkit: no subcommand\n";
  return kUsageError;
}

}  // namespace beamkit::cli
