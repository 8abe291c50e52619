// Copyright 2026 The DIVE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dive/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "dive/checkpoint.hpp"
#include "dive/cli/corpus.hpp"
#include "dive/cli/trainer.hpp"
#include "dive/data.hpp"
#include "dive/error.hpp"
#include "dive/eval.hpp"
#include "dive/synth.hpp"

namespace dive::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string checkpoint_name(std::int64_t step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "ckpt_%08lld.dive", static_cast<long long>(step));
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InvalidArgument("cannot create directory " + dir.string());
}

std::string score_row(const std::string& name, const DerBreakdown& d) {
  std::string der_text = "nan";
  if (d.scored_speech_s > 0) der_text = fixed(100.0 * d.der(), 2);
  return name + "\t" + der_text + "\t" + fixed(d.missed_s, 3) + "\t" + fixed(d.false_alarm_s, 3) +
         "\t" + fixed(d.confusion_s, 3);
}

}  // namespace

int cmd_synth(const RunConfig& config, std::size_t count, const fs::path& out_dir,
              std::ostream& log) {
  ensure_dir(out_dir);
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "conv_%05zu", i);
    const Conversation conv = synth_conversation(config.synth, derive_seed(config.seed, {i}));
    const fs::path wav = out_dir / (std::string(stem) + ".wav");
    const fs::path rttm = out_dir / (std::string(stem) + ".rttm");
    write_wav(wav, conv.waveform);
    write_rttm(rttm, stem, conv.segments);
    entries.push_back({wav, rttm});
  }
  write_manifest(out_dir / "manifest.tsv", entries);
  log << "synth: wrote " << count << " conversations to " << out_dir.string() << "\n";
  return kOk;
}

int cmd_train(const RunConfig& config, const fs::path& manifest,
              const std::optional<fs::path>& resume, std::ostream& log) {
  config.validate();
  std::vector<Recording> all = load_corpus(manifest, config.model);
  if (all.empty()) throw InvalidArgument("training manifest is empty");
  const Split split = split_validation(all.size(), config.validation_fraction, config.seed);
  std::vector<Recording> train, val;
  for (auto i : split.train) train.push_back(std::move(all[i]));
  for (auto i : split.validation) val.push_back(std::move(all[i]));
  if (config.validation_files > 0 && val.size() > config.validation_files) {
    val.resize(config.validation_files);
  }

  const fs::path out_dir = config.output_dir;
  ensure_dir(out_dir);
  Trainer trainer(config, std::move(train));
  if (resume) {
    trainer.restore(load_checkpoint(*resume));
    log << "train: resumed from " << resume->string() << " at step " << trainer.steps_done() << "\n";
  }
  {
    std::ofstream echo(out_dir / "config.txt");
    echo << config.to_text();
  }
  log << config.to_text();
  log << "train: " << split.train.size() << " training / " << val.size()
      << " validation recordings, " << trainer.model().params().num_values() << " parameters\n";

  const auto mode = resume ? std::ios::app : std::ios::trunc;
  std::ofstream metrics(out_dir / "metrics.log", mode);
  std::ofstream timing(out_dir / "timing.log", mode);
  if (!metrics || !timing) throw InvalidArgument("cannot open logs in " + out_dir.string());

  auto save = [&](const std::string& name) {
    save_checkpoint(out_dir / name, trainer.checkpoint());
  };
  const auto start = std::chrono::steady_clock::now();
  while (trainer.steps_done() < config.total_steps) {
    StepMetrics m;
    try {
      m = trainer.step();
    } catch (const DivergenceError& e) {
      save("last_good.dive");
      metrics << "diverged step=" << e.step() + 1 << "\n";
      log << "train: " << e.what() << "; state before the step kept in last_good.dive\n";
      return kDivergence;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    metrics << format_metrics(m) << "\n";
    timing << "step=" << m.step << " wall_s=" << fixed(wall, 3) << "\n";
    const bool last = m.step == config.total_steps;
    if (!val.empty() && (m.step % config.validate_every == 0 || last)) {
      const auto raw = predict_all(trainer.model(), val);
      const auto hyps = hypotheses(raw, config.median_width);
      const ScoredSet collared = score_hypotheses(val, hyps, config.collar_eval_s);
      const ScoredSet exact = score_hypotheses(val, hyps, 0.0);
      std::string line = "validate step=" + std::to_string(m.step) +
                         " der_collar=" + fixed(100.0 * collared.total.der(), 4) +
                         " der_raw=" + fixed(100.0 * exact.total.der(), 4);
      metrics << line << "\n";
      log << line << "\n";
    }
    if (m.step % config.checkpoint_every == 0 || last) {
      save(checkpoint_name(m.step));
      save("latest.dive");
    }
    metrics.flush();
    timing.flush();
    if (m.step % 50 == 0 || m.step == 1) log << format_metrics(m) << "\n";
  }
  return kOk;
}

int cmd_infer(const InferOptions& options, std::ostream& log) {
  const Checkpoint ckpt = load_checkpoint(options.checkpoint);
  DiveModel<float> model = model_from_checkpoint(ckpt);
  auto run = [&](const fs::path& wav_path, const fs::path& rttm_path) {
    const Waveform wav = read_wav(wav_path);
    const InferenceResult r = model.infer(wav, options.num_speakers, options.median_width);
    const std::string id = wav_path.stem().string();
    write_rttm(rttm_path, id, masks_to_segments(r.labels));
    for (std::size_t i = 0; i < r.confidences.size(); ++i) {
      log << "infer: file=" << id << " speaker=" << r.labels.speakers[i]
          << " confidence=" << fixed(r.confidences[i], 6) << " frame=" << r.argmax_frames[i] << "\n";
    }
  };
  if (options.manifest) {
    ensure_dir(options.out);
    for (const auto& e : read_manifest(*options.manifest)) {
      run(e.wav, options.out / (recording_id(e) + ".rttm"));
    }
  } else if (options.wav) {
    run(*options.wav, options.out);
  } else {
    throw InvalidArgument("infer needs --wav or --manifest");
  }
  return kOk;
}

int cmd_score(const ScoreOptions& options, std::ostream& out, std::ostream& log) {
  std::ostringstream report;
  DerBreakdown total;
  std::vector<double> per_file;
  ContingencyTable table;
  bool missing = false;
  for (const auto& e : read_manifest(options.ref_manifest)) {
    const std::string id = recording_id(e);
    const fs::path hyp_path = options.hyp_dir / (id + ".rttm");
    if (!fs::exists(hyp_path)) {
      log << "score: missing hypothesis for " << id << " (" << hyp_path.string() << ")\n";
      missing = true;
      continue;
    }
    const SegmentList ref = read_reference(e.rttm);
    SegmentList hyp = read_reference(hyp_path);
    if (options.oracle_vad) hyp = restrict_to_speech(hyp, ref);
    ScoringOptions so;
    so.collar_s = options.collar_s;
    so.skip_overlap = options.skip_overlap;
    std::optional<Waveform> wav;
    if (fs::exists(e.wav)) {
      wav = read_wav(e.wav);
      so.duration_s = wav->duration_s();
    }
    const DerBreakdown d = der(ref, hyp, so);
    total += d;
    if (d.scored_speech_s > 0) per_file.push_back(100.0 * d.der());
    report << score_row(id, d) << "\n";
    if (options.contingency && wav) {
      const auto frames = [&](const SegmentList& segs) {
        std::vector<std::string> ids = speaker_ids(segs);
        while (ids.size() < 2) ids.push_back("~pad" + std::to_string(ids.size()));
        ids.resize(2);
        SegmentList kept;
        for (const auto& s : segs) {
          if (s.speaker == ids[0] || s.speaker == ids[1]) kept.push_back(s);
        }
        return frame_labels_from_segments(kept, wav->size(), wav->sample_rate, 16, ids);
      };
      const ContingencyTable t = contingency(frames(ref), frames(hyp));
      for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) table.counts[r][c] += t.counts[r][c];
      }
      table.frames += t.frames;
    }
  }
  report << score_row("ALL", total) << "\n";
  out << report.str();
  if (options.report) {
    std::ofstream f(*options.report);
    f << report.str();
  }
  if (options.cdf && !per_file.empty()) {
    std::ofstream f(*options.cdf);
    f << format_cdf(cumulative_der(per_file));
  }
  if (options.contingency && table.frames > 0) {
    std::array<std::size_t, 4> col{};
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 4; ++c) {
        table.percent[r][c] = 100.0 * table.counts[r][c] / table.frames;
        col[c] += table.counts[r][c];
      }
    }
    for (std::size_t c = 0; c < 4; ++c) table.label_prior[c] = 100.0 * col[c] / table.frames;
    std::ofstream f(*options.contingency);
    f << table.to_text();
  }
  return missing ? kDataError : kOk;
}

int run_main(int argc, char** argv) {
  CLI::App app{"DIVE speaker diarization: synthesize, train, infer, score"};
  app.require_subcommand(1);

  std::string preset = "desk";
  std::string config_file;
  std::vector<std::string> overrides;
  std::map<std::string, std::string> flag_values;
  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--preset", preset, "desk or paper")->capture_default_str();
    cmd->add_option("--config", config_file, "key=value config file");
    cmd->add_option("--set", overrides, "key=value override (repeatable)");
    for (const auto& key : RunConfig::keys()) {
      cmd->add_option("--" + key, flag_values[key], "RunConfig " + key);
    }
  };
  auto build_config = [&]() {
    RunConfig c = RunConfig::preset(preset);
    if (!config_file.empty()) c.apply_file(config_file);
    for (const auto& key : RunConfig::keys()) {
      if (!flag_values[key].empty()) c.set(key, flag_values[key]);
    }
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + o + "'");
      c.set(o.substr(0, eq), o.substr(eq + 1));
    }
    apply_seed_env(c);
    c.validate();
    return c;
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-speaker corpus");
  std::size_t count = 0;
  std::string synth_out;
  synth->add_option("--count", count, "Number of conversations")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  add_config_flags(synth);

  auto* train = app.add_subcommand("train", "Train on a manifest");
  std::string manifest, resume;
  train->add_option("--manifest", manifest, "Training manifest")->required();
  train->add_option("--resume", resume, "Checkpoint to resume from");
  add_config_flags(train);

  auto* infer = app.add_subcommand("infer", "Write hypothesis RTTM");
  InferOptions io;
  std::string infer_wav, infer_manifest;
  infer->add_option("--checkpoint", io.checkpoint, "Checkpoint file")->required();
  infer->add_option("--wav", infer_wav, "Input WAV");
  infer->add_option("--manifest", infer_manifest, "Manifest of WAVs");
  infer->add_option("--out", io.out, "RTTM file (--wav) or directory (--manifest)")->required();
  infer->add_option("--speakers", io.num_speakers, "Number of speakers")->capture_default_str();
  infer->add_option("--median-width", io.median_width, "Odd median filter width; 1 disables")
      ->capture_default_str();

  auto* score = app.add_subcommand("score", "Score hypotheses against references");
  ScoreOptions so;
  std::string report, cdf, table;
  score->add_option("--ref", so.ref_manifest, "Reference manifest")->required();
  score->add_option("--hyp", so.hyp_dir, "Directory of <file>.rttm hypotheses")->required();
  score->add_option("--collar", so.collar_s, "Collar in seconds")->capture_default_str();
  score->add_flag("--skip-overlap", so.skip_overlap, "Exclude overlapped reference speech");
  score->add_flag("--oracle-vad", so.oracle_vad, "Clip hypotheses to reference speech");
  score->add_option("--report", report, "Also write the report here");
  score->add_option("--cdf", cdf, "Write cumulative DER points here");
  score->add_option("--contingency", table, "Write the contingency table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(build_config(), count, synth_out, std::cerr);
    if (train->parsed()) {
      std::optional<fs::path> r;
      if (!resume.empty()) r = resume;
      return cmd_train(build_config(), manifest, r, std::cerr);
    }
    if (infer->parsed()) {
      if (!infer_wav.empty()) io.wav = infer_wav;
      if (!infer_manifest.empty()) io.manifest = infer_manifest;
      if (io.median_width == 0 || io.median_width % 2 == 0) {
        std::cerr << "infer: --median-width must be odd\n";
        return kUsage;
      }
      return cmd_infer(io, std::cerr);
    }
    if (score->parsed()) {
      if (!report.empty()) so.report = report;
      if (!cdf.empty()) so.cdf = cdf;
      if (!table.empty()) so.contingency = table;
      return cmd_score(so, std::cout, std::cerr);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace dive::cli
