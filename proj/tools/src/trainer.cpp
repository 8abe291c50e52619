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

#include "dive/cli/trainer.hpp"

#include <cstdio>
#include <random>

#include "dive/data.hpp"
#include "dive/error.hpp"
#include "dive/ops.hpp"

namespace dive::cli {

namespace {

constexpr int kMaxDraws = 100;

std::map<std::string, std::string> header_of(const RunConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& key : RunConfig::keys()) out[key] = config.get(key);
  return out;
}

}  // namespace

std::string format_metrics(const StepMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "step=%lld lr=%.9g selector=%.9g vad_collar=%.9g vad=%.9g total=%.9g resampled=%zu",
                static_cast<long long>(m.step), m.lr, m.selector, m.vad_collar, m.vad, m.total,
                m.resampled);
  return buf;
}

Trainer::Trainer(RunConfig config, std::vector<Recording> recordings)
    : config_(std::move(config)),
      recordings_(std::move(recordings)),
      model_(config_.model, derive_seed(config_.seed, {0x1417u})) {
  config_.validate();
  if (recordings_.empty()) throw InvalidArgument("no training recordings");
  adam_ = AdamState<float>::zeros_like(model_.params());
}

TrainingExample Trainer::draw_example(Rng& rng) {
  const ModelConfig& m = config_.model;
  std::uniform_int_distribution<std::size_t> pick(0, recordings_.size() - 1);
  const Recording& rec = recordings_[pick(rng)];
  TrainingExample ex = sample_windows(rec.waveform, rec.labels, m.windows_per_example,
                                      m.window_length, m.downsample(), rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (config_.noise_prob > 0 && u(rng) < config_.noise_prob) {
    for (auto& w : ex.windows) {
      const Waveform noise = colored_noise(w.size(), m.sample_rate, u(rng), rng);
      w = mix_noise(Waveform{std::move(w), m.sample_rate}, noise, rng, config_.noise_min_db,
                    config_.noise_max_db)
              .samples;
    }
  }
  return ex;
}

StepMetrics Trainer::step() {
  const std::int64_t k = adam_.step;
  StepMetrics out;
  out.step = k + 1;
  out.lr = lr_schedule(config_.adam, k);
  model_.params().zero_grad();
  const double weight = 1.0 / static_cast<double>(config_.batch_size);
  for (std::size_t b = 0; b < config_.batch_size; ++b) {
    Rng rng = make_rng(config_.seed, {static_cast<std::uint64_t>(k), b});
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxDraws) {
        throw InvalidArgument("no usable training example after " + std::to_string(kMaxDraws) +
                              " draws; recordings too short or lacking solo speech");
      }
      try {
        TrainingExample ex = draw_example(rng);
        Tape<float> tape;
        TrainLosses<float> l = model_.forward_train(tape, ex, rng);
        tape.backward(scale(l.total, weight), k);
        out.selector += weight * l.selector.value().item();
        out.vad_collar += weight * l.vad_collar.value().item();
        out.vad += weight * l.vad;
        out.total += weight * l.total.value().item();
        break;
      } catch (const ResampleSignal&) {
        ++out.resampled;
      }
    }
  }
  adam_step(model_.params(), adam_, config_.adam);
  return out;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.header = header_of(config_);
  c.params = model_.params();
  for (auto& [name, t] : c.params) t.drop_grad();
  c.adam = adam_;
  return c;
}

void Trainer::restore(const Checkpoint& ckpt) {
  const ModelConfig saved = ModelConfig::from_header(ckpt.header);
  if (saved.to_header() != config_.model.to_header()) {
    throw FormatError("header", "checkpoint model config differs from the run config");
  }
  model_ = DiveModel<float>(config_.model, ckpt.params);
  adam_ = ckpt.adam;
}

FrameLabels predict(DiveModel<float>& model, const Recording& recording) {
  const std::size_t n = recording.labels.num_speakers > 0 ? recording.labels.num_speakers
                                                          : model.config().num_speakers;
  return model.infer(recording.waveform, n, 1).labels;
}

SegmentList hypothesis_segments(const FrameLabels& raw, std::size_t median_width) {
  return masks_to_segments(median_width > 1 ? median_filter(raw, median_width) : raw);
}

std::vector<FrameLabels> predict_all(DiveModel<float>& model, std::span<const Recording> refs) {
  std::vector<FrameLabels> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back(predict(model, r));
  return out;
}

std::vector<SegmentList> hypotheses(std::span<const FrameLabels> raw, std::size_t median_width) {
  std::vector<SegmentList> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(hypothesis_segments(r, median_width));
  return out;
}

ScoredSet score_hypotheses(std::span<const Recording> refs, std::span<const SegmentList> hyps,
                           double collar_s, bool skip_overlap) {
  if (refs.size() != hyps.size()) throw InvalidArgument("reference/hypothesis count mismatch");
  ScoredSet out;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    ScoringOptions opts;
    opts.collar_s = collar_s;
    opts.skip_overlap = skip_overlap;
    opts.duration_s = refs[i].waveform.duration_s();
    out.per_file.push_back(der(refs[i].segments, hyps[i], opts));
    out.total += out.per_file.back();
  }
  return out;
}

DiveModel<float> model_from_checkpoint(const Checkpoint& ckpt) {
  return DiveModel<float>(ModelConfig::from_header(ckpt.header), ckpt.params);
}

}  // namespace dive::cli
