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

#include "dive/data.hpp"

#include <algorithm>
#include <cmath>

#include "dive/error.hpp"

namespace dive {

FrameLabels FrameLabels::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > num_frames) throw InvalidArgument("FrameLabels::slice out of range");
  FrameLabels out(num_speakers, count, frame_rate);
  out.speakers = speakers;
  for (std::size_t i = 0; i < num_speakers; ++i) {
    for (std::size_t t = 0; t < count; ++t) out.set(i, t, at(i, begin + t));
  }
  return out;
}

FrameLabels FrameLabels::concat(const std::vector<FrameLabels>& parts) {
  if (parts.empty()) return {};
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.num_speakers != parts[0].num_speakers) {
      throw InvalidArgument("FrameLabels::concat: speaker counts differ");
    }
    total += p.num_frames;
  }
  FrameLabels out(parts[0].num_speakers, total, parts[0].frame_rate);
  out.speakers = parts[0].speakers;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.num_speakers; ++i) {
      for (std::size_t t = 0; t < p.num_frames; ++t) out.set(i, offset + t, p.at(i, t));
    }
    offset += p.num_frames;
  }
  return out;
}

FrameLabels frame_labels_from_segments(const SegmentList& segments, std::size_t num_samples,
                                       int sample_rate, std::size_t downsample,
                                       const std::vector<std::string>& speakers, bool* clipped) {
  if (sample_rate <= 0 || downsample == 0) {
    throw InvalidArgument("frame labels need positive sample rate and downsample factor");
  }
  const std::vector<std::string> rows = speakers.empty() ? speaker_ids(segments) : speakers;
  const std::size_t frames = num_samples / downsample;
  FrameLabels labels(rows.size(), frames, static_cast<double>(sample_rate) / downsample);
  labels.speakers = rows;
  const double length_s = static_cast<double>(num_samples) / sample_rate;
  if (clipped) *clipped = false;
  for (const auto& seg : segments) {
    const auto it = std::find(rows.begin(), rows.end(), seg.speaker);
    if (it == rows.end()) {
      throw InvalidArgument("segment speaker '" + seg.speaker + "' not among label rows");
    }
    const std::size_t row = static_cast<std::size_t>(it - rows.begin());
    if (seg.end() > length_s && clipped) *clipped = true;
    // Start one frame early and let the center test decide.
    const double guess = std::floor(seg.onset * sample_rate / static_cast<double>(downsample) - 0.5);
    std::size_t t = guess <= 1 ? 0 : static_cast<std::size_t>(guess) - 1;
    for (; t < frames; ++t) {
      const double center = (downsample * t + downsample / 2.0) / sample_rate;
      if (center < seg.onset) continue;
      if (center >= seg.end()) break;
      labels.set(row, t, true);
    }
  }
  return labels;
}

TrainingExample sample_windows(const Waveform& waveform, const FrameLabels& labels,
                               std::size_t count, std::size_t window_length,
                               std::size_t downsample, Rng& rng) {
  if (count == 0 || window_length == 0 || window_length % downsample != 0) {
    throw InvalidArgument("window length must be a positive multiple of " +
                          std::to_string(downsample));
  }
  const std::size_t units = waveform.size() / downsample;
  const std::size_t win_units = window_length / downsample;
  if (count * win_units > units || labels.num_frames < units) {
    throw ResampleSignal("recording of " + std::to_string(waveform.size()) +
                         " samples is too short for " + std::to_string(count) + " windows of " +
                         std::to_string(window_length));
  }
  // Disjoint sorted onsets: sorted draws over the slack, each shifted by the
  // windows placed before it.
  const std::size_t slack = units - count * win_units;
  std::uniform_int_distribution<std::size_t> pick(0, slack);
  std::vector<std::size_t> offsets(count);
  for (auto& o : offsets) o = pick(rng);
  std::sort(offsets.begin(), offsets.end());

  TrainingExample ex;
  std::vector<FrameLabels> parts;
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t onset_unit = offsets[j] + j * win_units;
    const std::size_t onset = onset_unit * downsample;
    ex.onsets.push_back(onset);
    ex.windows.emplace_back(waveform.samples.begin() + static_cast<std::ptrdiff_t>(onset),
                            waveform.samples.begin() + static_cast<std::ptrdiff_t>(onset + window_length));
    parts.push_back(labels.slice(onset_unit, win_units));
  }
  ex.labels = FrameLabels::concat(parts);
  return ex;
}

Waveform mix_noise_at_gain(const Waveform& speech, const Waveform& noise, double gain_db) {
  const double noise_rms = rms(noise.samples);
  if (noise.samples.empty() || noise_rms <= 0.0) {
    throw InvalidArgument("noise has zero energy");
  }
  const double speech_rms = rms(speech.samples);
  const double gain = std::pow(10.0, gain_db / 20.0);
  Waveform out;
  out.sample_rate = speech.sample_rate;
  out.samples.resize(speech.size());
  const double speech_scale = speech_rms > 0.0 ? 1.0 / speech_rms : 0.0;
  const double restore = speech_rms > 0.0 ? speech_rms : 1.0;
  for (std::size_t i = 0; i < speech.size(); ++i) {
    const double n = noise.samples[i % noise.size()] / noise_rms;
    out.samples[i] = static_cast<float>(restore * (speech.samples[i] * speech_scale + gain * n));
  }
  return out;
}

Waveform mix_noise(const Waveform& speech, const Waveform& noise, Rng& rng, double min_db,
                   double max_db) {
  if (min_db > max_db) throw InvalidArgument("noise gain range is empty");
  std::uniform_real_distribution<double> gain(min_db, max_db);
  Waveform out = mix_noise_at_gain(speech, noise, gain(rng));
  float peak = 0.0f;
  for (float s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 1.0f) {
    for (float& s : out.samples) s /= peak;
  }
  return out;
}

Waveform colored_noise(std::size_t num_samples, int sample_rate, double pink_fraction, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(num_samples);
  // Paul Kellet's economy pink filter.
  double b0 = 0, b1 = 0, b2 = 0;
  const double w = std::clamp(pink_fraction, 0.0, 1.0);
  for (auto& s : out.samples) {
    const double white = normal(rng);
    b0 = 0.99765 * b0 + white * 0.0990460;
    b1 = 0.96300 * b1 + white * 0.2965164;
    b2 = 0.57000 * b2 + white * 1.0526913;
    const double pink = (b0 + b1 + b2 + white * 0.1848) * 0.25;
    s = static_cast<float>((1.0 - w) * white + w * pink);
  }
  return out;
}

}  // namespace dive
