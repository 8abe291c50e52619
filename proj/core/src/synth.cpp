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

#include "dive/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dive/error.hpp"
#include "dive/rng.hpp"

namespace dive {

std::string synth_speaker_id(std::size_t index) { return "spk" + std::to_string(index + 1); }

std::vector<SpeakerProfile> sample_profiles(const SynthConfig& config, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x9f11u});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lo = std::log(config.f0_min_hz), hi = std::log(config.f0_max_hz);
  std::vector<SpeakerProfile> profiles;
  for (std::size_t s = 0; s < config.num_speakers; ++s) {
    SpeakerProfile p;
    bool separated = false;
    for (int attempt = 0; attempt < 1000 && !separated; ++attempt) {
      p.fundamental_hz = std::exp(lo + (hi - lo) * unit(rng));
      separated = std::all_of(profiles.begin(), profiles.end(), [&](const SpeakerProfile& q) {
        const double r = p.fundamental_hz / q.fundamental_hz;
        return std::max(r, 1.0 / r) >= config.min_f0_ratio;
      });
    }
    if (!separated) {
      throw InvalidArgument("cannot place " + std::to_string(config.num_speakers) +
                            " fundamentals with ratio " + std::to_string(config.min_f0_ratio) +
                            " inside [f0_min_hz, f0_max_hz]");
    }
    const double nyquist = 0.45 * config.sample_rate;
    const auto harmonics = static_cast<std::size_t>(std::clamp(nyquist / p.fundamental_hz, 1.0, 24.0));
    const double tilt = 0.6 + 0.8 * unit(rng);
    double energy = 0.0;
    for (std::size_t k = 1; k <= harmonics; ++k) {
      const double w = std::pow(static_cast<double>(k), -tilt) * (0.4 + unit(rng));
      p.harmonic_weights.push_back(w);
      energy += w * w;
    }
    for (double& w : p.harmonic_weights) w /= std::sqrt(energy);
    p.am_rate_hz = 3.0 + 3.0 * unit(rng);
    p.gain = 0.2 + 0.2 * unit(rng);
    p.seed = rng();
    profiles.push_back(std::move(p));
  }
  return profiles;
}

namespace {

SegmentList merge_per_speaker(SegmentList segments) {
  std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    if (a.speaker != b.speaker) return a.speaker < b.speaker;
    return a.onset < b.onset;
  });
  SegmentList out;
  for (const auto& s : segments) {
    if (!out.empty() && out.back().speaker == s.speaker && s.onset <= out.back().end()) {
      out.back().duration = std::max(out.back().end(), s.end()) - out.back().onset;
    } else {
      out.push_back(s);
    }
  }
  sort_segments(out);
  return out;
}

SegmentList turn_process(const SynthConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::lognormal_distribution<double> turn(std::log(config.turn_median_s), config.turn_sigma);
  std::lognormal_distribution<double> pause(std::log(config.pause_median_s), 0.5);
  SegmentList turns;
  double t = 0.5 * unit(rng);
  std::size_t speaker = static_cast<std::size_t>(unit(rng) * config.num_speakers) % config.num_speakers;
  while (t < config.duration_s - 0.05) {
    const double len = std::clamp(turn(rng), 0.3, 4.0 * config.turn_median_s);
    const double end = std::min(t + len, config.duration_s);
    turns.push_back({synth_speaker_id(speaker), t, end - t});
    std::size_t next = (speaker + 1) % config.num_speakers;
    if (config.num_speakers > 2) {
      next = (speaker + 1 + static_cast<std::size_t>(unit(rng) * (config.num_speakers - 1))) %
             config.num_speakers;
    }
    const double r = unit(rng);
    if (r < config.overlap_prob) {
      const double overlap = std::min(0.2 + 0.6 * unit(rng), 0.4 * (end - t));
      t = end - overlap;
    } else if (r < config.overlap_prob + config.silence_prob) {
      t = end + std::clamp(pause(rng), 0.1, 3.0);
    } else {
      t = end;
    }
    speaker = next;
  }
  return merge_per_speaker(std::move(turns));
}

void render(const SpeakerProfile& p, const SegmentList& segments, const std::string& id,
            int sample_rate, std::vector<float>& out) {
  Rng rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> phases(p.harmonic_weights.size());
  for (double& ph : phases) ph = two_pi * unit(rng);
  const double drift_rate = 0.3 + 0.7 * unit(rng);
  const double drift_depth = 0.02 + 0.03 * unit(rng);
  const double drift_phase = two_pi * unit(rng);
  const double am_phase = two_pi * unit(rng);
  const double ramp = 0.01 * sample_rate;
  double phase = 0.0;
  for (const auto& seg : segments) {
    if (seg.speaker != id) continue;
    const auto begin = static_cast<std::size_t>(std::llround(seg.onset * sample_rate));
    const auto end = std::min(out.size(), static_cast<std::size_t>(std::llround(seg.end() * sample_rate)));
    for (std::size_t n = begin; n < end; ++n) {
      const double time = static_cast<double>(n) / sample_rate;
      const double f0 = p.fundamental_hz * (1.0 + drift_depth * std::sin(two_pi * drift_rate * time + drift_phase));
      phase += two_pi * f0 / sample_rate;
      if (phase > two_pi * 1e6) phase = std::fmod(phase, two_pi);
      double v = 0.0;
      for (std::size_t k = 0; k < phases.size(); ++k) {
        v += p.harmonic_weights[k] * std::sin(static_cast<double>(k + 1) * phase + phases[k]);
      }
      const double am = 0.6 + 0.4 * std::sin(two_pi * p.am_rate_hz * time + am_phase);
      const double edge = std::min({1.0, (n - begin + 1) / ramp, (end - n) / ramp});
      out[n] += static_cast<float>(p.gain * am * edge * v);
    }
  }
}

}  // namespace

std::vector<double> longest_solo_s(const SegmentList& segments,
                                   const std::vector<std::string>& speakers) {
  std::vector<double> points;
  for (const auto& s : segments) {
    points.push_back(s.onset);
    points.push_back(s.end());
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<double> best(speakers.size(), 0.0), run(speakers.size(), 0.0);
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const double mid = 0.5 * (points[k] + points[k + 1]);
    std::vector<std::size_t> active;
    for (const auto& s : segments) {
      if (s.onset <= mid && mid < s.end()) {
        const auto it = std::find(speakers.begin(), speakers.end(), s.speaker);
        if (it != speakers.end()) active.push_back(static_cast<std::size_t>(it - speakers.begin()));
      }
    }
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
    for (std::size_t i = 0; i < speakers.size(); ++i) {
      if (active.size() == 1 && active[0] == i) {
        run[i] += points[k + 1] - points[k];
        best[i] = std::max(best[i], run[i]);
      } else {
        run[i] = 0.0;
      }
    }
  }
  return best;
}

double overlapped_transition_fraction(const SegmentList& segments) {
  SegmentList sorted = segments;
  sort_segments(sorted);
  std::size_t changes = 0, overlapped = 0;
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k].speaker == sorted[k - 1].speaker) continue;
    ++changes;
    if (sorted[k].onset < sorted[k - 1].end()) ++overlapped;
  }
  return changes == 0 ? 0.0 : static_cast<double>(overlapped) / static_cast<double>(changes);
}

Conversation synth_conversation(const SynthConfig& config, std::uint64_t seed) {
  if (config.num_speakers == 0 || config.sample_rate <= 0) {
    throw InvalidArgument("synth: need at least one speaker and a positive sample rate");
  }
  if (config.overlap_prob < 0 || config.silence_prob < 0 ||
      config.overlap_prob + config.silence_prob > 1.0) {
    throw InvalidArgument("synth: overlap_prob + silence_prob must lie in [0, 1]");
  }
  if (config.duration_s < config.num_speakers * config.min_solo_s + 0.5) {
    throw InvalidArgument("synth: duration " + std::to_string(config.duration_s) +
                          " s cannot hold a " + std::to_string(config.min_solo_s) +
                          " s solo region per speaker");
  }
  std::vector<std::string> ids;
  for (std::size_t s = 0; s < config.num_speakers; ++s) ids.push_back(synth_speaker_id(s));

  Conversation conv;
  conv.profiles = sample_profiles(config, seed);
  bool ok = false;
  for (std::uint64_t attempt = 0; attempt < 200 && !ok; ++attempt) {
    Rng rng = make_rng(seed, {0x7a11u, attempt});
    conv.segments = turn_process(config, rng);
    const auto solo = longest_solo_s(conv.segments, ids);
    ok = std::all_of(solo.begin(), solo.end(), [&](double d) { return d >= config.min_solo_s; });
  }
  if (!ok) throw InvalidArgument("synth: solo-region guarantee unsatisfiable for this config");

  conv.waveform.sample_rate = config.sample_rate;
  conv.waveform.samples.assign(static_cast<std::size_t>(std::llround(config.duration_s * config.sample_rate)), 0.0f);
  for (std::size_t s = 0; s < config.num_speakers; ++s) {
    render(conv.profiles[s], conv.segments, ids[s], config.sample_rate, conv.waveform.samples);
  }
  for (float& x : conv.waveform.samples) x = std::clamp(x, -1.0f, 1.0f);
  return conv;
}

}  // namespace dive
