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

#pragma once

#include <cstdint>
#include <vector>

#include "dive/audio.hpp"
#include "dive/segments.hpp"

namespace dive {

/// A synthetic voice: harmonic tone with slow pitch drift and a syllable-rate
/// amplitude envelope.
struct SpeakerProfile {
  double fundamental_hz = 120.0;
  std::vector<double> harmonic_weights;
  double am_rate_hz = 4.0;
  double gain = 0.3;
  std::uint64_t seed = 0;
};

struct SynthConfig {
  double duration_s = 30.0;
  int sample_rate = 8000;
  std::size_t num_speakers = 2;
  /// Turn lengths are lognormal with this median and log-space sigma.
  double turn_median_s = 2.0;
  double turn_sigma = 0.5;
  /// Per turn transition: overlap the next turn, insert a pause, or hand over
  /// immediately (the remaining probability).
  double overlap_prob = 0.15;
  double silence_prob = 0.1;
  double pause_median_s = 0.6;
  double min_solo_s = 0.5;
  double f0_min_hz = 90.0;
  double f0_max_hz = 320.0;
  /// Fundamentals within a conversation differ by at least this ratio.
  double min_f0_ratio = 1.3;
};

struct Conversation {
  Waveform waveform;
  SegmentList segments;
  std::vector<SpeakerProfile> profiles;
};

/// Deterministic in (config, seed). Every speaker gets at least one solo
/// stretch of min_solo_s. Throws InvalidArgument when that cannot be met.
Conversation synth_conversation(const SynthConfig& config, std::uint64_t seed);

std::vector<SpeakerProfile> sample_profiles(const SynthConfig& config, std::uint64_t seed);

/// Longest interval per speaker during which that speaker is the only one
/// active, indexed like `speakers`.
std::vector<double> longest_solo_s(const SegmentList& segments,
                                   const std::vector<std::string>& speakers);

/// Fraction of speaker changes (consecutive segments of different speakers
/// in onset order) where the next segment starts before the previous ends.
double overlapped_transition_fraction(const SegmentList& segments);

/// Speaker ids used by the generator: "spk1", "spk2", ...
std::string synth_speaker_id(std::size_t index);

}  // namespace dive
