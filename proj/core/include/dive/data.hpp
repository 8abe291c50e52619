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

#include <cstddef>
#include <string>
#include <vector>

#include "dive/audio.hpp"
#include "dive/labels.hpp"
#include "dive/rng.hpp"
#include "dive/segments.hpp"

namespace dive {

/// Frame t covers samples [downsample*t, downsample*(t+1)); it is active for
/// a speaker iff its center sample (downsample*t + downsample/2) falls inside
/// one of that speaker's segments. Yields floor(num_samples/downsample) frames.
/// Rows follow `speakers` when given, otherwise speaker_ids(segments).
/// Segments reaching past the end are clipped; `clipped` reports that.
FrameLabels frame_labels_from_segments(const SegmentList& segments, std::size_t num_samples,
                                       int sample_rate, std::size_t downsample,
                                       const std::vector<std::string>& speakers = {},
                                       bool* clipped = nullptr);

/// W windows cut from one recording plus the label frames aligned with the
/// encoder output of each window, concatenated in window order.
struct TrainingExample {
  std::vector<std::vector<float>> windows;
  std::vector<std::size_t> onsets;
  FrameLabels labels;
};

/// Draws `count` disjoint windows with onsets on multiples of `downsample`,
/// sorted ascending. Throws ResampleSignal when the recording is too short.
TrainingExample sample_windows(const Waveform& waveform, const FrameLabels& labels,
                               std::size_t count, std::size_t window_length,
                               std::size_t downsample, Rng& rng);

/// Both inputs rescaled to unit RMS, noise looped/truncated to the speech
/// length, mixed as speech + 10^(gain_db/20) * noise, then brought back to
/// the original speech RMS. Speech with zero energy yields the scaled noise.
/// No peak limiting. Throws InvalidArgument on zero-energy noise.
Waveform mix_noise_at_gain(const Waveform& speech, const Waveform& noise, double gain_db);

/// mix_noise_at_gain at a gain drawn uniformly from [min_db, max_db], then
/// scaled down if needed so that max |x| <= 1.
Waveform mix_noise(const Waveform& speech, const Waveform& noise, Rng& rng,
                   double min_db = -20.0, double max_db = 20.0);

/// White/pink blend; pink_fraction in [0, 1]. Unit-variance-ish, zero mean.
Waveform colored_noise(std::size_t num_samples, int sample_rate, double pink_fraction, Rng& rng);

}  // namespace dive
