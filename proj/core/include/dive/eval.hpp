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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dive/labels.hpp"
#include "dive/segments.hpp"

namespace dive {

struct DerBreakdown {
  double missed_s = 0.0;
  double false_alarm_s = 0.0;
  double confusion_s = 0.0;
  double scored_speech_s = 0.0;

  /// Fraction, not percent. Throws UndefinedDer when nothing was scored.
  double der() const;
  DerBreakdown& operator+=(const DerBreakdown& other);
};

struct ScoringOptions {
  /// Excised on each side of every reference boundary strictly inside the
  /// timeline.
  double collar_s = 0.25;
  bool skip_overlap = false;
  /// Timeline end; defaults to the last reference or hypothesis end.
  std::optional<double> duration_s;
};

/// hyp speaker -> ref speaker; hyp speakers missing from the map are unmatched.
using SpeakerMapping = std::map<std::string, std::string>;

/// Bijection maximizing co-active scored time (equivalently minimizing DER).
/// Ties resolve to the lexicographically smallest assignment over sorted ids.
/// At most 8 speakers per side.
SpeakerMapping best_mapping(const SegmentList& ref, const SegmentList& hyp,
                            const ScoringOptions& options = {});

DerBreakdown der(const SegmentList& ref, const SegmentList& hyp, const ScoringOptions& options);
DerBreakdown der(const SegmentList& ref, const SegmentList& hyp, double collar_s,
                 bool skip_overlap);

/// Majority vote over an odd-width centered window, repeated until the output
/// stops changing. Frames within width/2 of either end copy the nearest
/// full-window result.
std::vector<std::uint8_t> median_filter(std::span<const std::uint8_t> mask, std::size_t width);
FrameLabels median_filter(const FrameLabels& labels, std::size_t width);

/// Hypothesis segments clipped to the union of reference speech, for scoring
/// with oracle speech activity.
SegmentList restrict_to_speech(const SegmentList& hyp, const SegmentList& ref);

/// Maximal runs of active frames become [start/frame_rate, end/frame_rate).
/// Speaker ids come from labels.speakers, or "spk<i+1>" when absent.
SegmentList masks_to_segments(const FrameLabels& labels);

enum class FrameClass : std::uint8_t { Speaker1 = 0, Speaker2 = 1, Overlap = 2, Silence = 3 };

/// Prediction (rows) x label (columns) percentages over all frames, after the
/// hypothesis rows are permuted to best agree with the reference.
struct ContingencyTable {
  std::array<std::array<std::size_t, 4>, 4> counts{};
  std::array<std::array<double, 4>, 4> percent{};
  std::array<double, 4> label_prior{};
  std::size_t frames = 0;

  std::string to_text() const;
};

/// Two-speaker labels only.
ContingencyTable contingency(const FrameLabels& ref, const FrameLabels& hyp);

/// Empirical CDF: sorted distinct values with the fraction of inputs <= each.
std::vector<std::pair<double, double>> cumulative_der(std::span<const double> per_file);
std::string format_cdf(const std::vector<std::pair<double, double>>& cdf);

}  // namespace dive
