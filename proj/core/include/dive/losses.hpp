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
#include <span>
#include <vector>

#include "dive/autodiff.hpp"
#include "dive/labels.hpp"

namespace dive {

/// Frames excluded from the VAD loss because they sit near a turn boundary.
struct CollarMask {
  std::vector<std::uint8_t> excluded;
  std::size_t radius_frames = 0;

  std::size_t excluded_count() const;
  /// True when nothing is left to train on; the masked loss is then 0.
  bool covers_all() const { return !excluded.empty() && excluded_count() == excluded.size(); }
};

inline constexpr double kSelectorLogClamp = 1e-12;

/// round(radius_s * frame_rate).
std::size_t collar_radius_frames(double radius_s, double frame_rate);

/// A boundary sits at frame t >= 1 when any speaker's activity differs
/// between t-1 and t. Frames t-radius .. t+radius-1 around each boundary are
/// excluded (2*radius frames centered on the transition instant).
CollarMask collar_mask(const FrameLabels& labels, std::size_t radius_frames);

/// Mean negative log-probability of the labelled event class over all
/// iterations and frames. posteriors [N x T x 4], labels N*T row-major.
/// Probabilities are clamped at kSelectorLogClamp before the log.
template <typename S>
Var<S> selector_nll(const Var<S>& posteriors, std::span<const EventClass> labels);

/// -(1/TN) sum_{i,t} log sigmoid(logit_{i,t} * (2 y_{i,t} - 1)).
template <typename S>
Var<S> vad_bce(const Var<S>& logits, const FrameLabels& labels);

/// vad_bce with excluded frames contributing zero; the 1/TN prefactor is
/// unchanged.
template <typename S>
Var<S> vad_bce_collar(const Var<S>& logits, const FrameLabels& labels, const CollarMask& mask);

template <typename S>
Var<S> total_loss(const Var<S>& selector, const Var<S>& vad_collar);

}  // namespace dive
