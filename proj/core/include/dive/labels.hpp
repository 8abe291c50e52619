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
#include <cstdint>
#include <string>
#include <vector>

namespace dive {

/// Per-speaker binary activity at the model's frame rate, row-major N x T.
struct FrameLabels {
  std::size_t num_speakers = 0;
  std::size_t num_frames = 0;
  double frame_rate = 0.0;
  /// Row names; empty or one per speaker.
  std::vector<std::string> speakers;
  std::vector<std::uint8_t> active;

  FrameLabels() = default;
  FrameLabels(std::size_t n, std::size_t t, double rate)
      : num_speakers(n), num_frames(t), frame_rate(rate), active(n * t, 0) {}

  bool at(std::size_t speaker, std::size_t frame) const {
    return active[speaker * num_frames + frame] != 0;
  }
  void set(std::size_t speaker, std::size_t frame, bool on) {
    active[speaker * num_frames + frame] = on ? 1 : 0;
  }
  std::size_t active_count(std::size_t frame) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < num_speakers; ++i) n += at(i, frame);
    return n;
  }
  /// Frames [begin, begin+count) of every row.
  FrameLabels slice(std::size_t begin, std::size_t count) const;
  /// Time-axis concatenation; speaker counts must agree.
  static FrameLabels concat(const std::vector<FrameLabels>& parts);

  bool operator==(const FrameLabels& other) const {
    return num_speakers == other.num_speakers && num_frames == other.num_frames &&
           active == other.active;
  }
};

/// Per-frame event type driving one speaker-selection iteration.
enum class EventClass : std::uint8_t {
  NovelSingle = 0,
  SelectedSingle = 1,
  Overlap = 2,
  Silence = 3,
};

inline constexpr std::size_t kNumEventClasses = 4;

}  // namespace dive
