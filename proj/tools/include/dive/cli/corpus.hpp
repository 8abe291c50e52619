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
#include <filesystem>
#include <string>
#include <vector>

#include "dive/audio.hpp"
#include "dive/labels.hpp"
#include "dive/model.hpp"
#include "dive/segments.hpp"

namespace dive::cli {

struct Recording {
  std::string id;
  Waveform waveform;
  SegmentList segments;
  /// Reference activity at the model frame rate, rows sorted by speaker id.
  FrameLabels labels;
};

Recording make_recording(std::string id, Waveform waveform, SegmentList segments,
                         const ModelConfig& model);

/// File id used for a manifest entry: the WAV file stem.
std::string recording_id(const ManifestEntry& entry);

/// All segments of an RTTM file, whatever their file field says.
SegmentList read_reference(const std::filesystem::path& rttm);

std::vector<Recording> load_corpus(const std::filesystem::path& manifest, const ModelConfig& model);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded shuffle; the first round(fraction * count) indices (at least one
/// when fraction > 0 and count > 1) go to validation. Both halves sorted.
Split split_validation(std::size_t count, double fraction, std::uint64_t seed);

}  // namespace dive::cli
