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
#include <span>
#include <vector>

namespace dive {

/// Mono samples in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 8000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

double rms(std::span<const float> samples);

// PCM 16-bit mono little-endian RIFF/WAVE. Samples map as s/32768 on read and
// round(x*32768) clamped to int16 on write, so int16 -> float -> int16 is exact.

std::vector<std::uint8_t> encode_wav(const Waveform& wav);
/// Throws ParseError carrying the byte offset of the offending field.
Waveform decode_wav(std::span<const std::uint8_t> bytes);

void write_wav(const std::filesystem::path& path, const Waveform& wav);
Waveform read_wav(const std::filesystem::path& path);

}  // namespace dive
