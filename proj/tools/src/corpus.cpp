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

#include "dive/cli/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dive/data.hpp"
#include "dive/error.hpp"
#include "dive/rng.hpp"

namespace dive::cli {

Recording make_recording(std::string id, Waveform waveform, SegmentList segments,
                         const ModelConfig& model) {
  if (waveform.sample_rate != model.sample_rate) {
    throw InvalidArgument(id + ": sample rate " + std::to_string(waveform.sample_rate) +
                          " does not match model rate " + std::to_string(model.sample_rate));
  }
  sort_segments(segments);
  Recording r;
  r.id = std::move(id);
  r.labels = frame_labels_from_segments(segments, waveform.size(), waveform.sample_rate,
                                        model.downsample());
  r.waveform = std::move(waveform);
  r.segments = std::move(segments);
  return r;
}

std::string recording_id(const ManifestEntry& entry) { return entry.wav.stem().string(); }

SegmentList read_reference(const std::filesystem::path& rttm) {
  SegmentList out;
  for (auto& [file, segs] : read_rttm(rttm)) out.insert(out.end(), segs.begin(), segs.end());
  sort_segments(out);
  return out;
}

std::vector<Recording> load_corpus(const std::filesystem::path& manifest, const ModelConfig& model) {
  std::vector<Recording> out;
  for (const auto& entry : read_manifest(manifest)) {
    out.push_back(make_recording(recording_id(entry), read_wav(entry.wav),
                                 read_reference(entry.rttm), model));
  }
  return out;
}

Split split_validation(std::size_t count, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, {0x5b117u});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(count)));
  if (fraction > 0 && count > 1) held = std::max<std::size_t>(held, 1);
  held = std::min(held, count > 0 ? count - 1 : 0);
  Split s;
  s.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

}  // namespace dive::cli
