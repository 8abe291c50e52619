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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dive {

struct Segment {
  std::string speaker;
  double onset = 0.0;
  double duration = 0.0;

  double end() const { return onset + duration; }
  bool operator==(const Segment&) const = default;
};

/// Kept sorted by onset (ties by speaker).
using SegmentList = std::vector<Segment>;

void sort_segments(SegmentList& segments);
/// Sorted unique speaker ids.
std::vector<std::string> speaker_ids(const SegmentList& segments);

// RTTM: "SPEAKER <file> 1 <onset> <dur> <NA> <NA> <spk> <NA> <NA>" per line.
// Times are written in shortest round-trip decimal form, so
// parse(format(x)) reproduces every double exactly.

using RttmFiles = std::map<std::string, SegmentList>;

/// Throws ParseError with the 1-based line number. Blank lines and lines
/// starting with ';' or '#' are skipped; non-SPEAKER records are ignored.
RttmFiles parse_rttm(std::string_view text);
std::string format_rttm(const std::string& file_id, const SegmentList& segments);
std::string format_rttm(const RttmFiles& files);

RttmFiles read_rttm(const std::filesystem::path& path);
void write_rttm(const std::filesystem::path& path, const RttmFiles& files);
void write_rttm(const std::filesystem::path& path, const std::string& file_id,
                const SegmentList& segments);

/// One corpus item: "wav_path<TAB>rttm_path" per manifest line.
struct ManifestEntry {
  std::filesystem::path wav;
  std::filesystem::path rttm;
};

/// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
/// Paths are written relative to the manifest's directory when possible.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

}  // namespace dive
