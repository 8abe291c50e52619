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
#include <map>
#include <string>
#include <vector>

#include "dive/adam.hpp"
#include "dive/autodiff.hpp"

namespace dive {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// On-disk layout (all integers little-endian):
///
///   "DIVE" | version u32 | header_len u32 | header bytes ("key=value\n" lines)
///   | param_count u32 | param_count x entry
///   | moment_count u32 | moment_count x entry (names suffixed ".m" / ".v")
///   | step u64
///
///   entry = name_len u16 | UTF-8 name | rank u8 | rank x dim u32 | f32 values
struct Checkpoint {
  std::map<std::string, std::string> header;
  ParamStore<float> params;
  AdamState<float> adam;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError naming the field that failed to parse.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dive
