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

#include "dive/adam.hpp"
#include "dive/model.hpp"
#include "dive/synth.hpp"

namespace dive::cli {

/// Everything an experiment needs, settable from a flat key=value file.
struct RunConfig {
  ModelConfig model;
  AdamConfig adam;
  SynthConfig synth;

  std::size_t batch_size = 8;
  std::int64_t total_steps = 2000;
  std::uint64_t seed = 1;
  double collar_eval_s = 0.25;
  std::int64_t checkpoint_every = 500;
  std::int64_t validate_every = 500;
  double validation_fraction = 0.1;
  /// Cap on validation files scored per evaluation; 0 scores all.
  std::size_t validation_files = 0;
  std::size_t median_width = 11;
  /// Chance of mixing synthetic noise into a training window.
  double noise_prob = 0.0;
  double noise_min_db = -20.0;
  double noise_max_db = 20.0;
  std::string output_dir = "run";

  static RunConfig desk();
  /// Full-size topology, batch 512.
  static RunConfig paper();
  /// "desk" or "paper"; throws InvalidArgument otherwise.
  static RunConfig preset(const std::string& name);

  static const std::vector<std::string>& keys();
  /// Throws InvalidArgument on unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Applies "key=value" lines; '#' starts a comment. ParseError carries
  /// the line number.
  void apply_text(const std::string& text);
  void apply_file(const std::filesystem::path& path);

  /// One "key=value" line per key, in keys() order.
  std::string to_text() const;
  void validate() const;
};

/// Seed override from the DIVE_SEED environment variable, if set.
void apply_seed_env(RunConfig& config);

}  // namespace dive::cli
