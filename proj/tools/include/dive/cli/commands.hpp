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
#include <iosfwd>
#include <optional>
#include <string>

#include "dive/cli/run_config.hpp"

namespace dive::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kDivergence = 3 };

/// Writes <out_dir>/conv_NNNNN.{wav,rttm} and <out_dir>/manifest.tsv.
int cmd_synth(const RunConfig& config, std::size_t count, const std::filesystem::path& out_dir,
              std::ostream& log);

/// Appends to <output_dir>/metrics.log (deterministic) and timing.log (wall
/// clock), writes ckpt_<step>.dive and latest.dive.
int cmd_train(const RunConfig& config, const std::filesystem::path& manifest,
              const std::optional<std::filesystem::path>& resume, std::ostream& log);

struct InferOptions {
  std::filesystem::path checkpoint;
  /// Either a single WAV (written to `out`) or a manifest (one RTTM per
  /// entry written into the directory `out`).
  std::optional<std::filesystem::path> wav;
  std::optional<std::filesystem::path> manifest;
  std::filesystem::path out;
  std::size_t num_speakers = 2;
  std::size_t median_width = 11;
};

int cmd_infer(const InferOptions& options, std::ostream& log);

struct ScoreOptions {
  std::filesystem::path ref_manifest;
  std::filesystem::path hyp_dir;
  double collar_s = 0.25;
  bool skip_overlap = false;
  /// Clip hypotheses to reference speech before scoring.
  bool oracle_vad = false;
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> cdf;
  std::optional<std::filesystem::path> contingency;
};

/// Per-file rows "file<TAB>der<TAB>miss<TAB>fa<TAB>conf" (DER in percent,
/// times in seconds) and a final "ALL" row.
int cmd_score(const ScoreOptions& options, std::ostream& out, std::ostream& log);

/// Full command-line entry point.
int run_main(int argc, char** argv);

}  // namespace dive::cli
