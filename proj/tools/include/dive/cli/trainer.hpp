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
#include <span>
#include <vector>

#include "dive/checkpoint.hpp"
#include "dive/cli/corpus.hpp"
#include "dive/cli/run_config.hpp"
#include "dive/eval.hpp"
#include "dive/model.hpp"

namespace dive::cli {

struct StepMetrics {
  /// 1-based index of the step just taken.
  std::int64_t step = 0;
  double lr = 0.0;
  double selector = 0.0;
  double vad_collar = 0.0;
  double vad = 0.0;
  double total = 0.0;
  /// Draws rejected because a speaker had no solo frame in the windows.
  std::size_t resampled = 0;
};

std::string format_metrics(const StepMetrics& m);

/// Minibatch Adam on a fixed set of recordings. The randomness of step k
/// item b comes from derive_seed(seed, {k, b}), so a restored trainer
/// continues exactly like an uninterrupted one.
class Trainer {
 public:
  Trainer(RunConfig config, std::vector<Recording> recordings);

  StepMetrics step();
  std::int64_t steps_done() const { return adam_.step; }

  DiveModel<float>& model() { return model_; }
  const RunConfig& config() const { return config_; }

  Checkpoint checkpoint() const;
  /// Adopts weights and optimizer state; the model config must match.
  void restore(const Checkpoint& ckpt);

  TrainingExample draw_example(Rng& rng);

 private:
  RunConfig config_;
  std::vector<Recording> recordings_;
  DiveModel<float> model_;
  AdamState<float> adam_;
};

/// Raw (unfiltered) frame decisions for one recording.
FrameLabels predict(DiveModel<float>& model, const Recording& recording);

/// Segments named after the reference rows after median filtering.
SegmentList hypothesis_segments(const FrameLabels& raw, std::size_t median_width);

struct ScoredSet {
  DerBreakdown total;
  std::vector<DerBreakdown> per_file;
};

ScoredSet score_hypotheses(std::span<const Recording> refs, std::span<const SegmentList> hyps,
                           double collar_s, bool skip_overlap = false);

/// predict() on every recording.
std::vector<FrameLabels> predict_all(DiveModel<float>& model, std::span<const Recording> refs);

std::vector<SegmentList> hypotheses(std::span<const FrameLabels> raw, std::size_t median_width);

/// Builds a model from a checkpoint's header and weights.
DiveModel<float> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace dive::cli
