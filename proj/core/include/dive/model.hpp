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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dive/audio.hpp"
#include "dive/autodiff.hpp"
#include "dive/data.hpp"
#include "dive/labels.hpp"
#include "dive/losses.hpp"
#include "dive/rng.hpp"

namespace dive {

struct ModelConfig {
  int sample_rate = 8000;
  /// Width D of every convolution and fully-connected layer.
  std::size_t channels = 64;
  std::size_t input_kernel = 16;
  std::size_t input_stride = 8;
  std::size_t num_blocks = 2;
  std::size_t layers_per_block = 4;
  std::size_t block_kernel = 3;
  /// Single average pool between the first and second block.
  std::size_t pool_kernel = 3;
  std::size_t pool_stride = 2;
  std::size_t hidden_layers = 2;
  std::size_t window_length = 16000;
  std::size_t windows_per_example = 3;
  /// Radius r of the excluded region around training-label boundaries.
  double collar_radius_s = 0.25;
  std::size_t num_speakers = 2;
  double prelu_init = 0.25;
  double layer_norm_eps = 1e-5;

  /// 512 channels, 4 blocks x 10 layers, 6 windows of 32000 samples.
  static ModelConfig paper();
  /// 64 channels, 2 blocks x 4 layers, 3 windows of 16000 samples.
  static ModelConfig desk();

  /// Input stride times pool stride (when there is a second block).
  std::size_t downsample() const;
  double frame_rate() const { return static_cast<double>(sample_rate) / downsample(); }
  /// Frames produced for one window of `samples` samples.
  std::size_t frames_for(std::size_t samples) const;

  void validate() const;
  std::map<std::string, std::string> to_header() const;
  /// Unknown keys are ignored; missing keys keep desk defaults.
  static ModelConfig from_header(const std::map<std::string, std::string>& header);
};

/// Selected speaker representations for one recording.
template <typename S>
struct SpeakerBank {
  std::vector<BasicTensor<S>> vectors;
  std::vector<double> confidences;
  std::vector<std::size_t> argmax_frames;
  /// Running means mu_1..mu_N fed to each selection iteration (mu_1 = 0).
  std::vector<BasicTensor<S>> running_means;
  BasicTensor<S> mean;
};

template <typename S>
struct TrainLosses {
  Var<S> selector;
  Var<S> vad_collar;
  Var<S> total;
  /// Unmasked VAD loss value, for logging.
  double vad = 0.0;
  bool all_frames_excluded = false;
  std::vector<std::size_t> speaker_order;
  std::vector<std::size_t> sampled_frames;
};

struct InferenceResult {
  FrameLabels labels;
  std::vector<double> confidences;
  std::vector<std::size_t> argmax_frames;
};

/// Frame classes for one selection iteration given which speakers (label
/// rows) were already selected.
std::vector<EventClass> build_event_labels(const FrameLabels& labels,
                                           const std::vector<bool>& selected);

/// Frames where `speaker` is the only active one.
std::vector<std::size_t> solo_frames(const FrameLabels& labels, std::size_t speaker);

/// Uniform draw from solo_frames(); throws ResampleSignal if there are none.
std::size_t sample_solo_frame(const FrameLabels& labels, std::size_t speaker, Rng& rng);

/// argmax_t of posterior[t][NovelSingle], smallest t on ties.
/// Returns (frame, confidence).
template <typename S>
std::pair<std::size_t, double> argmax_novel(const BasicTensor<S>& posterior);

/// Temporal encoder, iterative speaker selector and speaker-conditioned VAD.
template <typename S>
class DiveModel {
 public:
  /// Fresh weights: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for kernels and
  /// linear maps, zero biases, unit norm gains, PReLU slopes at prelu_init.
  DiveModel(ModelConfig config, std::uint64_t seed);
  /// Adopts existing weights; names and shapes must match the config.
  DiveModel(ModelConfig config, ParamStore<S> params);

  const ModelConfig& config() const { return config_; }
  ParamStore<S>& params() { return params_; }
  const ParamStore<S>& params() const { return params_; }

  /// Encodes each window independently and concatenates along time.
  /// Window lengths must be equal multiples of 16 (the downsample factor).
  Var<S> encode(Tape<S>& tape, std::span<const std::vector<float>> windows);

  /// Frame-side selector features g_h(h), [T x D]; independent of mu.
  Var<S> selector_frame_features(Tape<S>& tape, const Var<S>& embeddings);
  /// softmax over the 4 event classes, [T x 4].
  Var<S> event_posterior(Tape<S>& tape, const Var<S>& frame_features, const Var<S>& running_mean);
  Var<S> event_posterior_from_embeddings(Tape<S>& tape, const Var<S>& embeddings,
                                         const Var<S>& running_mean);

  /// logits [N x T]: f_h(h_t) . f_s([s_i; mean_j s_j]).
  Var<S> vad_logits(Tape<S>& tape, const Var<S>& embeddings, std::span<const Var<S>> speakers);

  /// Full training graph on one example: random speaker order, sampled solo
  /// frames as speaker vectors, selector NLL plus collar-masked VAD loss.
  TrainLosses<S> forward_train(Tape<S>& tape, const TrainingExample& example, Rng& rng);

  /// Greedy selection of num_speakers speakers, binarization at logit 0
  /// (sigmoid 0.5), optional median filter (width 1 disables).
  InferenceResult infer(const Waveform& waveform, std::size_t num_speakers,
                        std::size_t median_width = 11);
  /// Same, returning the selected speaker bank too.
  InferenceResult infer(const Waveform& waveform, std::size_t num_speakers,
                        std::size_t median_width, SpeakerBank<S>* bank);

 private:
  Var<S> mlp(Tape<S>& tape, const std::string& prefix, const Var<S>& x);
  void build_parameters(std::uint64_t seed);

  ModelConfig config_;
  ParamStore<S> params_;
};

extern template class DiveModel<float>;
extern template class DiveModel<double>;

}  // namespace dive
