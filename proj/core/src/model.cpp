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

#include "dive/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dive/error.hpp"
#include "dive/eval.hpp"
#include "dive/ops.hpp"

namespace dive {

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.channels = 512;
  c.num_blocks = 4;
  c.layers_per_block = 10;
  c.window_length = 32000;
  c.windows_per_example = 6;
  return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

std::size_t ModelConfig::downsample() const {
  return input_stride * (num_blocks > 1 ? pool_stride : 1);
}

std::size_t ModelConfig::frames_for(std::size_t samples) const {
  std::size_t t = (samples + input_stride - 1) / input_stride;
  if (num_blocks > 1) t = (t + pool_stride - 1) / pool_stride;
  return t;
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("model config: " + what);
  };
  require(sample_rate > 0, "sample_rate must be positive");
  require(channels > 0, "channels must be positive");
  require(input_kernel > 0 && input_stride > 0, "input conv kernel/stride must be positive");
  require(num_blocks > 0 && layers_per_block > 0, "need at least one block and layer");
  require(block_kernel > 0, "block_kernel must be positive");
  require(pool_kernel > 0 && pool_stride > 0, "pool kernel/stride must be positive");
  require(layers_per_block < 31, "layers_per_block too large for 2^l dilation");
  require(window_length > 0 && window_length % downsample() == 0,
          "window_length must be a positive multiple of " + std::to_string(downsample()));
  require(windows_per_example > 0, "windows_per_example must be positive");
  require(collar_radius_s >= 0, "collar radius must be non-negative");
  require(num_speakers > 0, "num_speakers must be positive");
  require(layer_norm_eps > 0, "layer_norm_eps must be positive");
}

std::map<std::string, std::string> ModelConfig::to_header() const {
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  return {
      {"sample_rate", std::to_string(sample_rate)},
      {"channels", std::to_string(channels)},
      {"input_kernel", std::to_string(input_kernel)},
      {"input_stride", std::to_string(input_stride)},
      {"num_blocks", std::to_string(num_blocks)},
      {"layers_per_block", std::to_string(layers_per_block)},
      {"block_kernel", std::to_string(block_kernel)},
      {"pool_kernel", std::to_string(pool_kernel)},
      {"pool_stride", std::to_string(pool_stride)},
      {"hidden_layers", std::to_string(hidden_layers)},
      {"window_length", std::to_string(window_length)},
      {"windows", std::to_string(windows_per_example)},
      {"collar_train_s", num(collar_radius_s)},
      {"num_speakers", std::to_string(num_speakers)},
      {"prelu_init", num(prelu_init)},
      {"layer_norm_eps", num(layer_norm_eps)},
  };
}

ModelConfig ModelConfig::from_header(const std::map<std::string, std::string>& header) {
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    auto it = header.find(key);
    if (it == header.end()) return;
    std::istringstream is(it->second);
    is >> field;
    if (!is || !is.eof()) throw FormatError(std::string("header.") + key, "bad value '" + it->second + "'");
  };
  get("sample_rate", c.sample_rate);
  get("channels", c.channels);
  get("input_kernel", c.input_kernel);
  get("input_stride", c.input_stride);
  get("num_blocks", c.num_blocks);
  get("layers_per_block", c.layers_per_block);
  get("block_kernel", c.block_kernel);
  get("pool_kernel", c.pool_kernel);
  get("pool_stride", c.pool_stride);
  get("hidden_layers", c.hidden_layers);
  get("window_length", c.window_length);
  get("windows", c.windows_per_example);
  get("collar_train_s", c.collar_radius_s);
  get("num_speakers", c.num_speakers);
  get("prelu_init", c.prelu_init);
  get("layer_norm_eps", c.layer_norm_eps);
  return c;
}

std::vector<EventClass> build_event_labels(const FrameLabels& labels,
                                           const std::vector<bool>& selected) {
  std::vector<EventClass> out(labels.num_frames);
  for (std::size_t t = 0; t < labels.num_frames; ++t) {
    std::size_t count = 0, who = 0;
    for (std::size_t i = 0; i < labels.num_speakers; ++i) {
      if (labels.at(i, t)) {
        ++count;
        who = i;
      }
    }
    if (count == 0) {
      out[t] = EventClass::Silence;
    } else if (count >= 2) {
      out[t] = EventClass::Overlap;
    } else {
      out[t] = who < selected.size() && selected[who] ? EventClass::SelectedSingle
                                                      : EventClass::NovelSingle;
    }
  }
  return out;
}

std::vector<std::size_t> solo_frames(const FrameLabels& labels, std::size_t speaker) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < labels.num_frames; ++t) {
    if (labels.at(speaker, t) && labels.active_count(t) == 1) out.push_back(t);
  }
  return out;
}

std::size_t sample_solo_frame(const FrameLabels& labels, std::size_t speaker, Rng& rng) {
  const auto frames = solo_frames(labels, speaker);
  if (frames.empty()) {
    throw ResampleSignal("speaker " + std::to_string(speaker) + " has no solo frame");
  }
  std::uniform_int_distribution<std::size_t> pick(0, frames.size() - 1);
  return frames[pick(rng)];
}

template <typename S>
std::pair<std::size_t, double> argmax_novel(const BasicTensor<S>& posterior) {
  if (posterior.rank() != 2 || posterior.dim(1) != kNumEventClasses || posterior.dim(0) == 0) {
    throw InvalidArgument("argmax_novel: expected [T x 4], got " + shape_string(posterior.shape()));
  }
  std::size_t best = 0;
  for (std::size_t t = 1; t < posterior.dim(0); ++t) {
    if (posterior.at(t, 0) > posterior.at(best, 0)) best = t;
  }
  return {best, static_cast<double>(posterior.at(best, 0))};
}

namespace {

struct ParamSpec {
  std::string name;
  Shape shape;
  enum Kind { Weight, Zero, One, Slope } kind;
  std::size_t fan_in = 1;
};

void mlp_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t in,
               std::size_t width, std::size_t hidden, std::size_t out_dim) {
  std::size_t cur = in;
  for (std::size_t j = 0; j < hidden; ++j) {
    const std::string p = prefix + ".hidden" + std::to_string(j);
    out.push_back({p + ".weight", {cur, width}, ParamSpec::Weight, cur});
    out.push_back({p + ".bias", {width}, ParamSpec::Zero});
    out.push_back({p + ".prelu", {width}, ParamSpec::Slope});
    out.push_back({p + ".norm.gain", {width}, ParamSpec::One});
    out.push_back({p + ".norm.bias", {width}, ParamSpec::Zero});
    cur = width;
  }
  out.push_back({prefix + ".out.weight", {cur, out_dim}, ParamSpec::Weight, cur});
  out.push_back({prefix + ".out.bias", {out_dim}, ParamSpec::Zero});
}

std::vector<ParamSpec> parameter_specs(const ModelConfig& c) {
  const std::size_t d = c.channels;
  std::vector<ParamSpec> specs;
  specs.push_back({"encoder.input.kernel", {c.input_kernel, 1, d}, ParamSpec::Weight, c.input_kernel});
  specs.push_back({"encoder.input.bias", {d}, ParamSpec::Zero});
  specs.push_back({"encoder.input.prelu", {d}, ParamSpec::Slope});
  for (std::size_t b = 0; b < c.num_blocks; ++b) {
    for (std::size_t l = 0; l < c.layers_per_block; ++l) {
      const std::string p = "encoder.block" + std::to_string(b) + ".layer" + std::to_string(l);
      specs.push_back({p + ".kernel", {c.block_kernel, d, d}, ParamSpec::Weight, c.block_kernel * d});
      specs.push_back({p + ".bias", {d}, ParamSpec::Zero});
      specs.push_back({p + ".prelu", {d}, ParamSpec::Slope});
      specs.push_back({p + ".norm.gain", {d}, ParamSpec::One});
      specs.push_back({p + ".norm.bias", {d}, ParamSpec::Zero});
    }
  }
  mlp_specs(specs, "selector.frame_net", d, d, c.hidden_layers, d);
  mlp_specs(specs, "selector.context_net", d, d, c.hidden_layers, kNumEventClasses * d);
  mlp_specs(specs, "vad.frame_net", d, d, c.hidden_layers, d);
  mlp_specs(specs, "vad.speaker_net", 2 * d, d, c.hidden_layers, d);
  return specs;
}

}  // namespace

template <typename S>
DiveModel<S>::DiveModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  build_parameters(seed);
}

template <typename S>
DiveModel<S>::DiveModel(ModelConfig config, ParamStore<S> params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const auto specs = parameter_specs(config_);
  if (specs.size() != params_.size()) {
    throw FormatError("params", "expected " + std::to_string(specs.size()) + " tensors, got " +
                                    std::to_string(params_.size()));
  }
  for (const auto& spec : specs) {
    if (!params_.contains(spec.name)) throw FormatError(spec.name, "missing parameter");
    if (params_.at(spec.name).shape() != spec.shape) {
      throw FormatError(spec.name, "shape " + shape_string(params_.at(spec.name).shape()) +
                                       " does not match config " + shape_string(spec.shape));
    }
  }
}

template <typename S>
void DiveModel<S>::build_parameters(std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x1417u});
  for (const auto& spec : parameter_specs(config_)) {
    BasicTensor<S> t(spec.shape);
    switch (spec.kind) {
      case ParamSpec::Weight: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (auto& v : t.values()) v = static_cast<S>(u(rng));
        break;
      }
      case ParamSpec::Zero:
        break;
      case ParamSpec::One:
        for (auto& v : t.values()) v = S(1);
        break;
      case ParamSpec::Slope:
        for (auto& v : t.values()) v = static_cast<S>(config_.prelu_init);
        break;
    }
    params_.add(spec.name, std::move(t));
  }
}

template <typename S>
Var<S> DiveModel<S>::mlp(Tape<S>& tape, const std::string& prefix, const Var<S>& input) {
  Var<S> x = input;
  for (std::size_t j = 0; j < config_.hidden_layers; ++j) {
    const std::string p = prefix + ".hidden" + std::to_string(j);
    x = linear(x, tape.parameter(params_, p + ".weight"), tape.parameter(params_, p + ".bias"));
    x = prelu(x, tape.parameter(params_, p + ".prelu"));
    x = layer_norm(x, tape.parameter(params_, p + ".norm.gain"),
                   tape.parameter(params_, p + ".norm.bias"), config_.layer_norm_eps);
  }
  return linear(x, tape.parameter(params_, prefix + ".out.weight"),
                tape.parameter(params_, prefix + ".out.bias"));
}

template <typename S>
Var<S> DiveModel<S>::encode(Tape<S>& tape, std::span<const std::vector<float>> windows) {
  if (windows.empty()) throw InvalidArgument("encode: no windows");
  const std::size_t ds = config_.downsample();
  const std::size_t len = windows[0].size();
  for (const auto& w : windows) {
    if (w.size() != len) throw InvalidArgument("encode: windows must have equal length");
  }
  if (len == 0 || len % ds != 0) {
    throw InvalidArgument("encode: window length " + std::to_string(len) +
                          " is not a positive multiple of " + std::to_string(ds));
  }
  std::vector<Var<S>> parts;
  for (const auto& w : windows) {
    BasicTensor<S> x(Shape{len, 1});
    for (std::size_t i = 0; i < len; ++i) x[i] = static_cast<S>(w[i]);
    Var<S> h = conv1d(tape.constant(std::move(x)), tape.parameter(params_, "encoder.input.kernel"),
                      tape.parameter(params_, "encoder.input.bias"), config_.input_stride, 1);
    h = prelu(h, tape.parameter(params_, "encoder.input.prelu"));
    for (std::size_t b = 0; b < config_.num_blocks; ++b) {
      if (b == 1) h = avg_pool1d(h, config_.pool_kernel, config_.pool_stride);
      for (std::size_t l = 0; l < config_.layers_per_block; ++l) {
        const std::string p = "encoder.block" + std::to_string(b) + ".layer" + std::to_string(l);
        Var<S> y = conv1d(h, tape.parameter(params_, p + ".kernel"),
                          tape.parameter(params_, p + ".bias"), 1, std::size_t{1} << l);
        y = prelu(y, tape.parameter(params_, p + ".prelu"));
        y = layer_norm(y, tape.parameter(params_, p + ".norm.gain"),
                       tape.parameter(params_, p + ".norm.bias"), config_.layer_norm_eps);
        h = add(h, y);
      }
    }
    parts.push_back(h);
  }
  return parts.size() == 1 ? parts[0] : concat_rows<S>(parts);
}

template <typename S>
Var<S> DiveModel<S>::selector_frame_features(Tape<S>& tape, const Var<S>& embeddings) {
  return mlp(tape, "selector.frame_net", embeddings);
}

template <typename S>
Var<S> DiveModel<S>::event_posterior(Tape<S>& tape, const Var<S>& frame_features,
                                     const Var<S>& running_mean) {
  Var<S> classifier = reshape(mlp(tape, "selector.context_net", running_mean),
                              Shape{kNumEventClasses, config_.channels});
  return softmax(matmul(frame_features, transpose(classifier)));
}

template <typename S>
Var<S> DiveModel<S>::event_posterior_from_embeddings(Tape<S>& tape, const Var<S>& embeddings,
                                                     const Var<S>& running_mean) {
  return event_posterior(tape, selector_frame_features(tape, embeddings), running_mean);
}

template <typename S>
Var<S> DiveModel<S>::vad_logits(Tape<S>& tape, const Var<S>& embeddings,
                                std::span<const Var<S>> speakers) {
  if (speakers.empty()) throw InvalidArgument("vad_logits: empty speaker bank");
  Var<S> frame = mlp(tape, "vad.frame_net", embeddings);
  Var<S> mean = mean_of(speakers);
  std::vector<Var<S>> rows;
  for (const auto& s : speakers) {
    const std::vector<Var<S>> pair{s, mean};
    rows.push_back(reshape(concat<S>(pair), Shape{1, 2 * config_.channels}));
  }
  Var<S> speaker = mlp(tape, "vad.speaker_net", concat_rows<S>(rows));
  return matmul(speaker, transpose(frame));
}

template <typename S>
TrainLosses<S> DiveModel<S>::forward_train(Tape<S>& tape, const TrainingExample& example, Rng& rng) {
  const FrameLabels& labels = example.labels;
  const std::size_t n = labels.num_speakers;
  if (n == 0) throw InvalidArgument("forward_train: labels have no speakers");
  Var<S> h = encode(tape, example.windows);
  const std::size_t frames = h.shape()[0];
  if (frames != labels.num_frames) {
    throw InvalidArgument("forward_train: encoder produced " + std::to_string(frames) +
                          " frames for " + std::to_string(labels.num_frames) + " label frames");
  }

  TrainLosses<S> out;
  out.speaker_order.resize(n);
  std::iota(out.speaker_order.begin(), out.speaker_order.end(), std::size_t{0});
  std::shuffle(out.speaker_order.begin(), out.speaker_order.end(), rng);

  Var<S> features = selector_frame_features(tape, h);
  Var<S> mu = tape.constant(BasicTensor<S>(Shape{config_.channels}));
  std::vector<bool> selected(n, false);
  std::vector<Var<S>> posteriors, chosen, by_label(n);
  std::vector<EventClass> events;
  events.reserve(n * frames);
  for (std::size_t i = 0; i < n; ++i) {
    posteriors.push_back(event_posterior(tape, features, mu));
    const auto ev = build_event_labels(labels, selected);
    events.insert(events.end(), ev.begin(), ev.end());
    const std::size_t speaker = out.speaker_order[i];
    const std::size_t t = sample_solo_frame(labels, speaker, rng);
    out.sampled_frames.push_back(t);
    Var<S> s = row(h, t);
    by_label[speaker] = s;
    chosen.push_back(s);
    selected[speaker] = true;
    mu = mean_of<S>(chosen);
  }
  Var<S> stacked = reshape(concat_rows<S>(posteriors), Shape{n, frames, kNumEventClasses});
  out.selector = selector_nll(stacked, events);

  Var<S> logits = vad_logits(tape, h, by_label);
  const CollarMask mask =
      collar_mask(labels, collar_radius_frames(config_.collar_radius_s, config_.frame_rate()));
  out.all_frames_excluded = mask.covers_all();
  out.vad_collar = vad_bce_collar(logits, labels, mask);
  out.vad = static_cast<double>(vad_bce(logits, labels).value().item());
  out.total = total_loss(out.selector, out.vad_collar);
  return out;
}

template <typename S>
InferenceResult DiveModel<S>::infer(const Waveform& waveform, std::size_t num_speakers,
                                    std::size_t median_width) {
  return infer(waveform, num_speakers, median_width, nullptr);
}

template <typename S>
InferenceResult DiveModel<S>::infer(const Waveform& waveform, std::size_t num_speakers,
                                    std::size_t median_width, SpeakerBank<S>* bank) {
  if (num_speakers == 0) throw InvalidArgument("infer: num_speakers must be positive");
  if (waveform.samples.empty()) throw InvalidArgument("infer: empty waveform");
  const std::size_t ds = config_.downsample();
  const std::size_t keep = waveform.size() / ds;
  std::vector<std::vector<float>> windows(1, waveform.samples);
  windows[0].resize((waveform.size() + ds - 1) / ds * ds, 0.0f);

  Tape<S> tape(false);
  Var<S> h = encode(tape, windows);
  Var<S> features = selector_frame_features(tape, h);
  Var<S> mu = tape.constant(BasicTensor<S>(Shape{config_.channels}));
  std::vector<Var<S>> chosen;
  InferenceResult result;
  if (bank) *bank = SpeakerBank<S>{};
  for (std::size_t i = 0; i < num_speakers; ++i) {
    if (bank) bank->running_means.push_back(mu.value());
    const BasicTensor<S> post = event_posterior(tape, features, mu).value();
    const std::size_t usable = keep > 0 ? keep : post.dim(0);
    BasicTensor<S> head(Shape{usable, kNumEventClasses},
                        std::vector<S>(post.data(), post.data() + usable * kNumEventClasses));
    const auto [t_star, confidence] = argmax_novel(head);
    result.argmax_frames.push_back(t_star);
    result.confidences.push_back(confidence);
    Var<S> s = row(h, t_star);
    chosen.push_back(s);
    if (bank) {
      bank->vectors.push_back(s.value());
      bank->argmax_frames.push_back(t_star);
      bank->confidences.push_back(confidence);
    }
    mu = mean_of<S>(chosen);
  }
  if (bank) bank->mean = mu.value();

  const BasicTensor<S>& logits = vad_logits(tape, h, chosen).value();
  const std::size_t frames = logits.dim(1);
  FrameLabels labels(num_speakers, keep, config_.frame_rate());
  for (std::size_t i = 0; i < num_speakers; ++i) {
    labels.speakers.push_back("spk" + std::to_string(i + 1));
    for (std::size_t t = 0; t < keep; ++t) labels.set(i, t, logits[i * frames + t] >= S(0));
  }
  result.labels = median_width > 1 ? median_filter(labels, median_width) : labels;
  return result;
}

template class DiveModel<float>;
template class DiveModel<double>;
template std::pair<std::size_t, double> argmax_novel(const BasicTensor<float>&);
template std::pair<std::size_t, double> argmax_novel(const BasicTensor<double>&);

}  // namespace dive
