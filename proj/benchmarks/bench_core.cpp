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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dive/data.hpp"
#include "dive/error.hpp"
#include "dive/eval.hpp"
#include "dive/model.hpp"
#include "dive/ops.hpp"
#include "dive/rng.hpp"
#include "dive/synth.hpp"

using namespace dive;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = g(rng);
  return t;
}

std::vector<std::vector<float>> noise_windows(std::size_t count, std::size_t len) {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> g(0.0f, 0.3f);
  std::vector<std::vector<float>> out(count, std::vector<float>(len));
  for (auto& w : out) {
    for (auto& v : w) v = g(rng);
  }
  return out;
}

}  // namespace

// Desk-sized dilated layer: [1000 x 64] through a K=3 kernel.
static void BM_Conv1d(benchmark::State& state) {
  const std::size_t dilation = static_cast<std::size_t>(state.range(0));
  Tape<float> tape(false);
  auto x = tape.constant(random_tensor({1000, 64}, 1));
  auto k = tape.constant(random_tensor({3, 64, 64}, 2));
  auto b = tape.constant(random_tensor({64}, 3));
  for (auto _ : state) {
    Tape<float> t(false);
    benchmark::DoNotOptimize(conv1d(t.constant(x.value()), t.constant(k.value()), t.constant(b.value()), 1,
                                    dilation));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Conv1d)->Arg(1)->Arg(8);

static void BM_Encode(benchmark::State& state) {
  DiveModel<float> model(ModelConfig::desk(), 1);
  const auto windows = noise_windows(3, 16000);
  for (auto _ : state) {
    Tape<float> tape(false);
    benchmark::DoNotOptimize(model.encode(tape, windows));
  }
  state.SetItemsProcessed(state.iterations() * 48000);
}
BENCHMARK(BM_Encode)->Unit(benchmark::kMillisecond);

static void BM_TrainForwardBackward(benchmark::State& state) {
  const ModelConfig c = ModelConfig::desk();
  DiveModel<float> model(c, 1);
  const Conversation conv = synth_conversation(SynthConfig{}, 3);
  const FrameLabels labels =
      frame_labels_from_segments(conv.segments, conv.waveform.size(), c.sample_rate, c.downsample(),
                                 speaker_ids(conv.segments));
  std::uint64_t draw = 0;
  for (auto _ : state) {
    Rng rng = make_rng(7, {draw++});
    try {
      const TrainingExample ex =
          sample_windows(conv.waveform, labels, c.windows_per_example, c.window_length, c.downsample(), rng);
      Tape<float> tape;
      model.params().zero_grad();
      tape.backward(model.forward_train(tape, ex, rng).total);
    } catch (const ResampleSignal&) {
    }
  }
}
BENCHMARK(BM_TrainForwardBackward)->Unit(benchmark::kMillisecond);

static void BM_Infer30s(benchmark::State& state) {
  DiveModel<float> model(ModelConfig::desk(), 1);
  const Conversation conv = synth_conversation(SynthConfig{}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.infer(conv.waveform, 2, 1));
}
BENCHMARK(BM_Infer30s)->Unit(benchmark::kMillisecond);

static void BM_Der(benchmark::State& state) {
  const Conversation ref = synth_conversation(SynthConfig{}, 5);
  SegmentList hyp = ref.segments;
  for (auto& s : hyp) s.onset += 0.07;
  for (auto _ : state) benchmark::DoNotOptimize(der(ref.segments, hyp, 0.25, false));
}
BENCHMARK(BM_Der);

static void BM_MedianFilter(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::bernoulli_distribution flip(0.05);
  std::vector<std::uint8_t> mask(15000);
  std::uint8_t v = 0;
  for (auto& m : mask) {
    if (flip(rng)) v ^= 1;
    m = v;
  }
  for (auto _ : state) benchmark::DoNotOptimize(median_filter(mask, 11));
}
BENCHMARK(BM_MedianFilter);

BENCHMARK_MAIN();
