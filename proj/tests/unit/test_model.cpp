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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "dive/error.hpp"
#include "dive/model.hpp"
#include "dive/ops.hpp"
#include "support/oracles.hpp"
#include "support/tiny_model.hpp"

using namespace dive;
using dive::testing::tiny_config;
using dive::testing::tiny_example;

namespace {

std::vector<std::vector<float>> noise_windows(std::size_t count, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0, 0.3f);
  std::vector<std::vector<float>> out(count, std::vector<float>(len));
  for (auto& w : out) {
    for (auto& v : w) v = g(rng);
  }
  return out;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("config presets and validation") {
  const ModelConfig p = ModelConfig::paper();
  CHECK(p.downsample() == 16);
  CHECK(p.frames_for(32000) == 2000);
  CHECK(p.channels == 512);
  CHECK(ModelConfig::desk().downsample() == 16);
  CHECK(ModelConfig::desk().frame_rate() == 500.0);
  ModelConfig bad = ModelConfig::desk();
  bad.window_length = 1000;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK(ModelConfig::from_header(p.to_header()).to_header() == p.to_header());
}

TEST_CASE("encode length law and errors") {
  ModelConfig c = tiny_config();
  DiveModel<float> m(c, 1);
  Tape<float> tape(false);
  const auto one = noise_windows(1, 16, 2);
  CHECK(m.encode(tape, one).shape() == Shape{1, 8});
  const auto three = noise_windows(3, 512, 3);
  CHECK(m.encode(tape, three).shape() == Shape{3 * 32, 8});
  CHECK_THROWS_AS(m.encode(tape, noise_windows(1, 100, 4)), InvalidArgument);
  auto uneven = noise_windows(2, 32, 5);
  uneven[1].resize(48);
  CHECK_THROWS_AS(m.encode(tape, uneven), InvalidArgument);
}

TEST_CASE("full-size topology length law") {
  ModelConfig c = ModelConfig::paper();
  c.channels = 4;
  DiveModel<float> m(c, 1);
  Tape<float> tape(false);
  CHECK(m.encode(tape, noise_windows(1, 32000, 1)).shape()[0] == 2000);
}

TEST_CASE("permuting windows permutes time blocks") {
  DiveModel<double> m(tiny_config(), 3);
  const auto w = noise_windows(3, 256, 6);
  const std::vector<std::vector<float>> rev{w[2], w[1], w[0]};
  Tape<double> tape(false);
  const Tensor64 a = m.encode(tape, w).value(), b = m.encode(tape, rev).value();
  const std::size_t block = 16 * 8;
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::equal(a.data() + j * block, a.data() + (j + 1) * block, b.data() + (2 - j) * block));
  }
}

TEST_CASE("event posterior properties") {
  DiveModel<double> m(tiny_config(), 4);
  Tape<double> tape(false);
  auto h = m.encode(tape, noise_windows(2, 256, 7));
  std::mt19937_64 rng(1);
  auto mu = tape.constant(testing::random_tensor({8}, rng));
  const Tensor64 p = m.event_posterior_from_embeddings(tape, h, mu).value();
  REQUIRE(p.shape() == Shape{32, 4});
  for (std::size_t t = 0; t < 32; ++t) {
    double s = 0;
    for (std::size_t k = 0; k < 4; ++k) s += p.at(t, k);
    CHECK(std::abs(s - 1) < 1e-6);
  }

  const Tensor64 hv = h.value();
  Tensor64 dup(Shape{3, 8});
  for (std::size_t d = 0; d < 8; ++d) {
    dup.at(0, d) = hv.at(5, d);
    dup.at(1, d) = hv.at(9, d);
    dup.at(2, d) = hv.at(5, d);
  }
  const Tensor64 q = m.event_posterior_from_embeddings(tape, tape.constant(dup), mu).value();
  for (std::size_t k = 0; k < 4; ++k) CHECK(q.at(0, k) == q.at(2, k));

  for (auto& v : m.params().at("selector.context_net.out.weight").values()) v = 0;
  for (auto& v : m.params().at("selector.context_net.out.bias").values()) v = 0;
  Tape<double> t2(false);
  auto h2 = m.encode(t2, noise_windows(2, 256, 7));
  const Tensor64 u = m.event_posterior_from_embeddings(t2, h2, t2.constant(Tensor64(Shape{8}))).value();
  for (double v : u.values()) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("event labels") {
  FrameLabels y(2, 4, 500.0);
  y.set(0, 1, true);
  y.set(1, 2, true);
  y.set(0, 3, true);
  y.set(1, 3, true);
  auto none = build_event_labels(y, {false, false});
  CHECK(none == std::vector<EventClass>{EventClass::Silence, EventClass::NovelSingle,
                                         EventClass::NovelSingle, EventClass::Overlap});
  auto second = build_event_labels(y, {false, true});
  CHECK(second[2] == EventClass::SelectedSingle);
  CHECK(second[1] == EventClass::NovelSingle);
}

TEST_CASE("solo sampling") {
  FrameLabels y(1, 10, 500.0);
  y.set(0, 6, true);
  Rng rng(1);
  CHECK(sample_solo_frame(y, 0, rng) == 6);
  FrameLabels none(2, 5, 500.0);
  CHECK_THROWS_AS(sample_solo_frame(none, 0, rng), ResampleSignal);

  FrameLabels wide(2, 30, 500.0);
  for (std::size_t t = 0; t < 10; ++t) wide.set(0, t, true);
  for (std::size_t t = 5; t < 20; ++t) wide.set(1, t, true);
  const auto eligible = solo_frames(wide, 0);
  REQUIRE(eligible.size() == 5);
  std::map<std::size_t, int> counts;
  for (int k = 0; k < 10000; ++k) ++counts[sample_solo_frame(wide, 0, rng)];
  double chi2 = 0;
  for (auto t : eligible) chi2 += std::pow(counts[t] - 2000.0, 2) / 2000.0;
  CHECK(counts.size() == 5);
  CHECK(chi2 < 13.28);  // chi-square, 4 dof, p = 0.01
}

TEST_CASE("single solo frame is picked deterministically in training") {
  ModelConfig c = tiny_config();
  c.num_speakers = 1;
  DiveModel<double> m(c, 5);
  TrainingExample ex = tiny_example(c, 3);
  ex.labels = FrameLabels(1, 32, c.frame_rate());
  ex.labels.set(0, 21, true);
  for (std::uint64_t s = 0; s < 5; ++s) {
    Tape<double> tape;
    Rng rng(s);
    auto l = m.forward_train(tape, ex, rng);
    CHECK(l.sampled_frames == std::vector<std::size_t>{21});
  }
}

TEST_CASE("argmax_novel matches a scan oracle") {
  Tensor64 single(Shape{1, 4}, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  CHECK(argmax_novel(single).first == 0);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor64 p(Shape{17, 4});
    for (auto& v : p.values()) v = level(rng) / 4.0;
    std::size_t best = 0;
    for (std::size_t t = 0; t < 17; ++t) {
      if (p.at(t, 0) > p.at(best, 0)) best = t;
    }
    const auto [t, c] = argmax_novel(p);
    CHECK(t == best);
    CHECK(c == p.at(best, 0));
  }
}

TEST_CASE("vad logits permutation and finiteness") {
  DiveModel<double> m(tiny_config(), 6);
  Tape<double> tape(false);
  auto h = m.encode(tape, noise_windows(1, 256, 9));
  std::mt19937_64 rng(3);
  auto s1 = tape.constant(testing::random_tensor({8}, rng, -10, 10));
  auto s2 = tape.constant(testing::random_tensor({8}, rng, -10, 10));
  const std::vector<Var<double>> ab{s1, s2}, ba{s2, s1};
  const Tensor64 x = m.vad_logits(tape, h, ab).value(), y = m.vad_logits(tape, h, ba).value();
  REQUIRE(x.shape() == Shape{2, 16});
  for (std::size_t t = 0; t < 16; ++t) {
    CHECK(x.at(0, t) == y.at(1, t));
    CHECK(x.at(1, t) == y.at(0, t));
    CHECK(std::isfinite(x.at(0, t)));
  }
  const std::vector<Var<double>> one{s1}, twice{s1, s1};
  const Tensor64 o = m.vad_logits(tape, h, one).value(), w = m.vad_logits(tape, h, twice).value();
  for (std::size_t t = 0; t < 16; ++t) CHECK(o.at(0, t) == doctest::Approx(w.at(0, t)));
}

TEST_CASE("inference shapes, bank and median width 1") {
  DiveModel<float> m(tiny_config(), 7);
  Waveform wav{noise_windows(1, 1000, 10)[0], 8000};
  SpeakerBank<float> bank;
  const auto r = m.infer(wav, 2, 1, &bank);
  CHECK(r.labels.num_speakers == 2);
  CHECK(r.labels.num_frames == 1000 / 16);
  for (auto v : r.labels.active) CHECK(v <= 1);
  REQUIRE(bank.vectors.size() == 2);
  for (double c : r.confidences) CHECK((c >= 0 && c <= 1));
  for (float v : bank.running_means[0].values()) CHECK(v == 0.0f);
  CHECK(bank.running_means[1] == bank.vectors[0]);
  for (std::size_t d = 0; d < 8; ++d) {
    CHECK(bank.mean[d] == doctest::Approx((bank.vectors[0][d] + bank.vectors[1][d]) / 2));
  }
  CHECK(m.infer(wav, 2, 1).labels == r.labels);
}

TEST_CASE("collar radius zero logs identical losses") {
  ModelConfig c = tiny_config();
  c.collar_radius_s = 0;
  DiveModel<double> m(c, 8);
  Tape<double> tape;
  Rng rng(2);
  auto l = m.forward_train(tape, tiny_example(c, 4), rng);
  CHECK(l.vad == l.vad_collar.value().item());
  CHECK(l.total.value().item() == doctest::Approx(l.selector.value().item() + l.vad));
}

TEST_CASE("expected loss is invariant under speaker relabeling") {
  ModelConfig c = tiny_config();
  c.collar_radius_s = 0;
  DiveModel<double> m(c, 9);
  TrainingExample ex = tiny_example(c, 5);
  ex.labels = FrameLabels(2, 32, c.frame_rate());
  ex.labels.set(0, 3, true);
  ex.labels.set(1, 20, true);
  for (std::size_t t = 8; t < 12; ++t) {
    ex.labels.set(0, t, true);
    ex.labels.set(1, t, true);
  }
  auto average = [&](const TrainingExample& e) {
    std::map<std::size_t, double> by_first;
    for (std::uint64_t s = 0; by_first.size() < 2 && s < 100; ++s) {
      Tape<double> tape;
      Rng rng(s);
      auto l = m.forward_train(tape, e, rng);
      by_first[l.speaker_order[0]] = l.total.value().item();
    }
    REQUIRE(by_first.size() == 2);
    return (by_first[0] + by_first[1]) / 2;
  };
  TrainingExample swapped = ex;
  for (std::size_t t = 0; t < 32; ++t) {
    swapped.labels.set(0, t, ex.labels.at(1, t));
    swapped.labels.set(1, t, ex.labels.at(0, t));
  }
  CHECK(average(ex) == doctest::Approx(average(swapped)).epsilon(1e-12));
}

TEST_CASE("full loss gradient on a tiny model") {
  const auto r = testing::model_grad_check(tiny_config(), 11);
  CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst << " " << r.max_rel_error);
  CHECK(r.checked > 1000);
  CHECK(r.kinked * 20 <= r.checked);
}

TEST_CASE("weights adopt by name and shape") {
  DiveModel<float> a(tiny_config(), 1);
  DiveModel<float> b(tiny_config(), a.params());
  CHECK(b.params().at("vad.speaker_net.out.weight") == a.params().at("vad.speaker_net.out.weight"));
  ModelConfig wider = tiny_config();
  wider.channels = 16;
  CHECK_THROWS_AS(DiveModel<float>(wider, a.params()), FormatError);
  CHECK(DiveModel<float>(tiny_config(), 1).params().at("encoder.input.kernel") ==
        a.params().at("encoder.input.kernel"));
}

}
