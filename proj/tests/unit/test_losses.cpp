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

#include <cmath>
#include <cstring>
#include <random>

#include "dive/losses.hpp"
#include "dive/ops.hpp"
#include "support/oracles.hpp"

using namespace dive;
using dive::testing::random_labels;
using dive::testing::random_tensor;

namespace {

Tensor64 random_posteriors(std::size_t n, std::size_t t, std::mt19937_64& rng) {
  Tape<double> tape(false);
  return softmax(tape.constant(random_tensor({n, t, 4}, rng, -3, 3))).value();
}

std::vector<EventClass> random_events(std::size_t count, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(0, 3);
  std::vector<EventClass> out(count);
  for (auto& e : out) e = static_cast<EventClass>(c(rng));
  return out;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("collar mask examples") {
  FrameLabels y(1, 10, 500.0);
  for (std::size_t t = 5; t < 10; ++t) y.set(0, t, true);
  CHECK(collar_mask(y, 0).excluded_count() == 0);
  const auto m = collar_mask(y, 2);
  CHECK(m.excluded == std::vector<std::uint8_t>{0, 0, 0, 1, 1, 1, 1, 0, 0, 0});
  FrameLabels flat(2, 10, 500.0);
  CHECK(collar_mask(flat, 4).excluded_count() == 0);
  CHECK(collar_radius_frames(0.25, 500.0) == 125);
}

TEST_CASE("collar mask matches enumeration and ignores speaker order") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const FrameLabels y = random_labels(2, 40, rng, 0.15);
    const std::size_t r = trial % 5;
    CHECK(collar_mask(y, r).excluded == testing::collar_oracle(y, r));
    FrameLabels swapped(2, 40, 500.0);
    for (std::size_t t = 0; t < 40; ++t) {
      swapped.set(0, t, y.at(1, t));
      swapped.set(1, t, y.at(0, t));
    }
    CHECK(collar_mask(swapped, r).excluded == collar_mask(y, r).excluded);
  }
}

TEST_CASE("selector nll examples") {
  Tape<double> tape(false);
  const std::vector<EventClass> ev{EventClass::NovelSingle, EventClass::Silence, EventClass::Overlap};
  auto uniform = tape.constant(Tensor64(Shape{1, 3, 4}, 0.25));
  CHECK(selector_nll(uniform, ev).value().item() == doctest::Approx(std::log(4.0)));
  Tensor64 hot(Shape{1, 3, 4});
  for (std::size_t t = 0; t < 3; ++t) hot[t * 4 + static_cast<std::size_t>(ev[t])] = 1.0;
  CHECK(selector_nll(tape.constant(hot), ev).value().item() == doctest::Approx(0.0));
  Tensor64 zero(Shape{1, 3, 4});
  const double clamped = selector_nll(tape.constant(zero), ev).value().item();
  CHECK(std::isfinite(clamped));
  CHECK(clamped == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("vad losses examples") {
  Tape<double> tape(false);
  FrameLabels y(2, 5, 500.0);
  y.set(0, 1, true);
  y.set(1, 3, true);
  CHECK(vad_bce(tape.constant(Tensor64(Shape{2, 5})), y).value().item() == doctest::Approx(std::log(2.0)));
  Tensor64 sat(Shape{2, 5});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t t = 0; t < 5; ++t) sat[i * 5 + t] = y.at(i, t) ? 100.0 : -100.0;
  }
  CHECK(vad_bce(tape.constant(sat), y).value().item() < 1e-40);

  FrameLabels silent(1, 4, 500.0);
  std::mt19937_64 rng(6);
  const Tensor64 logits = random_tensor({1, 4}, rng, -3, 3);
  double expected = 0;
  for (double v : logits.values()) expected -= std::log(1.0 / (1.0 + std::exp(v))) / 4;
  const auto mask = collar_mask(silent, 0);
  CHECK(vad_bce_collar(tape.constant(logits), silent, mask).value().item() == doctest::Approx(expected));
}

TEST_CASE("errors inside the collar do not count") {
  Tape<double> tape(false);
  FrameLabels y(1, 10, 500.0);
  for (std::size_t t = 5; t < 10; ++t) y.set(0, t, true);
  const auto mask = collar_mask(y, 2);
  Tensor64 good(Shape{1, 10});
  for (std::size_t t = 0; t < 10; ++t) good[t] = y.at(0, t) ? 30.0 : -30.0;
  Tensor64 bad = good;
  for (std::size_t t = 3; t < 7; ++t) bad[t] = -good[t];
  CHECK(vad_bce_collar(tape.constant(bad), y, mask).value().item() ==
        vad_bce_collar(tape.constant(good), y, mask).value().item());
  CHECK(vad_bce(tape.constant(bad), y).value().item() > 1.0);
}

TEST_CASE("all frames excluded gives zero and sets the flag") {
  Tape<double> tape(false);
  FrameLabels y(1, 4, 500.0);
  y.set(0, 2, true);
  const auto mask = collar_mask(y, 10);
  CHECK(mask.covers_all());
  std::mt19937_64 rng(1);
  CHECK(vad_bce_collar(tape.constant(random_tensor({1, 4}, rng)), y, mask).value().item() == 0.0);
}

TEST_CASE("losses match scalar-loop oracles") {
  std::mt19937_64 rng(12);
  Tape<double> tape(false);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor64 post = random_posteriors(4, 3, rng);
    const auto ev = random_events(12, rng);
    CHECK(std::abs(selector_nll(tape.constant(post), ev).value().item() -
                   testing::selector_nll_oracle(post, ev)) < 1e-6);
    const FrameLabels y = random_labels(2, 7, rng, 0.3);
    const Tensor64 logits = random_tensor({2, 7}, rng, -8, 8);
    CHECK(std::abs(vad_bce(tape.constant(logits), y).value().item() -
                   testing::vad_bce_oracle(logits, y)) < 1e-6);
    const auto mask = collar_mask(y, trial % 3);
    CHECK(std::abs(vad_bce_collar(tape.constant(logits), y, mask).value().item() -
                   testing::vad_bce_collar_oracle(logits, y, mask.excluded)) < 1e-6);
  }
}

TEST_CASE("radius zero reduces to the plain loss bitwise") {
  std::mt19937_64 rng(13);
  Tape<double> tape(false);
  for (int trial = 0; trial < 20; ++trial) {
    const FrameLabels y = random_labels(2, 33, rng, 0.2);
    auto logits = tape.constant(random_tensor({2, 33}, rng, -10, 10));
    const double a = vad_bce(logits, y).value().item();
    const double b = vad_bce_collar(logits, y, collar_mask(y, 0)).value().item();
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  }
}

TEST_CASE("masking is monotone and losses are non-negative") {
  std::mt19937_64 rng(14);
  Tape<double> tape(false);
  for (int trial = 0; trial < 30; ++trial) {
    const FrameLabels y = random_labels(2, 30, rng, 0.2);
    auto logits = tape.constant(random_tensor({2, 30}, rng, -5, 5));
    double prev = vad_bce(logits, y).value().item();
    CHECK(prev >= 0);
    for (std::size_t r = 1; r < 6; ++r) {
      const double cur = vad_bce_collar(logits, y, collar_mask(y, r)).value().item();
      CHECK(cur >= 0);
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
  }
}

TEST_CASE("total loss is the plain sum") {
  Tape<double> tape(false);
  CHECK(total_loss(tape.constant(Tensor64::scalar(0)), tape.constant(Tensor64::scalar(0))).value().item() == 0.0);
  CHECK(total_loss(tape.constant(Tensor64::scalar(std::log(4.0))),
                   tape.constant(Tensor64::scalar(std::log(2.0))))
            .value()
            .item() == doctest::Approx(std::log(8.0)));
}

TEST_CASE("loss gradients") {
  std::mt19937_64 rng(15);
  const FrameLabels y = random_labels(2, 6, rng, 0.3);
  const auto mask = collar_mask(y, 1);
  const auto ev = random_events(2 * 6, rng);
  using I = testing::Inputs;
  for (int p = 0; p < 5; ++p) {
    std::vector<Tensor64> in{random_tensor({2, 6}, rng, -3, 3)};
    CHECK(testing::grad_check(in, [&](Tape<double>&, const I& v) { return vad_bce(v[0], y); }).max_rel_error < 1e-4);
    CHECK(testing::grad_check(in, [&](Tape<double>&, const I& v) { return vad_bce_collar(v[0], y, mask); })
              .max_rel_error < 1e-4);
    std::vector<Tensor64> logits{random_tensor({2, 6, 4}, rng, -2, 2)};
    CHECK(testing::grad_check(logits, [&](Tape<double>&, const I& v) { return selector_nll(softmax(v[0]), ev); })
              .max_rel_error < 1e-4);
  }
}

}
