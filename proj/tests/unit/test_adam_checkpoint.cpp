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
#include <filesystem>
#include <random>

#include "dive/adam.hpp"
#include "dive/checkpoint.hpp"
#include "dive/error.hpp"
#include "dive/ops.hpp"
#include "support/oracles.hpp"

using namespace dive;

TEST_SUITE("tensor_core") {

TEST_CASE("lr schedule") {
  AdamConfig c;
  CHECK(lr_schedule(c, 0) == doctest::Approx(0.0003));
  CHECK(lr_schedule(c, 49999) == doctest::Approx(0.0003));
  CHECK(lr_schedule(c, 50000) == doctest::Approx(0.00021));
  CHECK(lr_schedule(c, 100000) == doctest::Approx(0.0003 * 0.49));
  c.decay_every = 10;
  CHECK(lr_schedule(c, 25) == doctest::Approx(0.0003 * 0.49));
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
  ParamStore<float> p;
  p.add("w", Tensor::vector({1.f, -2.f, 3.f}));
  p.zero_grad();
  auto s = AdamState<float>::zeros_like(p);
  const Tensor before = p.at("w");
  adam_step(p, s, AdamConfig{});
  CHECK(std::vector<float>(p.at("w").values().begin(), p.at("w").values().end()) ==
        std::vector<float>(before.values().begin(), before.values().end()));
  CHECK(s.step == 1);
}

TEST_CASE("adam matches a scalar oracle over ten steps") {
  const double grads[10] = {0.5, -1.0, 2.0, 0.1, -0.3, 0.0, 4.0, -2.5, 1e-3, 0.7};
  AdamConfig c;
  c.base_lr = 0.01;
  c.decay_every = 4;
  ParamStore<double> p;
  p.add("x", Tensor64::vector({1.5}));
  auto s = AdamState<double>::zeros_like(p);
  double x = 1.5, m = 0, v = 0;
  for (int k = 0; k < 10; ++k) {
    p.at("x").grad()[0] = grads[k];
    adam_step(p, s, c);
    const double lr = 0.01 * std::pow(0.7, std::floor(k / 4.0));
    m = 0.9 * m + 0.1 * grads[k];
    v = 0.999 * v + 0.001 * grads[k] * grads[k];
    const double mh = m / (1 - std::pow(0.9, k + 1)), vh = v / (1 - std::pow(0.999, k + 1));
    x -= lr * mh / (std::sqrt(vh) + 1e-8);
    CHECK(std::abs(p.at("x")[0] - x) < 1e-6);
  }
}

TEST_CASE("adam rejects non-finite gradients without touching state") {
  ParamStore<float> p;
  p.add("w", Tensor::vector({1.f}));
  p.at("w").grad()[0] = std::nanf("");
  auto s = AdamState<float>::zeros_like(p);
  s.step = 41;
  try {
    adam_step(p, s, AdamConfig{});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 41);
  }
  CHECK(p.at("w")[0] == 1.f);
  CHECK(s.step == 41);
}

TEST_CASE("adam is deterministic") {
  auto run = [] {
    std::mt19937_64 rng(4);
    ParamStore<float> p;
    p.add("w", testing::random_tensor({5}, rng).cast<float>());
    auto s = AdamState<float>::zeros_like(p);
    for (int k = 0; k < 20; ++k) {
      p.zero_grad();
      Tape<float> tape;
      auto w = tape.parameter(p, "w");
      tape.backward(dot(w, w));
      adam_step(p, s, AdamConfig{});
    }
    return std::vector<float>(p.at("w").values().begin(), p.at("w").values().end());
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round-trips byte-exactly") {
  std::mt19937_64 rng(8);
  Checkpoint c;
  c.header = {{"channels", "8"}, {"seed", "3"}};
  c.params.add("a.weight", testing::random_tensor({3, 4}, rng).cast<float>());
  c.params.add("b", testing::random_tensor({2, 1, 5}, rng).cast<float>());
  c.params.add("s", Tensor::scalar(0.25f));
  c.adam = AdamState<float>::zeros_like(c.params);
  c.adam.first_moment.at("b")[3] = 1.5f;
  c.adam.step = 12345678901LL;
  const auto bytes = encode_checkpoint(c);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DIVE");
  const Checkpoint d = decode_checkpoint(bytes);
  CHECK(d.header == c.header);
  CHECK(d.adam.step == c.adam.step);
  CHECK(d.params.names() == c.params.names());
  for (const auto& [name, t] : c.params) CHECK(d.params.at(name) == t);
  CHECK(d.adam.first_moment.at("b") == c.adam.first_moment.at("b"));
  CHECK(encode_checkpoint(d) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "dive_unit_ckpt.dive";
  save_checkpoint(path, c);
  CHECK(encode_checkpoint(load_checkpoint(path)) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints name the failing field") {
  Checkpoint c;
  c.params.add("w", Tensor::vector({1.f, 2.f}));
  c.adam = AdamState<float>::zeros_like(c.params);
  auto bytes = encode_checkpoint(c);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  try {
    decode_checkpoint(bad_magic);
    FAIL("expected format error");
  } catch (const FormatError& e) {
    CHECK(e.field() == "magic");
  }
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 99;
  try {
    decode_checkpoint(bad_version);
    FAIL("expected format error");
  } catch (const FormatError& e) {
    CHECK(e.field() == "version");
  }
}

}
