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
#include <random>

#include "dive/error.hpp"
#include "dive/ops.hpp"
#include "support/op_graphs.hpp"
#include "support/oracles.hpp"

using namespace dive;
using dive::testing::random_tensor;

namespace {

constexpr double kGradTol = 1e-4;

Tensor64 seq(Shape shape) {
  Tensor64 t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i + 1);
  return t;
}

}  // namespace

TEST_SUITE("tensor_core") {

TEST_CASE("tensor shape invariants") {
  Tensor t(Shape{2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK_FALSE(t.has_grad());
  CHECK(t.grad().size() == t.size());
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<float>{1, 2, 3}), InvalidArgument);
  CHECK(Tensor::scalar(3.0f).item() == 3.0f);
}

TEST_CASE("param store iterates sorted and rejects duplicates") {
  ParamStore<float> s;
  s.add("b", Tensor(Shape{1}));
  s.add("a", Tensor(Shape{2}));
  CHECK(s.names() == std::vector<std::string>{"a", "b"});
  CHECK(s.num_values() == 3);
  CHECK_THROWS_AS(s.add("a", Tensor(Shape{1})), InvalidArgument);
}

TEST_CASE("conv1d output length and identity") {
  Tape<float> tape(false);
  auto x = tape.constant(Tensor(Shape{32000, 1}));
  auto k = tape.constant(Tensor(Shape{16, 1, 4}));
  auto b = tape.constant(Tensor(Shape{4}));
  CHECK(conv1d(x, k, b, 8, 1).shape() == Shape{4000, 4});

  Tensor64 in = seq({5, 3});
  Tensor64 eye(Shape{1, 3, 3});
  for (std::size_t c = 0; c < 3; ++c) eye[c * 3 + c] = 1.0;
  Tape<double> t2(false);
  auto y = conv1d(t2.constant(in), t2.constant(eye), t2.constant(Tensor64(Shape{3})), 1, 1);
  CHECK(y.value() == in);
}

TEST_CASE("conv1d matches direct summation") {
  std::mt19937_64 rng(3);
  const Tensor64 x = random_tensor({8, 2}, rng), k = random_tensor({3, 2, 2}, rng),
                 b = random_tensor({2}, rng);
  Tape<double> tape(false);
  const Tensor64 y = conv1d(tape.constant(x), tape.constant(k), tape.constant(b), 1, 2).value();
  const std::ptrdiff_t left = (3 - 1) * 2 / 2;
  for (std::size_t t = 0; t < 8; ++t) {
    for (std::size_t o = 0; o < 2; ++o) {
      double acc = b[o];
      for (std::size_t j = 0; j < 3; ++j) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(2 * j) - left;
        if (src < 0 || src >= 8) continue;
        for (std::size_t c = 0; c < 2; ++c) acc += x.at(src, c) * k[(j * 2 + c) * 2 + o];
      }
      CHECK(y.at(t, o) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("conv1d rejects mismatched channels") {
  Tape<float> tape(false);
  auto x = tape.constant(Tensor(Shape{8, 2}));
  auto k = tape.constant(Tensor(Shape{3, 3, 2}));
  auto b = tape.constant(Tensor(Shape{2}));
  CHECK_THROWS_AS(conv1d(x, k, b, 1, 1), InvalidArgument);
}

TEST_CASE("length law for conv1d and avg_pool1d") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> tin(1, 90), kk(1, 7), st(1, 5), dl(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = tin(rng), k = kk(rng), s = st(rng), d = dl(rng);
    Tape<float> tape(false);
    auto x = tape.constant(Tensor(Shape{t, 2}));
    auto y = conv1d(x, tape.constant(Tensor(Shape{k, 2, 3})), tape.constant(Tensor(Shape{3})), s, d);
    CHECK(y.shape()[0] == (t + s - 1) / s);
    CHECK(avg_pool1d(x, k, s).shape()[0] == (t + s - 1) / s);
  }
}

TEST_CASE("avg_pool1d examples") {
  Tape<double> tape(false);
  Tensor64 x(Shape{4, 1}, std::vector<double>{1, 2, 3, 4});
  const Tensor64 y = avg_pool1d(tape.constant(x), 3, 2).value();
  REQUIRE(y.size() == 2);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(3.0));
  CHECK(avg_pool1d(tape.constant(Tensor64(Shape{4000, 1})), 3, 2).shape()[0] == 2000);
  const Tensor64 c = avg_pool1d(tape.constant(Tensor64(Shape{9, 2}, 2.5)), 3, 1).value();
  for (std::size_t t = 1; t < 8; ++t) CHECK(c.at(t, 1) == doctest::Approx(2.5));
}

TEST_CASE("elementwise examples") {
  Tape<double> tape(false);
  auto sm = softmax(tape.constant(Tensor64(Shape{4}))).value();
  for (double v : sm.values()) CHECK(v == doctest::Approx(0.25));
  auto p = prelu(tape.constant(Tensor64(Shape{2}, std::vector<double>{-2, 3})),
                 tape.constant(Tensor64(Shape{1}, 0.25)))
               .value();
  CHECK(p[0] == doctest::Approx(-0.5));
  CHECK(p[1] == doctest::Approx(3.0));
  auto ls = log_sigmoid(tape.constant(Tensor64(Shape{3}, std::vector<double>{-1000, 1e4, 0}))).value();
  CHECK(ls[0] == doctest::Approx(-1000.0));
  CHECK(std::isfinite(ls[1]));
  CHECK(ls[1] == doctest::Approx(0.0));
  CHECK(ls[2] == doctest::Approx(-std::log(2.0)));
  Tape<float> tf(false);
  auto lf = log_sigmoid(tf.constant(Tensor(Shape{2}, std::vector<float>{-1000.f, -1e4f}))).value();
  CHECK(lf[0] == doctest::Approx(-1000.0));
  CHECK(std::isfinite(lf[1]));
}

TEST_CASE("softmax and layer_norm properties") {
  std::mt19937_64 rng(9);
  Tape<double> tape(false);
  const Tensor64 x = random_tensor({20, 6}, rng, -5, 5);
  const Tensor64 s = softmax(tape.constant(x)).value();
  for (std::size_t r = 0; r < 20; ++r) {
    double acc = 0;
    for (std::size_t c = 0; c < 6; ++c) {
      CHECK(s.at(r, c) >= 0.0);
      acc += s.at(r, c);
    }
    CHECK(std::abs(acc - 1.0) < 1e-6);
  }
  const Tensor64 n = layer_norm(tape.constant(x), tape.constant(Tensor64(Shape{6}, 1.0)),
                                tape.constant(Tensor64(Shape{6})), 1e-5)
                         .value();
  for (std::size_t r = 0; r < 20; ++r) {
    double mean = 0, var = 0;
    for (std::size_t c = 0; c < 6; ++c) mean += n.at(r, c) / 6;
    for (std::size_t c = 0; c < 6; ++c) var += (n.at(r, c) - mean) * (n.at(r, c) - mean) / 6;
    CHECK(std::abs(mean) < 1e-5);
    CHECK(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("linear, dot, concat, reduce_mean examples") {
  Tape<double> tape(false);
  Tensor64 x = seq({3, 2});
  Tensor64 eye(Shape{2, 2}, std::vector<double>{1, 0, 0, 1});
  CHECK(linear(tape.constant(x), tape.constant(eye), tape.constant(Tensor64(Shape{2}))).value() == x);
  CHECK(linear(tape.constant(x), tape.constant(eye)).value() == x);
  auto d = dot(tape.constant(Tensor64::vector({1, 2})), tape.constant(Tensor64::vector({3, 4})));
  CHECK(d.value().item() == 11.0);
  auto a = tape.constant(seq({3, 2}));
  auto b = tape.constant(seq({3, 4}));
  const std::vector<Var<double>> parts{a, b};
  auto cat = concat<double>(parts);
  CHECK(cat.shape() == Shape{3, 6});
  CHECK(slice_last(cat, 0, 2).value() == a.value());
  CHECK(slice_last(cat, 2, 4).value() == b.value());
  auto m = reduce_mean(tape.constant(seq({3, 1})), 1).value();
  CHECK(m.shape() == Shape{3});
  CHECK(m[2] == 3.0);
  CHECK_THROWS_AS(matmul(a, a), InvalidArgument);
}

TEST_CASE("backward basics") {
  ParamStore<double> store;
  store.add("p", Tensor64::vector({1, 2}));
  {
    Tape<double> tape;
    auto p = tape.parameter(store, "p");
    tape.backward(sum(p));
    CHECK(std::vector<double>(p.grad().begin(), p.grad().end()) == std::vector<double>{1, 1});
  }
  store.zero_grad();
  {
    Tape<double> tape;
    auto p = tape.parameter(store, "p");
    tape.backward(dot(p, p));
    CHECK(store.at("p").grad()[0] == 2.0);
    CHECK(store.at("p").grad()[1] == 4.0);
  }
  store.add("unused", Tensor64::vector({5}));
  store.zero_grad();
  {
    Tape<double> tape;
    auto p = tape.parameter(store, "p");
    tape.parameter(store, "unused");
    tape.backward(sum(p));
    CHECK(store.at("unused").grad()[0] == 0.0);
  }
}

TEST_CASE("backward rejects non-finite and non-scalar losses") {
  ParamStore<float> store;
  store.add("p", Tensor::vector({1}));
  Tape<float> tape;
  auto p = tape.parameter(store, "p");
  auto bad = scale(sum(p), std::numeric_limits<double>::infinity());
  try {
    tape.backward(bad, 17);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() == 17);
  }
  store.add("q", Tensor::vector({1, 2}));
  CHECK_THROWS_AS(tape.backward(tape.parameter(store, "q")), InvalidArgument);
}

TEST_CASE("gradient check: every op") {
  for (const auto& op : dive::testing::op_graphs()) {
    CHECK_MESSAGE(dive::testing::op_grad_error(op) < kGradTol, op.name);
  }
}

TEST_CASE("no op mutates its inputs") {
  std::mt19937_64 rng(1);
  Tape<double> tape(false);
  const Tensor64 x = random_tensor({6, 2}, rng);
  auto vx = tape.constant(x);
  softmax(vx);
  layer_norm(vx, tape.constant(Tensor64(Shape{2}, 1.0)), tape.constant(Tensor64(Shape{2})), 1e-5);
  avg_pool1d(vx, 3, 2);
  CHECK(vx.value() == x);
}

}
