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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dive/autodiff.hpp"
#include "dive/labels.hpp"
#include "dive/losses.hpp"
#include "dive/ops.hpp"
#include "dive/segments.hpp"

namespace dive::testing {

using Inputs = std::vector<Var<double>>;
using Graph = std::function<Var<double>(Tape<double>&, const Inputs&)>;

inline Tensor64 random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor64 t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

/// Values bounded away from zero, for ops with a kink at 0.
inline Tensor64 random_nonzero(Shape shape, std::mt19937_64& rng, double lo = 0.1, double hi = 1.0) {
  Tensor64 t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : t.values()) v = sign(rng) ? u(rng) : -u(rng);
  return t;
}

struct GradCheck {
  /// max |analytic - numeric| / max(max |numeric|, max |analytic|), per input,
  /// maximized over inputs.
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
};

/// Compares reverse-mode gradients of sum(R * f(inputs)) for a fixed random
/// R against central differences with step h.
inline GradCheck grad_check(const std::vector<Tensor64>& inputs, const Graph& f,
                            std::uint64_t seed = 7, double h = 1e-4) {
  ParamStore<double> store;
  for (std::size_t i = 0; i < inputs.size(); ++i) store.add("in" + std::to_string(i), inputs[i]);
  const auto names = store.names();
  auto build = [&](Tape<double>& tape) {
    Inputs vars;
    for (const auto& n : names) vars.push_back(tape.parameter(store, n));
    return f(tape, vars);
  };

  Tensor64 projection;
  {
    Tape<double> probe(false);
    Var<double> out = build(probe);
    std::mt19937_64 rng(seed);
    projection = random_tensor(out.shape(), rng);
  }
  auto loss_of = [&](Tape<double>& tape) {
    Var<double> out = build(tape);
    return sum(mul(out, tape.constant(projection)));
  };

  store.zero_grad();
  {
    Tape<double> tape;
    tape.backward(loss_of(tape));
  }
  GradCheck result;
  for (std::size_t i = 0; i < names.size(); ++i) {
    Tensor64& x = store.at(names[i]);
    const std::vector<double> analytic(x.grad().begin(), x.grad().end());
    double max_diff = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double saved = x[j];
      x[j] = saved + h;
      Tape<double> plus(false);
      const double fp = loss_of(plus).value().item();
      x[j] = saved - h;
      Tape<double> minus(false);
      const double fm = loss_of(minus).value().item();
      x[j] = saved;
      const double numeric = (fp - fm) / (2 * h);
      max_diff = std::max(max_diff, std::abs(numeric - analytic[j]));
      scale = std::max({scale, std::abs(numeric), std::abs(analytic[j])});
    }
    const double rel = scale > 0 ? max_diff / scale : max_diff;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_input = i;
    }
  }
  return result;
}

// Scalar-loop loss oracles in long double.

inline double selector_nll_oracle(const Tensor64& post, const std::vector<EventClass>& labels) {
  long double acc = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double p = post[k * kNumEventClasses + static_cast<std::size_t>(labels[k])];
    acc -= std::log(static_cast<long double>(std::max(p, kSelectorLogClamp)));
  }
  return static_cast<double>(acc / labels.size());
}

inline long double log_sigmoid_ld(long double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double vad_bce_collar_oracle(const Tensor64& logits, const FrameLabels& y,
                                    const std::vector<std::uint8_t>& excluded) {
  long double acc = 0;
  for (std::size_t i = 0; i < y.num_speakers; ++i) {
    for (std::size_t t = 0; t < y.num_frames; ++t) {
      if (!excluded.empty() && excluded[t]) continue;
      const long double sign = y.at(i, t) ? 1.0L : -1.0L;
      acc -= log_sigmoid_ld(sign * logits[i * y.num_frames + t]);
    }
  }
  return static_cast<double>(acc / (y.num_speakers * y.num_frames));
}

inline double vad_bce_oracle(const Tensor64& logits, const FrameLabels& y) {
  return vad_bce_collar_oracle(logits, y, {});
}

/// Excluded set by direct enumeration of boundaries.
inline std::vector<std::uint8_t> collar_oracle(const FrameLabels& y, std::size_t radius) {
  std::vector<std::uint8_t> out(y.num_frames, 0);
  for (std::size_t t = 1; t < y.num_frames; ++t) {
    bool boundary = false;
    for (std::size_t i = 0; i < y.num_speakers; ++i) boundary |= y.at(i, t) != y.at(i, t - 1);
    if (!boundary) continue;
    for (std::size_t u = 0; u < y.num_frames; ++u) {
      if (u + radius >= t && u + 1 <= t + radius) out[u] = 1;
    }
  }
  return out;
}

struct MsDer {
  double missed = 0, false_alarm = 0, confusion = 0, scored = 0;
  double der() const { return (missed + false_alarm + confusion) / scored; }
};

/// DER on a 1 ms grid (cell centers), with the mapping chosen by brute force
/// over all hyp->ref injections on the same grid.
inline MsDer der_ms_oracle(const SegmentList& ref, const SegmentList& hyp, double collar,
                           bool skip_overlap, double duration) {
  const std::vector<std::string> rid = speaker_ids(ref), hid = speaker_ids(hyp);
  std::vector<double> bounds;
  for (const auto& s : ref) {
    for (double b : {s.onset, s.end()}) {
      if (b > 0 && b < duration) bounds.push_back(b);
    }
  }
  const auto cells = static_cast<std::size_t>(std::llround(duration * 1000.0));
  struct Cell {
    std::set<std::size_t> r, h;
  };
  std::vector<Cell> scored;
  for (std::size_t k = 0; k < cells; ++k) {
    const double t = (k + 0.5) / 1000.0;
    bool in_collar = false;
    for (double b : bounds) in_collar |= collar > 0 && t >= b - collar && t < b + collar;
    if (in_collar) continue;
    Cell c;
    for (const auto& s : ref) {
      if (s.onset <= t && t < s.end()) {
        c.r.insert(std::find(rid.begin(), rid.end(), s.speaker) - rid.begin());
      }
    }
    if (skip_overlap && c.r.size() >= 2) continue;
    for (const auto& s : hyp) {
      if (s.onset <= t && t < s.end()) {
        c.h.insert(std::find(hid.begin(), hid.end(), s.speaker) - hid.begin());
      }
    }
    scored.push_back(std::move(c));
  }
  const std::size_t slots = std::max(rid.size(), hid.size());
  std::vector<std::size_t> perm(slots);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  MsDer best;
  bool first = true;
  do {
    MsDer d;
    for (const auto& c : scored) {
      std::size_t correct = 0;
      for (std::size_t h : c.h) correct += c.r.count(perm[h]);
      const double nr = static_cast<double>(c.r.size()), nh = static_cast<double>(c.h.size());
      d.scored += nr * 1e-3;
      d.missed += std::max(0.0, nr - nh) * 1e-3;
      d.false_alarm += std::max(0.0, nh - nr) * 1e-3;
      d.confusion += (std::min(nr, nh) - static_cast<double>(correct)) * 1e-3;
    }
    if (first || d.missed + d.false_alarm + d.confusion <
                     best.missed + best.false_alarm + best.confusion) {
      best = d;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Segment endpoints on both sides plus collar edges: the grid error budget.
inline std::size_t boundary_count(const SegmentList& ref, const SegmentList& hyp, double collar) {
  return 2 * ref.size() * (collar > 0 ? 3 : 1) + 2 * hyp.size();
}

/// Random 2-speaker reference/hypothesis pair on a millisecond-aligned grid
/// stretched by an irrational-ish factor, so edges fall off the oracle grid.
inline std::pair<SegmentList, SegmentList> random_der_instance(std::mt19937_64& rng, double duration) {
  auto make = [&](const std::vector<std::string>& names) {
    SegmentList out;
    std::uniform_real_distribution<double> len(0.2, 3.0), gap(0.0, 1.5);
    for (const auto& name : names) {
      double t = gap(rng);
      while (t < duration) {
        const double e = std::min(duration, t + len(rng));
        if (e - t > 1e-3) out.push_back({name, t, e - t});
        t = e + gap(rng) + 0.01;
      }
    }
    sort_segments(out);
    return out;
  };
  return {make({"A", "B"}), make({"x", "y"})};
}

inline FrameLabels random_labels(std::size_t n, std::size_t t, std::mt19937_64& rng, double flip = 0.1) {
  FrameLabels y(n, t, 500.0);
  std::bernoulli_distribution change(flip), start(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    bool on = start(rng);
    for (std::size_t k = 0; k < t; ++k) {
      if (change(rng)) on = !on;
      y.set(i, k, on);
    }
  }
  return y;
}

}  // namespace dive::testing
