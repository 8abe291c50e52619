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

#include "dive/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dive/error.hpp"
#include "dive/ops.hpp"

namespace dive {

std::size_t CollarMask::excluded_count() const {
  return static_cast<std::size_t>(std::count(excluded.begin(), excluded.end(), std::uint8_t{1}));
}

std::size_t collar_radius_frames(double radius_s, double frame_rate) {
  if (radius_s < 0 || frame_rate <= 0) {
    throw InvalidArgument("collar radius must be >= 0 and frame rate > 0");
  }
  return static_cast<std::size_t>(std::llround(radius_s * frame_rate));
}

CollarMask collar_mask(const FrameLabels& labels, std::size_t radius_frames) {
  const std::size_t frames = labels.num_frames;
  CollarMask mask;
  mask.radius_frames = radius_frames;
  mask.excluded.assign(frames, 0);
  if (radius_frames == 0) return mask;
  for (std::size_t t = 1; t < frames; ++t) {
    bool boundary = false;
    for (std::size_t i = 0; i < labels.num_speakers && !boundary; ++i) {
      boundary = labels.at(i, t) != labels.at(i, t - 1);
    }
    if (!boundary) continue;
    const std::size_t lo = t >= radius_frames ? t - radius_frames : 0;
    const std::size_t hi = std::min(frames, t + radius_frames);
    for (std::size_t u = lo; u < hi; ++u) mask.excluded[u] = 1;
  }
  return mask;
}

namespace {

template <typename S>
S log_sigmoid_value(S v) {
  return std::min(v, S(0)) - std::log1p(std::exp(-std::abs(v)));
}

template <typename S>
S sigmoid_value(S v) {
  if (v >= S(0)) return S(1) / (S(1) + std::exp(-v));
  const S e = std::exp(v);
  return e / (S(1) + e);
}

void check_logits(const Shape& shape, const FrameLabels& labels) {
  if (shape.size() != 2 || shape[0] != labels.num_speakers || shape[1] != labels.num_frames) {
    throw InvalidArgument("vad loss: logits " + shape_string(shape) + " vs labels [" +
                          std::to_string(labels.num_speakers) + "x" +
                          std::to_string(labels.num_frames) + "]");
  }
}

}  // namespace

template <typename S>
Var<S> selector_nll(const Var<S>& posteriors, std::span<const EventClass> labels) {
  const Shape& shape = posteriors.shape();
  if (shape.size() != 3 || shape[2] != kNumEventClasses) {
    throw InvalidArgument("selector_nll: posteriors must be [N x T x 4], got " + shape_string(shape));
  }
  const std::size_t terms = shape[0] * shape[1];
  if (labels.size() != terms) {
    throw InvalidArgument("selector_nll: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(terms) + " posterior rows");
  }
  const S clamp = static_cast<S>(kSelectorLogClamp);
  const S inv = S(1) / static_cast<S>(terms);
  const BasicTensor<S>& p = posteriors.value();
  S total = 0;
  for (std::size_t k = 0; k < terms; ++k) {
    total -= std::log(std::max(p[k * kNumEventClasses + static_cast<std::size_t>(labels[k])], clamp));
  }
  std::vector<EventClass> saved(labels.begin(), labels.end());
  return posteriors.tape()->record(
      BasicTensor<S>::scalar(total * inv), {posteriors},
      [posteriors, saved = std::move(saved), terms, inv, clamp](Tape<S>& tp, std::span<const S> g) {
        const BasicTensor<S>& p = posteriors.value();
        auto dp = tp.grad_buffer(posteriors);
        for (std::size_t k = 0; k < terms; ++k) {
          const std::size_t idx = k * kNumEventClasses + static_cast<std::size_t>(saved[k]);
          if (p[idx] > clamp) dp[idx] -= g[0] * inv / p[idx];
        }
      });
}

template <typename S>
Var<S> vad_bce(const Var<S>& logits, const FrameLabels& labels) {
  check_logits(logits.shape(), labels);
  const std::size_t n = labels.num_speakers, frames = labels.num_frames;
  const S inv = S(1) / static_cast<S>(n * frames);
  const BasicTensor<S>& z = logits.value();
  S total = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const S sign = labels.at(i, t) ? S(1) : S(-1);
      total -= log_sigmoid_value(z[i * frames + t] * sign);
    }
  }
  return logits.tape()->record(
      BasicTensor<S>::scalar(total * inv), {logits},
      [logits, labels, inv](Tape<S>& tp, std::span<const S> g) {
        const BasicTensor<S>& z = logits.value();
        auto dz = tp.grad_buffer(logits);
        for (std::size_t k = 0; k < z.size(); ++k) {
          const S sign = labels.active[k] ? S(1) : S(-1);
          dz[k] -= g[0] * inv * sign * sigmoid_value(-z[k] * sign);
        }
      });
}

template <typename S>
Var<S> vad_bce_collar(const Var<S>& logits, const FrameLabels& labels, const CollarMask& mask) {
  check_logits(logits.shape(), labels);
  const std::size_t n = labels.num_speakers, frames = labels.num_frames;
  if (mask.excluded.size() != frames) {
    throw InvalidArgument("vad_bce_collar: mask covers " + std::to_string(mask.excluded.size()) +
                          " frames, labels have " + std::to_string(frames));
  }
  const S inv = S(1) / static_cast<S>(n * frames);
  const BasicTensor<S>& z = logits.value();
  S total = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    if (mask.excluded[t]) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const S sign = labels.at(i, t) ? S(1) : S(-1);
      total -= log_sigmoid_value(z[i * frames + t] * sign);
    }
  }
  return logits.tape()->record(
      BasicTensor<S>::scalar(total * inv), {logits},
      [logits, labels, excluded = mask.excluded, inv, frames](Tape<S>& tp, std::span<const S> g) {
        const BasicTensor<S>& z = logits.value();
        auto dz = tp.grad_buffer(logits);
        for (std::size_t k = 0; k < z.size(); ++k) {
          if (excluded[k % frames]) continue;
          const S sign = labels.active[k] ? S(1) : S(-1);
          dz[k] -= g[0] * inv * sign * sigmoid_value(-z[k] * sign);
        }
      });
}

template <typename S>
Var<S> total_loss(const Var<S>& selector, const Var<S>& vad_collar) {
  return add(selector, vad_collar);
}

#define DIVE_INSTANTIATE_LOSSES(S)                                                         \
  template Var<S> selector_nll(const Var<S>&, std::span<const EventClass>);                \
  template Var<S> vad_bce(const Var<S>&, const FrameLabels&);                              \
  template Var<S> vad_bce_collar(const Var<S>&, const FrameLabels&, const CollarMask&);    \
  template Var<S> total_loss(const Var<S>&, const Var<S>&);

DIVE_INSTANTIATE_LOSSES(float)
DIVE_INSTANTIATE_LOSSES(double)

}  // namespace dive
