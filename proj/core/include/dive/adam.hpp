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

#include "dive/autodiff.hpp"

namespace dive {

struct AdamConfig {
  double base_lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Step decay: rate = base_lr * decay_factor^floor(step / decay_every).
  std::int64_t decay_every = 50000;
  double decay_factor = 0.7;
};

double lr_schedule(const AdamConfig& config, std::int64_t step);

/// First/second moment buffers keyed like the parameters they track.
template <typename S>
struct AdamState {
  ParamStore<S> first_moment;
  ParamStore<S> second_moment;
  std::int64_t step = 0;

  /// Zero moments shaped like `params`.
  static AdamState zeros_like(const ParamStore<S>& params);
};

/// One bias-corrected Adam update of every parameter from its grad buffer,
/// at rate lr_schedule(state.step). Increments state.step.
/// Throws DivergenceError on a non-finite gradient (nothing is modified).
template <typename S>
void adam_step(ParamStore<S>& params, AdamState<S>& state, const AdamConfig& config);

extern template struct AdamState<float>;
extern template struct AdamState<double>;

}  // namespace dive
