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

#include "dive/adam.hpp"

#include <cmath>

#include "dive/error.hpp"

namespace dive {

double lr_schedule(const AdamConfig& config, std::int64_t step) {
  if (step < 0) throw InvalidArgument("negative optimizer step");
  if (config.decay_every <= 0) return config.base_lr;
  return config.base_lr * std::pow(config.decay_factor, static_cast<double>(step / config.decay_every));
}

template <typename S>
AdamState<S> AdamState<S>::zeros_like(const ParamStore<S>& params) {
  AdamState state;
  for (const auto& [name, p] : params) {
    state.first_moment.add(name, BasicTensor<S>(p.shape()));
    state.second_moment.add(name, BasicTensor<S>(p.shape()));
  }
  return state;
}

template <typename S>
void adam_step(ParamStore<S>& params, AdamState<S>& state, const AdamConfig& config) {
  for (auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    for (S g : p.grad()) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw DivergenceError("non-finite gradient for '" + name + "'", state.step);
      }
    }
  }
  const double lr = lr_schedule(config, state.step);
  const double t = static_cast<double>(state.step + 1);
  const S b1 = static_cast<S>(config.beta1), b2 = static_cast<S>(config.beta2);
  const S c1 = static_cast<S>(1.0 - std::pow(config.beta1, t));
  const S c2 = static_cast<S>(1.0 - std::pow(config.beta2, t));
  const S rate = static_cast<S>(lr), eps = static_cast<S>(config.epsilon);
  for (auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    auto& m = state.first_moment.at(name);
    auto& v = state.second_moment.at(name);
    if (m.shape() != p.shape() || v.shape() != p.shape()) {
      throw InvalidArgument("moment buffers for '" + name + "' do not match " +
                            shape_string(p.shape()));
    }
    auto g = p.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (S(1) - b1) * g[i];
      v[i] = b2 * v[i] + (S(1) - b2) * g[i] * g[i];
      const S m_hat = m[i] / c1;
      const S v_hat = v[i] / c2;
      p[i] -= rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
  ++state.step;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(ParamStore<float>&, AdamState<float>&, const AdamConfig&);
template void adam_step(ParamStore<double>&, AdamState<double>&, const AdamConfig&);

}  // namespace dive
