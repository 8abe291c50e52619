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

#include <cstddef>
#include <span>
#include <vector>

#include "dive/autodiff.hpp"

namespace dive {

// Differentiable operators. Time-major layouts: sequences are [T x C].
// None of these mutate their inputs.

/// Dilated cross-correlation with "same"-style zero padding: a total of
/// (K-1)*dilation zeros split floor/ceil left/right, T_out = ceil(T_in/stride).
/// input [T_in x C_in], kernel [K x C_in x C_out], bias [C_out].
template <typename S>
Var<S> conv1d(const Var<S>& input, const Var<S>& kernel, const Var<S>& bias,
              std::size_t stride, std::size_t dilation);

/// Mean over `kernel` taps with (kernel-1) zero padding split as in conv1d.
/// Padded taps count toward the divisor. T_out = ceil(T_in/stride).
template <typename S>
Var<S> avg_pool1d(const Var<S>& input, std::size_t kernel, std::size_t stride);

/// slope has one entry per channel (last axis) or a single shared entry.
template <typename S>
Var<S> prelu(const Var<S>& x, const Var<S>& slope);

template <typename S>
Var<S> sigmoid(const Var<S>& x);

/// log(sigmoid(x)) evaluated as min(x,0) - log1p(exp(-|x|)).
template <typename S>
Var<S> log_sigmoid(const Var<S>& x);

/// Softmax over the last axis.
template <typename S>
Var<S> softmax(const Var<S>& x);

/// Normalization over the last (channel) axis followed by gain and bias.
template <typename S>
Var<S> layer_norm(const Var<S>& x, const Var<S>& gain, const Var<S>& bias, double eps);

/// x [... x C_in] times weight [C_in x C_out] plus optional bias [C_out].
template <typename S>
Var<S> linear(const Var<S>& x, const Var<S>& weight, const Var<S>& bias = {});

/// Plain 2-D product a [n x k] times b [k x m].
template <typename S>
Var<S> matmul(const Var<S>& a, const Var<S>& b);

template <typename S>
Var<S> transpose(const Var<S>& a);

/// Inner product of two equal-length vectors, as a scalar.
template <typename S>
Var<S> dot(const Var<S>& a, const Var<S>& b);

/// Concatenation along the last axis; leading dims must agree.
template <typename S>
Var<S> concat(std::span<const Var<S>> parts);

/// Concatenation along the first axis; trailing dims must agree.
template <typename S>
Var<S> concat_rows(std::span<const Var<S>> parts);

/// Columns [begin, begin+count) of the last axis.
template <typename S>
Var<S> slice_last(const Var<S>& x, std::size_t begin, std::size_t count);

/// Row `index` of a rank-2 tensor, as a vector.
template <typename S>
Var<S> row(const Var<S>& x, std::size_t index);

template <typename S>
Var<S> reduce_mean(const Var<S>& x, std::size_t axis);

/// Sum of all entries, as a scalar.
template <typename S>
Var<S> sum(const Var<S>& x);

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b);

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b);

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b);

template <typename S>
Var<S> scale(const Var<S>& x, double factor);

template <typename S>
Var<S> reshape(const Var<S>& x, Shape shape);

/// Arithmetic mean of equally shaped tensors.
template <typename S>
Var<S> mean_of(std::span<const Var<S>> parts);

}  // namespace dive
