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

#include "dive/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "dive/error.hpp"

namespace dive {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename S>
BasicTensor<S>::BasicTensor(Shape shape, S fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

template <typename S>
BasicTensor<S>::BasicTensor(Shape shape, std::vector<S> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
  if (shape_size(shape_) != values_.size()) {
    throw InvalidArgument("tensor shape " + shape_string(shape_) + " holds " +
                          std::to_string(shape_size(shape_)) + " values, got " +
                          std::to_string(values_.size()));
  }
}

template <typename S>
BasicTensor<S>::BasicTensor(Shape shape, Buffer<S> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw InvalidArgument("tensor shape " + shape_string(shape_) + " holds " +
                          std::to_string(shape_size(shape_)) + " values, got " +
                          std::to_string(values_.size()));
  }
}

template <typename S>
BasicTensor<S> BasicTensor<S>::vector(std::initializer_list<S> values) {
  return BasicTensor(Shape{values.size()}, std::vector<S>(values));
}

template <typename S>
std::size_t BasicTensor<S>::rows() const {
  if (shape_.empty()) return 1;
  const std::size_t c = shape_.back();
  return c == 0 ? 0 : values_.size() / c;
}

template <typename S>
std::size_t BasicTensor<S>::cols() const {
  return shape_.empty() ? 1 : shape_.back();
}

template <typename S>
S BasicTensor<S>::item() const {
  if (values_.size() != 1) {
    throw InvalidArgument("item() on tensor of shape " + shape_string(shape_));
  }
  return values_[0];
}

template <typename S>
std::span<S> BasicTensor<S>::grad() {
  if (!grad_) grad_.emplace(values_.size(), S(0));
  return *grad_;
}

template <typename S>
std::span<const S> BasicTensor<S>::grad() const {
  if (!grad_) throw InvalidArgument("tensor has no gradient buffer");
  return *grad_;
}

template <typename S>
void BasicTensor<S>::zero_grad() {
  if (grad_) std::fill(grad_->begin(), grad_->end(), S(0));
}

template <typename S>
BasicTensor<S> BasicTensor<S>::reshaped(Shape shape) const {
  return BasicTensor(std::move(shape), values_);
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace dive
