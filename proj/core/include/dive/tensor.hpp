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
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dive/aligned.hpp"

namespace dive {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array. Training runs on `float`; gradient verification
/// instantiates the whole stack on `double`.
template <typename S>
class BasicTensor {
 public:
  using value_type = S;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, S fill = S(0));
  BasicTensor(Shape shape, std::vector<S> values);
  BasicTensor(Shape shape, Buffer<S> values);

  static BasicTensor scalar(S v) { return BasicTensor(Shape{}, std::vector<S>{v}); }
  static BasicTensor vector(std::initializer_list<S> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  /// Leading dims flattened into rows, last dim as columns. Rank 0 is 1x1.
  std::size_t rows() const;
  std::size_t cols() const;

  S* data() { return values_.data(); }
  const S* data() const { return values_.data(); }
  std::span<S> values() { return values_; }
  std::span<const S> values() const { return values_; }
  S& operator[](std::size_t i) { return values_[i]; }
  const S& operator[](std::size_t i) const { return values_[i]; }
  S& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  const S& at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  S item() const;

  bool has_grad() const { return grad_.has_value(); }
  /// Allocates a zero gradient buffer on first use.
  std::span<S> grad();
  std::span<const S> grad() const;
  void zero_grad();
  void drop_grad() { grad_.reset(); }

  /// Same values, new shape; sizes must agree.
  BasicTensor reshaped(Shape shape) const;

  template <typename T>
  BasicTensor<T> cast() const {
    std::vector<T> out(values_.begin(), values_.end());
    return BasicTensor<T>(shape_, std::move(out));
  }

  bool operator==(const BasicTensor& other) const {
    return shape_ == other.shape_ && values_ == other.values_;
  }

 private:
  Shape shape_;
  Buffer<S> values_;
  std::optional<Buffer<S>> grad_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace dive
