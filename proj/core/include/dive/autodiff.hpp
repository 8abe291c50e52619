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
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dive/tensor.hpp"

namespace dive {

/// Trainable parameters keyed by name. Iteration is sorted by name.
template <typename S>
class ParamStore {
 public:
  using Map = std::map<std::string, BasicTensor<S>>;

  void add(const std::string& name, BasicTensor<S> value);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  BasicTensor<S>& at(const std::string& name);
  const BasicTensor<S>& at(const std::string& name) const;
  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;
  std::vector<std::string> names() const;

  typename Map::iterator begin() { return params_.begin(); }
  typename Map::iterator end() { return params_.end(); }
  typename Map::const_iterator begin() const { return params_.begin(); }
  typename Map::const_iterator end() const { return params_.end(); }

  /// Zeroes every gradient buffer, allocating the ones that are missing.
  void zero_grad();

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    for (const auto& [name, t] : params_) out.add(name, t.template cast<T>());
    return out;
  }

 private:
  Map params_;
};

template <typename S>
class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
template <typename S>
class Var {
 public:
  Var() = default;
  Var(Tape<S>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const BasicTensor<S>& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Gradient accumulated by the last backward pass (zeros if unreachable).
  std::span<const S> grad() const;
  Tape<S>* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<S>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so reverse
/// creation order is a valid topological order for the backward sweep.
template <typename S>
class Tape {
 public:
  /// Receives the gradient flowing into this node's output.
  using Backward = std::function<void(Tape&, std::span<const S>)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<S> constant(BasicTensor<S> value);
  /// Leaf bound to `store[name]`; repeated lookups return the same node.
  /// backward() accumulates its gradient into the store's grad buffer.
  Var<S> parameter(ParamStore<S>& store, const std::string& name);
  Var<S> record(BasicTensor<S> value, std::initializer_list<Var<S>> inputs,
                Backward backward);
  Var<S> record(BasicTensor<S> value, std::span<const Var<S>> inputs,
                Backward backward);

  const BasicTensor<S>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool requires_grad(const Var<S>& v) const { return requires_grad(v.id()); }
  /// Accumulation buffer for node `id`, zero-initialized on first access.
  std::span<S> grad_buffer(std::size_t id);
  std::span<S> grad_buffer(const Var<S>& v) { return grad_buffer(v.id()); }
  std::span<const S> grad(std::size_t id) const;

  /// Seeds d(loss)=1 and sweeps backward. Throws DivergenceError when the
  /// loss is not a finite scalar.
  void backward(const Var<S>& loss, std::int64_t step = -1);

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    BasicTensor<S> value;
    Buffer<S> grad;
    bool requires_grad = false;
    Backward backward;
    BasicTensor<S>* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> param_nodes_;
  bool grad_enabled_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template class Var<float>;
extern template class Var<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace dive
