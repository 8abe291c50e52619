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

#include "dive/autodiff.hpp"

#include <cmath>

#include "dive/error.hpp"

namespace dive {

template <typename S>
void ParamStore<S>::add(const std::string& name, BasicTensor<S> value) {
  if (!params_.emplace(name, std::move(value)).second) {
    throw InvalidArgument("duplicate parameter name '" + name + "'");
  }
}

template <typename S>
BasicTensor<S>& ParamStore<S>::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return it->second;
}

template <typename S>
const BasicTensor<S>& ParamStore<S>::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
  return it->second;
}

template <typename S>
std::size_t ParamStore<S>::num_values() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

template <typename S>
std::vector<std::string> ParamStore<S>::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

template <typename S>
void ParamStore<S>::zero_grad() {
  for (auto& [_, t] : params_) {
    t.grad();
    t.zero_grad();
  }
}

template <typename S>
const BasicTensor<S>& Var<S>::value() const {
  return tape_->value(id_);
}

template <typename S>
std::span<const S> Var<S>::grad() const {
  return tape_->grad(id_);
}

template <typename S>
Var<S> Tape<S>::constant(BasicTensor<S> value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var<S>(this, nodes_.size() - 1);
}

template <typename S>
Var<S> Tape<S>::parameter(ParamStore<S>& store, const std::string& name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) {
    return Var<S>(this, it->second);
  }
  BasicTensor<S>& p = store.at(name);
  Node node;
  node.value = BasicTensor<S>(p.shape(), std::vector<S>(p.values().begin(), p.values().end()));
  node.requires_grad = grad_enabled_;
  node.param = &p;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(name, nodes_.size() - 1);
  return Var<S>(this, nodes_.size() - 1);
}

template <typename S>
Var<S> Tape<S>::record(BasicTensor<S> value, std::initializer_list<Var<S>> inputs,
                       Backward backward) {
  return record(std::move(value), std::span<const Var<S>>(inputs.begin(), inputs.size()),
                std::move(backward));
}

template <typename S>
Var<S> Tape<S>::record(BasicTensor<S> value, std::span<const Var<S>> inputs,
                       Backward backward) {
  Node node;
  node.value = std::move(value);
  if (grad_enabled_) {
    for (const auto& v : inputs) {
      if (v.tape() != this) throw InvalidArgument("op mixes variables from different tapes");
      if (nodes_[v.id()].requires_grad) node.requires_grad = true;
    }
    if (node.requires_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var<S>(this, nodes_.size() - 1);
}

template <typename S>
std::span<S> Tape<S>::grad_buffer(std::size_t id) {
  Node& node = nodes_.at(id);
  if (node.grad.empty()) node.grad.assign(node.value.size(), S(0));
  return node.grad;
}

template <typename S>
std::span<const S> Tape<S>::grad(std::size_t id) const {
  const Node& node = nodes_.at(id);
  if (node.grad.empty()) {
    static thread_local Buffer<S> zeros;
    zeros.assign(node.value.size(), S(0));
    return zeros;
  }
  return node.grad;
}

template <typename S>
void Tape<S>::backward(const Var<S>& loss, std::int64_t step) {
  if (!grad_enabled_) throw InvalidArgument("backward() on a tape without gradients");
  const BasicTensor<S>& lv = loss.value();
  if (lv.size() != 1) {
    throw InvalidArgument("backward() needs a scalar loss, got " + shape_string(lv.shape()));
  }
  if (!std::isfinite(static_cast<double>(lv[0]))) {
    throw DivergenceError("non-finite loss", step);
  }
  for (auto& node : nodes_) node.grad.clear();
  grad_buffer(loss.id())[0] = S(1);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.grad.empty() || !node.backward) continue;
    // Callbacks only touch inputs (lower ids); nodes_ never grows here.
    node.backward(*this, std::span<const S>(node.grad));
  }
  for (auto& node : nodes_) {
    if (node.param == nullptr) continue;
    auto dst = node.param->grad();
    if (node.grad.empty()) continue;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += node.grad[i];
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template class Var<float>;
template class Var<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace dive
