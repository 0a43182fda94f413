// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode differentiation over dense tensors.
//
// A Tape records every value produced during a forward pass together with a
// closure that maps the output gradient onto the gradients of its inputs.
// Backward replays those closures in reverse construction order, so the
// accumulation order is fixed by the forward program.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lvt/tensor.hpp"

namespace lvt::ad {

template <typename T>
class Tape;

template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape<T>& tape() const { return *tape_; }
  int id() const { return id_; }

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  // Zero-sized when no gradient reached this node.
  const Tensor<T>& grad() const;
  bool requires_grad() const;

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

template <typename T>
class Tape {
 public:
  // Receives the gradient of the recorded node.
  using BackwardFn = std::function<void(const Tensor<T>& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> variable(Tensor<T> value);
  Var<T> constant(Tensor<T> value);
  // Records an op output. `fn` runs only if some input requires a gradient.
  Var<T> record(Tensor<T> value, std::span<const Var<T>> inputs, BackwardFn fn);
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
    return record(std::move(value), std::span<const Var<T>>(inputs.begin(), inputs.size()),
                  std::move(fn));
  }

  const Tensor<T>& value(int id) const { return nodes_[id].value; }
  const Tensor<T>& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Gradient buffer of `v`, zero-allocated on first use. Only valid while
  // backward is running or after it finished.
  Tensor<T>& grad_buffer(const Var<T>& v);
  // Adds `g` into the gradient of `v` when `v` requires one.
  void accumulate(const Var<T>& v, const Tensor<T>& g);

  // Seeds d(output)/d(output) = 1; output must hold a single element.
  void backward(const Var<T>& output);
  void backward(const Var<T>& output, const Tensor<T>& seed);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;  // stable references across record()
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape_->value(id_);
}
template <typename T>
const Tensor<T>& Var<T>::grad() const {
  return tape_->grad(id_);
}
template <typename T>
bool Var<T>::requires_grad() const {
  return tape_->requires_grad(id_);
}

// ---------------------------------------------------------------------------
// Core op set. Shapes follow the Tensor convention: all leading axes collapse
// into rows, the last axis is the feature axis.

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);  // [..., k] x [k, n] -> [..., n]
template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T factor);
// a[..., c] + bias[c]
template <typename T>
Var<T> add_bias(const Var<T>& a, const Var<T>& bias);

template <typename T>
Var<T> sigmoid(const Var<T>& a);
template <typename T>
Var<T> exp(const Var<T>& a);
template <typename T>
Var<T> gelu(const Var<T>& a);  // exact erf form
// d|x|/dx = sign(x), with 0 at x = 0.
template <typename T>
Var<T> abs(const Var<T>& a);

template <typename T>
Var<T> softmax(const Var<T>& a);  // over the last axis, max-subtracted
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-6));

template <typename T>
Var<T> sum(const Var<T>& a);  // -> shape {1}
template <typename T>
Var<T> mean(const Var<T>& a);  // -> shape {1}
template <typename T>
Var<T> sum_last(const Var<T>& a);  // [..., c] -> [...]

// out.flat[i] = a.flat[index[i]]
template <typename T>
Var<T> gather(const Var<T>& a, std::shared_ptr<const std::vector<int64_t>> index, Shape out_shape);
// out.flat[index[i]] += a.flat[i]
template <typename T>
Var<T> scatter_add(const Var<T>& a, std::shared_ptr<const std::vector<int64_t>> index,
                   Shape out_shape);

template <typename T>
Var<T> concat(std::span<const Var<T>> parts, int axis);
template <typename T>
Var<T> slice(const Var<T>& a, int axis, int64_t begin, int64_t end);
template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape);

// mean((a - b)^2)
template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b);

}  // namespace lvt::ad
