// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lvt/autodiff.hpp"
#include "lvt/tensor.hpp"

namespace lvt {

// Named trainable tensors in insertion order. Iteration order is part of the
// checkpoint format and of the optimizer's reduction order.
template <typename T>
class ParamStore {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> value) {
    LVT_CHECK(!index_.contains(name), ErrorCode::kInvalidArgument, "duplicate parameter " + name);
    index_[name] = values_.size();
    names_.push_back(name);
    values_.push_back(std::move(value));
    return values_.back();
  }

  bool contains(const std::string& name) const { return index_.contains(name); }
  Tensor<T>& at(const std::string& name) { return values_[lookup(name)]; }
  const Tensor<T>& at(const std::string& name) const { return values_[lookup(name)]; }
  Tensor<T>& at(size_t i) { return values_[i]; }
  const Tensor<T>& at(size_t i) const { return values_[i]; }

  const std::vector<std::string>& names() const { return names_; }
  size_t count() const { return values_.size(); }
  int64_t total_elements() const {
    int64_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (size_t i = 0; i < values_.size(); ++i) out.add(names_[i], values_[i].template cast<U>());
    return out;
  }

  size_t index_of(const std::string& name) const { return lookup(name); }

 private:
  size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    LVT_CHECK(it != index_.end(), ErrorCode::kInvalidArgument, "unknown parameter " + name);
    return it->second;
  }

  std::map<std::string, size_t> index_;
  std::vector<std::string> names_;
  std::vector<Tensor<T>> values_;
};

// Tape leaves for every entry of a ParamStore.
template <typename T>
class ParamVars {
 public:
  ParamVars(ad::Tape<T>& tape, const ParamStore<T>& store, bool requires_grad = true) : store_(&store) {
    vars_.reserve(store.count());
    for (size_t i = 0; i < store.count(); ++i) {
      vars_.push_back(requires_grad ? tape.variable(store.at(i)) : tape.constant(store.at(i)));
    }
  }

  // Wraps existing leaves, one per store entry in store order.
  ParamVars(const ParamStore<T>& store, std::vector<ad::Var<T>> vars) : store_(&store), vars_(std::move(vars)) {
    LVT_CHECK(vars_.size() == store.count(), ErrorCode::kShapeMismatch, "one variable per parameter");
  }

  const ad::Var<T>& operator()(const std::string& name) const {
    return vars_[store_->index_of(name)];
  }
  const ad::Var<T>& at(size_t i) const { return vars_[i]; }
  size_t count() const { return vars_.size(); }

  // Gradients in store order; parameters that received none come back zero.
  std::vector<Tensor<T>> gradients() const {
    std::vector<Tensor<T>> out;
    out.reserve(vars_.size());
    for (const auto& v : vars_) {
      out.push_back(v.grad().empty() ? Tensor<T>(v.shape()) : v.grad());
    }
    return out;
  }

 private:
  const ParamStore<T>* store_;
  std::vector<ad::Var<T>> vars_;
};

// LeCun-normal init: N(0, gain^2 / fan_in).
template <typename T>
Tensor<T> lecun_normal(Shape shape, int64_t fan_in, std::mt19937_64& rng, double gain = 1.0) {
  Tensor<T> out(std::move(shape));
  std::normal_distribution<double> dist(0.0, gain / std::sqrt(static_cast<double>(fan_in)));
  for (auto& v : out.span()) v = static_cast<T>(dist(rng));
  return out;
}

}  // namespace lvt
