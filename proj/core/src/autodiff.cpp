// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/autodiff.hpp"

#include <cmath>
#include <numbers>

namespace lvt {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonOrthonormal: return "NonOrthonormal";
    case ErrorCode::kEmptyViewSet: return "EmptyViewSet";
    case ErrorCode::kMissingConditioning: return "MissingConditioning";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kFrameMismatch: return "FrameMismatch";
    case ErrorCode::kNonUnitDirection: return "NonUnitDirection";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kMalformedPly: return "MalformedPly";
    case ErrorCode::kMalformedManifest: return "MalformedManifest";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace lvt

namespace lvt::ad {

template <typename T>
Var<T> Tape<T>::variable(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var<T>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var<T>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::span<const Var<T>> inputs, BackwardFn fn) {
  bool needs = false;
  for (const auto& in : inputs) {
    LVT_CHECK(&in.tape() == this, ErrorCode::kInvalidArgument, "input recorded on another tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(fn) : BackwardFn{}});
  return Var<T>(this, static_cast<int>(nodes_.size()) - 1);
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(const Var<T>& v) {
  Node& node = nodes_[v.id()];
  if (node.grad.size() != node.value.size()) node.grad = Tensor<T>(node.value.shape());
  return node.grad;
}

template <typename T>
void Tape<T>::accumulate(const Var<T>& v, const Tensor<T>& g) {
  if (!nodes_[v.id()].requires_grad) return;
  Tensor<T>& buf = grad_buffer(v);
  LVT_CHECK(buf.size() == g.size(), ErrorCode::kShapeMismatch,
            "gradient " + shape_string(g.shape()) + " vs value " + shape_string(buf.shape()));
  T* dst = buf.data();
  const T* src = g.data();
  for (int64_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

template <typename T>
void Tape<T>::backward(const Var<T>& output) {
  LVT_CHECK(output.value().size() == 1, ErrorCode::kShapeMismatch,
            "backward() without a seed needs a scalar output");
  backward(output, Tensor<T>(output.value().shape(), T(1)));
}

template <typename T>
void Tape<T>::backward(const Var<T>& output, const Tensor<T>& seed) {
  for (auto& node : nodes_) node.grad = Tensor<T>();
  LVT_CHECK(seed.size() == output.value().size(), ErrorCode::kShapeMismatch, "seed shape");
  if (!nodes_[output.id()].requires_grad) return;
  grad_buffer(output) = Tensor<T>(output.value().shape(), seed.vec());
  for (int id = output.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.empty()) continue;
    node.backward(node.grad);
  }
}

namespace {

template <typename T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  LVT_CHECK(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
            std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

template <typename T, typename Fwd, typename Deriv>
Var<T> unary(const Var<T>& a, Fwd fwd, Deriv deriv) {
  const Tensor<T>& x = a.value();
  Tensor<T> y(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  Tape<T>* tape = &a.tape();
  // Derivatives are expressed through y, which lives at the next node id.
  const int out_id = static_cast<int>(tape->size());
  return tape->record(std::move(y), {a}, [tape, a, out_id, deriv](const Tensor<T>& g) {
    const Tensor<T>& x = a.value();
    const Tensor<T>& y = tape->value(out_id);
    Tensor<T>& gx = tape->grad_buffer(a);
    for (int64_t i = 0; i < x.size(); ++i) gx[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  LVT_CHECK(bv.rank() == 2 && av.cols() == bv.dim(0), ErrorCode::kShapeMismatch,
            "matmul " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  Shape out_shape = av.shape();
  out_shape.back() = bv.dim(1);
  Tensor<T> out(out_shape);
  out.matrix().noalias() = av.matrix() * bv.matrix();
  return a.tape().record(std::move(out), {a, b}, [a, b](const Tensor<T>& g) {
    Tape<T>& tape = a.tape();
    if (a.requires_grad()) tape.grad_buffer(a).matrix().noalias() += g.matrix() * b.value().matrix().transpose();
    if (b.requires_grad()) tape.grad_buffer(b).matrix().noalias() += a.value().matrix().transpose() * g.matrix();
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](const Tensor<T>& g) {
    a.tape().accumulate(a, g);
    a.tape().accumulate(b, g);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "sub");
  Tensor<T> out(a.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](const Tensor<T>& g) {
    a.tape().accumulate(a, g);
    if (b.requires_grad()) {
      Tensor<T>& gb = a.tape().grad_buffer(b);
      for (int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](const Tensor<T>& g) {
    Tape<T>& tape = a.tape();
    if (a.requires_grad()) {
      Tensor<T>& ga = tape.grad_buffer(a);
      for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.value()[i];
    }
    if (b.requires_grad()) {
      Tensor<T>& gb = tape.grad_buffer(b);
      for (int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.value()[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out(a.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * factor;
  return a.tape().record(std::move(out), {a}, [a, factor](const Tensor<T>& g) {
    Tensor<T>& ga = a.tape().grad_buffer(a);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

template <typename T>
Var<T> add_bias(const Var<T>& a, const Var<T>& bias) {
  const Tensor<T>& av = a.value();
  LVT_CHECK(bias.value().size() == av.cols(), ErrorCode::kShapeMismatch,
            "add_bias " + shape_string(av.shape()) + " + " + shape_string(bias.shape()));
  Tensor<T> out(av.shape());
  out.matrix() = av.matrix().rowwise() + bias.value().matrix().row(0);
  return a.tape().record(std::move(out), {a, bias}, [a, bias](const Tensor<T>& g) {
    a.tape().accumulate(a, g);
    if (bias.requires_grad()) {
      Tensor<T>& gb = a.tape().grad_buffer(bias);
      gb.matrix().row(0) += g.matrix().colwise().sum();
    }
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  return unary(
      a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> exp(const Var<T>& a) {
  return unary(
      a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> gelu(const Var<T>& a) {
  constexpr T kInvSqrt2 = T(0.70710678118654752440);
  constexpr T kInvSqrt2Pi = T(0.39894228040143267794);
  return unary(
      a, [](T x) { return T(0.5) * x * (T(1) + std::erf(x * kInvSqrt2)); },
      [](T x, T) {
        const T cdf = T(0.5) * (T(1) + std::erf(x * kInvSqrt2));
        return cdf + x * kInvSqrt2Pi * std::exp(T(-0.5) * x * x);
      });
}

template <typename T>
Var<T> abs(const Var<T>& a) {
  return unary(
      a, [](T x) { return std::abs(x); },
      [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Var<T> softmax(const Var<T>& a) {
  const Tensor<T>& x = a.value();
  Tensor<T> y(x.shape());
  const int64_t rows = x.rows(), cols = x.cols();
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * cols;
    T* yr = y.data() + r * cols;
    T mx = xr[0];
    for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, xr[c]);
    T total = 0;
    for (int64_t c = 0; c < cols; ++c) total += (yr[c] = std::exp(xr[c] - mx));
    for (int64_t c = 0; c < cols; ++c) yr[c] /= total;
  }
  Tape<T>* tape = &a.tape();
  const int out_id = static_cast<int>(tape->size());
  return tape->record(std::move(y), {a}, [tape, a, out_id](const Tensor<T>& g) {
    const Tensor<T>& y = tape->value(out_id);
    Tensor<T>& ga = tape->grad_buffer(a);
    const int64_t rows = y.rows(), cols = y.cols();
    for (int64_t r = 0; r < rows; ++r) {
      const T* yr = y.data() + r * cols;
      const T* gr = g.data() + r * cols;
      T dot = 0;
      for (int64_t c = 0; c < cols; ++c) dot += yr[c] * gr[c];
      T* out = ga.data() + r * cols;
      for (int64_t c = 0; c < cols; ++c) out[c] += yr[c] * (gr[c] - dot);
    }
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  const Tensor<T>& xv = x.value();
  const int64_t rows = xv.rows(), cols = xv.cols();
  LVT_CHECK(gamma.value().size() == cols && beta.value().size() == cols, ErrorCode::kShapeMismatch,
            "layer_norm affine parameters must match the feature axis");
  // Normalized activations and inverse std are kept for the backward pass.
  auto xhat = std::make_shared<Tensor<T>>(xv.shape());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  Tensor<T> y(xv.shape());
  const T* gm = gamma.value().data();
  const T* bt = beta.value().data();
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = xv.data() + r * cols;
    T mu = 0;
    for (int64_t c = 0; c < cols; ++c) mu += xr[c];
    mu /= T(cols);
    T var = 0;
    for (int64_t c = 0; c < cols; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= T(cols);
    const T is = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    T* hr = xhat->data() + r * cols;
    T* yr = y.data() + r * cols;
    for (int64_t c = 0; c < cols; ++c) {
      hr[c] = (xr[c] - mu) * is;
      yr[c] = hr[c] * gm[c] + bt[c];
    }
  }
  return x.tape().record(std::move(y), {x, gamma, beta}, [x, gamma, beta, xhat, inv_std](const Tensor<T>& g) {
    Tape<T>& tape = x.tape();
    const int64_t rows = g.rows(), cols = g.cols();
    const T* gm = gamma.value().data();
    if (gamma.requires_grad() || beta.requires_grad()) {
      Tensor<T>& gg = tape.grad_buffer(gamma);
      Tensor<T>& gb = tape.grad_buffer(beta);
      for (int64_t r = 0; r < rows; ++r) {
        const T* gr = g.data() + r * cols;
        const T* hr = xhat->data() + r * cols;
        for (int64_t c = 0; c < cols; ++c) {
          gg[c] += gr[c] * hr[c];
          gb[c] += gr[c];
        }
      }
    }
    if (!x.requires_grad()) return;
    Tensor<T>& gx = tape.grad_buffer(x);
    for (int64_t r = 0; r < rows; ++r) {
      const T* gr = g.data() + r * cols;
      const T* hr = xhat->data() + r * cols;
      T mean_dh = 0, mean_dh_h = 0;
      for (int64_t c = 0; c < cols; ++c) {
        const T dh = gr[c] * gm[c];
        mean_dh += dh;
        mean_dh_h += dh * hr[c];
      }
      mean_dh /= T(cols);
      mean_dh_h /= T(cols);
      T* out = gx.data() + r * cols;
      const T is = (*inv_std)[r];
      for (int64_t c = 0; c < cols; ++c) out[c] += is * (gr[c] * gm[c] - mean_dh - hr[c] * mean_dh_h);
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T total = 0;
  for (T v : a.value().span()) total += v;
  return a.tape().record(Tensor<T>({1}, total), {a}, [a](const Tensor<T>& g) {
    Tensor<T>& ga = a.tape().grad_buffer(a);
    for (int64_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  const int64_t n = a.value().size();
  LVT_CHECK(n > 0, ErrorCode::kShapeMismatch, "mean of an empty tensor");
  T total = 0;
  for (T v : a.value().span()) total += v;
  return a.tape().record(Tensor<T>({1}, total / T(n)), {a}, [a, n](const Tensor<T>& g) {
    Tensor<T>& ga = a.tape().grad_buffer(a);
    const T share = g[0] / T(n);
    for (int64_t i = 0; i < ga.size(); ++i) ga[i] += share;
  });
}

template <typename T>
Var<T> sum_last(const Var<T>& a) {
  const Tensor<T>& x = a.value();
  Shape shape = x.shape();
  shape.pop_back();
  if (shape.empty()) shape.push_back(1);
  Tensor<T> out(shape);
  const int64_t cols = x.cols();
  for (int64_t r = 0; r < x.rows(); ++r) {
    T total = 0;
    for (int64_t c = 0; c < cols; ++c) total += x[r * cols + c];
    out[r] = total;
  }
  return a.tape().record(std::move(out), {a}, [a, cols](const Tensor<T>& g) {
    Tensor<T>& ga = a.tape().grad_buffer(a);
    for (int64_t i = 0; i < ga.size(); ++i) ga[i] += g[i / cols];
  });
}

template <typename T>
Var<T> gather(const Var<T>& a, std::shared_ptr<const std::vector<int64_t>> index, Shape out_shape) {
  LVT_CHECK(shape_numel(out_shape) == static_cast<int64_t>(index->size()), ErrorCode::kShapeMismatch,
            "gather index size does not match output shape");
  const Tensor<T>& x = a.value();
  Tensor<T> out(std::move(out_shape));
  for (size_t i = 0; i < index->size(); ++i) {
    const int64_t src = (*index)[i];
    LVT_CHECK(src >= 0 && src < x.size(), ErrorCode::kInvalidArgument, "gather index out of range");
    out[static_cast<int64_t>(i)] = x[src];
  }
  return a.tape().record(std::move(out), {a}, [a, index](const Tensor<T>& g) {
    Tensor<T>& ga = a.tape().grad_buffer(a);
    for (size_t i = 0; i < index->size(); ++i) ga[(*index)[i]] += g[static_cast<int64_t>(i)];
  });
}

template <typename T>
Var<T> scatter_add(const Var<T>& a, std::shared_ptr<const std::vector<int64_t>> index, Shape out_shape) {
  const Tensor<T>& x = a.value();
  LVT_CHECK(static_cast<int64_t>(index->size()) == x.size(), ErrorCode::kShapeMismatch,
            "scatter index size does not match input");
  Tensor<T> out(std::move(out_shape));
  for (size_t i = 0; i < index->size(); ++i) {
    const int64_t dst = (*index)[i];
    LVT_CHECK(dst >= 0 && dst < out.size(), ErrorCode::kInvalidArgument, "scatter index out of range");
    out[dst] += x[static_cast<int64_t>(i)];
  }
  return a.tape().record(std::move(out), {a}, [a, index](const Tensor<T>& g) {
    Tensor<T>& ga = a.tape().grad_buffer(a);
    for (size_t i = 0; i < index->size(); ++i) ga[static_cast<int64_t>(i)] += g[(*index)[i]];
  });
}

template <typename T>
Var<T> concat(std::span<const Var<T>> parts, int axis) {
  LVT_CHECK(!parts.empty(), ErrorCode::kInvalidArgument, "concat of nothing");
  const Shape& first = parts[0].shape();
  const int rank = static_cast<int>(first.size());
  if (axis < 0) axis += rank;
  LVT_CHECK(axis >= 0 && axis < rank, ErrorCode::kInvalidArgument, "concat axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    LVT_CHECK(static_cast<int>(s.size()) == rank, ErrorCode::kShapeMismatch, "concat rank mismatch");
    for (int i = 0; i < rank; ++i) {
      LVT_CHECK(i == axis || s[i] == first[i], ErrorCode::kShapeMismatch,
                "concat " + shape_string(s) + " with " + shape_string(first));
    }
    out_shape[axis] += s[axis];
  }
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= first[i];
  for (int i = axis + 1; i < rank; ++i) inner *= first[i];
  const int64_t out_stride = out_shape[axis] * inner;
  Tensor<T> out(out_shape);
  std::vector<int64_t> offsets;
  int64_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const int64_t block = p.shape()[axis] * inner;
    for (int64_t o = 0; o < outer; ++o) {
      std::copy_n(p.value().data() + o * block, block, out.data() + o * out_stride + offset);
    }
    offset += block;
  }
  std::vector<Var<T>> inputs(parts.begin(), parts.end());
  return parts[0].tape().record(std::move(out), parts, [inputs, offsets, outer, inner, out_stride, axis](const Tensor<T>& g) {
    for (size_t k = 0; k < inputs.size(); ++k) {
      if (!inputs[k].requires_grad()) continue;
      Tensor<T>& gk = inputs[k].tape().grad_buffer(inputs[k]);
      const int64_t block = inputs[k].shape()[axis] * inner;
      for (int64_t o = 0; o < outer; ++o) {
        const T* src = g.data() + o * out_stride + offsets[k];
        T* dst = gk.data() + o * block;
        for (int64_t i = 0; i < block; ++i) dst[i] += src[i];
      }
    }
  });
}

template <typename T>
Var<T> slice(const Var<T>& a, int axis, int64_t begin, int64_t end) {
  const Shape& s = a.shape();
  const int rank = static_cast<int>(s.size());
  if (axis < 0) axis += rank;
  LVT_CHECK(axis >= 0 && axis < rank && 0 <= begin && begin <= end && end <= s[axis],
            ErrorCode::kInvalidArgument, "slice bounds");
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (int i = axis + 1; i < rank; ++i) inner *= s[i];
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  const int64_t in_stride = s[axis] * inner;
  const int64_t block = (end - begin) * inner;
  Tensor<T> out(out_shape);
  for (int64_t o = 0; o < outer; ++o) {
    std::copy_n(a.value().data() + o * in_stride + begin * inner, block, out.data() + o * block);
  }
  return a.tape().record(std::move(out), {a}, [a, outer, inner, in_stride, block, begin](const Tensor<T>& g) {
    Tensor<T>& ga = a.tape().grad_buffer(a);
    for (int64_t o = 0; o < outer; ++o) {
      T* dst = ga.data() + o * in_stride + begin * inner;
      const T* src = g.data() + o * block;
      for (int64_t i = 0; i < block; ++i) dst[i] += src[i];
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> out = a.value().reshaped(std::move(shape));
  return a.tape().record(std::move(out), {a}, [a](const Tensor<T>& g) {
    Tensor<T>& ga = a.tape().grad_buffer(a);
    for (int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  Var<T> d = sub(a, b);
  return mean(mul(d, d));
}

#define LVT_INSTANTIATE_AD(T)                                                              \
  template class Tape<T>;                                                                  \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                    \
  template Var<T> add(const Var<T>&, const Var<T>&);                                       \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                       \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                       \
  template Var<T> scale(const Var<T>&, T);                                                 \
  template Var<T> add_bias(const Var<T>&, const Var<T>&);                                  \
  template Var<T> sigmoid(const Var<T>&);                                                  \
  template Var<T> exp(const Var<T>&);                                                      \
  template Var<T> gelu(const Var<T>&);                                                     \
  template Var<T> abs(const Var<T>&);                                                      \
  template Var<T> softmax(const Var<T>&);                                                  \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);              \
  template Var<T> sum(const Var<T>&);                                                      \
  template Var<T> mean(const Var<T>&);                                                     \
  template Var<T> sum_last(const Var<T>&);                                                 \
  template Var<T> gather(const Var<T>&, std::shared_ptr<const std::vector<int64_t>>, Shape); \
  template Var<T> scatter_add(const Var<T>&, std::shared_ptr<const std::vector<int64_t>>, Shape); \
  template Var<T> concat(std::span<const Var<T>>, int);                                    \
  template Var<T> slice(const Var<T>&, int, int64_t, int64_t);                             \
  template Var<T> reshape(const Var<T>&, Shape);                                           \
  template Var<T> mse(const Var<T>&, const Var<T>&);

LVT_INSTANTIATE_AD(float)
LVT_INSTANTIATE_AD(double)

}  // namespace lvt::ad
