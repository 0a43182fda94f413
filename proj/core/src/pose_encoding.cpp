// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/pose_encoding.hpp"

#include <cmath>
#include <string>

namespace lvt {

std::vector<double> sinusoidal_encode(std::span<const double> x, const SinusoidalPEConfig& cfg) {
  LVT_CHECK(cfg.n_freq >= 1, ErrorCode::kInvalidArgument, "n_freq must be at least 1");
  std::vector<double> out;
  out.reserve(cfg.output_size(static_cast<int>(x.size())));
  for (double v : x) {
    LVT_CHECK(std::isfinite(v), ErrorCode::kNonFinite, "positional encoding input is not finite");
    double freq = 1.0;
    for (int i = 0; i < cfg.n_freq; ++i, freq *= 2.0) {
      out.push_back(std::sin(freq * v));
      out.push_back(std::cos(freq * v));
    }
    if (cfg.include_input) out.push_back(v);
  }
  return out;
}

std::array<double, 7> pose_vector(const RigidPose& pose) {
  const UnitQuaternion q = quat_from_rotation(pose.rotation);
  return {q.w, q.x, q.y, q.z, pose.translation.x(), pose.translation.y(), pose.translation.z()};
}

PairTable PairTable::from_graph(const NeighborGraph& graph) {
  PairTable table;
  table.pairs.reserve(graph.edge_count());
  for (int j = 0; j < graph.num_views(); ++j) {
    for (int jp : graph.neighbors[j]) table.pairs.emplace_back(j, jp);
  }
  return table;
}

template <typename T>
void init_conditioning_params(ParamStore<T>& store, const ConditioningEncoderConfig& cfg, std::mt19937_64& rng) {
  const int d = cfg.hidden_dim;
  const int f = cfg.input_size();
  store.add("cond.in.weight", lecun_normal<T>({f, d}, f, rng));
  store.add("cond.in.bias", Tensor<T>({d}));
  for (int b = 0; b < cfg.n_blocks; ++b) {
    const std::string p = "cond.block" + std::to_string(b) + ".";
    store.add(p + "norm.gamma", Tensor<T>({d}, T(1)));
    store.add(p + "norm.beta", Tensor<T>({d}));
    store.add(p + "fc1.weight", lecun_normal<T>({d, d}, d, rng));
    store.add(p + "fc1.bias", Tensor<T>({d}));
    store.add(p + "fc2.weight", lecun_normal<T>({d, d}, d, rng, std::sqrt(1.0 / cfg.n_blocks)));
    store.add(p + "fc2.bias", Tensor<T>({d}));
  }
  for (int l = 0; l < cfg.n_layers; ++l) {
    store.add("cond.layer" + std::to_string(l) + ".weight", lecun_normal<T>({d, d}, d, rng));
  }
}

template <typename T>
Tensor<T> pair_pose_features(const PairTable& table, std::span<const Camera> cameras,
                             const ConditioningEncoderConfig& cfg) {
  const int f = cfg.input_size();
  Tensor<T> out({table.size(), f});
  for (int64_t r = 0; r < table.size(); ++r) {
    const auto [j, jp] = table.pairs[r];
    LVT_CHECK(j >= 0 && jp >= 0 && j < static_cast<int>(cameras.size()) && jp < static_cast<int>(cameras.size()),
              ErrorCode::kInvalidArgument, "pair refers to a missing camera");
    const RigidPose pose = cfg.mode == ConditioningMode::kWorld
                               ? cameras[jp].pose
                               : relative_pose(cameras[j].pose, cameras[jp].pose);
    const auto v = pose_vector(pose);
    const auto enc = sinusoidal_encode(v, cfg.pe);
    for (int c = 0; c < f; ++c) out[r * f + c] = static_cast<T>(enc[c]);
  }
  return out;
}

template <typename T>
ad::Var<T> encode_conditioning_base(ad::Tape<T>& tape, const ParamVars<T>& params,
                                    const ConditioningEncoderConfig& cfg, const Tensor<T>& features) {
  LVT_CHECK(features.cols() == cfg.input_size(), ErrorCode::kShapeMismatch,
            "pose features have " + std::to_string(features.cols()) + " columns, expected " +
                std::to_string(cfg.input_size()));
  ad::Var<T> x = tape.constant(features);
  x = ad::add_bias(ad::matmul(x, params("cond.in.weight")), params("cond.in.bias"));
  for (int b = 0; b < cfg.n_blocks; ++b) {
    const std::string p = "cond.block" + std::to_string(b) + ".";
    ad::Var<T> h = ad::layer_norm(x, params(p + "norm.gamma"), params(p + "norm.beta"));
    h = ad::gelu(ad::add_bias(ad::matmul(h, params(p + "fc1.weight")), params(p + "fc1.bias")));
    h = ad::add_bias(ad::matmul(h, params(p + "fc2.weight")), params(p + "fc2.bias"));
    x = ad::add(x, h);
  }
  return x;
}

template <typename T>
ad::Var<T> project_conditioning(const ParamVars<T>& params, const ad::Var<T>& base, int layer) {
  return ad::matmul(base, params("cond.layer" + std::to_string(layer) + ".weight"));
}

template <typename T>
std::vector<T> encode_relative_transform(const RigidPose& rel, const ParamStore<T>& params,
                                         const ConditioningEncoderConfig& cfg, int layer) {
  LVT_CHECK(layer >= 0 && layer < cfg.n_layers, ErrorCode::kInvalidArgument, "layer out of range");
  if (cfg.mode == ConditioningMode::kNone) return std::vector<T>(cfg.hidden_dim, T(0));
  const auto enc = sinusoidal_encode(pose_vector(rel), cfg.pe);
  Tensor<T> features({1, static_cast<int64_t>(enc.size())});
  for (size_t i = 0; i < enc.size(); ++i) features[static_cast<int64_t>(i)] = static_cast<T>(enc[i]);
  ad::Tape<T> tape;
  ParamVars<T> vars(tape, params, /*requires_grad=*/false);
  const ad::Var<T> c = project_conditioning(vars, encode_conditioning_base(tape, vars, cfg, features), layer);
  return {c.value().vec().begin(), c.value().vec().end()};
}

#define LVT_INSTANTIATE_POSE(T)                                                                          \
  template void init_conditioning_params(ParamStore<T>&, const ConditioningEncoderConfig&, std::mt19937_64&); \
  template Tensor<T> pair_pose_features(const PairTable&, std::span<const Camera>,                     \
                                        const ConditioningEncoderConfig&);                             \
  template ad::Var<T> encode_conditioning_base(ad::Tape<T>&, const ParamVars<T>&,                      \
                                               const ConditioningEncoderConfig&, const Tensor<T>&);    \
  template ad::Var<T> project_conditioning(const ParamVars<T>&, const ad::Var<T>&, int);               \
  template std::vector<T> encode_relative_transform(const RigidPose&, const ParamStore<T>&,            \
                                                    const ConditioningEncoderConfig&, int);

LVT_INSTANTIATE_POSE(float)
LVT_INSTANTIATE_POSE(double)

}  // namespace lvt
