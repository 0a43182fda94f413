// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

// Conditioning features for pairs of views. The relative transform between a
// query view and one of its neighbors is turned into a 7-vector
// (canonical quaternion, translation), lifted with sinusoids, passed through a
// residual MLP to a shared base feature and finally projected once per
// transformer layer.

#pragma once

#include <array>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lvt/autodiff.hpp"
#include "lvt/geometry.hpp"
#include "lvt/params.hpp"

namespace lvt {

struct SinusoidalPEConfig {
  int n_freq = 6;
  bool include_input = true;

  int output_size(int input_size) const { return input_size * (2 * n_freq + (include_input ? 1 : 0)); }
};

// Per component: sin(2^i x), cos(2^i x) for i in [0, n_freq), then x itself
// when include_input is set.
std::vector<double> sinusoidal_encode(std::span<const double> x, const SinusoidalPEConfig& cfg);

// (w, x, y, z, tx, ty, tz) with the quaternion in canonical sign.
std::array<double, 7> pose_vector(const RigidPose& pose);

enum class ConditioningMode {
  kRelative,  // P_j P_j'^-1
  kWorld,     // absolute P_j' (ablation only; not transformation invariant)
  kNone,      // C = 0
};

struct ConditioningEncoderConfig {
  int hidden_dim = 128;
  int n_blocks = 2;
  int n_layers = 1;
  SinusoidalPEConfig pe;
  ConditioningMode mode = ConditioningMode::kRelative;

  int input_size() const { return pe.output_size(7); }
};

// Ordered (query view, neighbor view) rows; row r of every conditioning
// tensor belongs to pairs[r].
struct PairTable {
  std::vector<std::pair<int, int>> pairs;

  static PairTable from_graph(const NeighborGraph& graph);
  int64_t size() const { return static_cast<int64_t>(pairs.size()); }
};

template <typename T>
void init_conditioning_params(ParamStore<T>& store, const ConditioningEncoderConfig& cfg,
                              std::mt19937_64& rng);

// Sinusoidal features of every pair's transform, [pairs, input_size].
template <typename T>
Tensor<T> pair_pose_features(const PairTable& table, std::span<const Camera> cameras,
                             const ConditioningEncoderConfig& cfg);

// Base feature [pairs, d] shared by all layers.
template <typename T>
ad::Var<T> encode_conditioning_base(ad::Tape<T>& tape, const ParamVars<T>& params,
                                    const ConditioningEncoderConfig& cfg, const Tensor<T>& features);

// Layer-l conditioning C^(l) = base · W_l (bare linear map).
template <typename T>
ad::Var<T> project_conditioning(const ParamVars<T>& params, const ad::Var<T>& base, int layer);

// Single-pair convenience evaluation of C^(l)(rel).
template <typename T>
std::vector<T> encode_relative_transform(const RigidPose& rel, const ParamStore<T>& params,
                                         const ConditioningEncoderConfig& cfg, int layer);

}  // namespace lvt
