// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "lvt/autodiff.hpp"
#include "lvt/params.hpp"

namespace lvt {

struct TokenizerConfig {
  int patch_size = 8;
  int hidden_dim = 128;
  int splat_channels = 24;  // d_G

  // Throws ShapeMismatch unless the patch size tiles an H x W image.
  void validate(int height, int width) const;
};

// Registers patch.*, token_norm.* and unpatch.* parameters. `splat_bias` seeds
// the per-channel bias of the decoding layer (length d_G, may be empty).
template <typename T>
void init_tokenizer_params(ParamStore<T>& store, const TokenizerConfig& cfg, std::mt19937_64& rng,
                           const std::vector<double>& splat_bias = {});

// Non-overlapping p x p windows of concat(image, ray map) mapped to d channels.
// images, raymaps: [N, H, W, 3]; weight: [p*p*6, d] with window elements in
// (row, col, channel) order; bias: [d]. Returns [N, H/p, W/p, d].
template <typename T>
ad::Var<T> patchify(const ad::Var<T>& images, const ad::Var<T>& raymaps, const ad::Var<T>& weight,
                    const ad::Var<T>& bias, int patch_size);

// [N, Hp, Wp, d] -> [N, Hp*Wp, d], token (r, c) at r*Wp + c, then per-token
// layer normalization.
template <typename T>
ad::Var<T> flatten_and_normalize(const ad::Var<T>& grid, const ad::Var<T>& gamma, const ad::Var<T>& beta);

// Transposed stride-p convolution: each d-vector becomes a p x p x d_G block.
// tokens: [N, T, d]; weight: [d, p*p*d_G]; bias: [d_G]. Returns [N, H, W, d_G].
template <typename T>
ad::Var<T> unpatchify(const ad::Var<T>& tokens, const ad::Var<T>& weight, const ad::Var<T>& bias,
                      int patch_size, int height, int width);

}  // namespace lvt
