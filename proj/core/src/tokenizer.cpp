// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/tokenizer.hpp"

#include <array>
#include <memory>
#include <string>

namespace lvt {

void TokenizerConfig::validate(int height, int width) const {
  LVT_CHECK(patch_size >= 1 && hidden_dim >= 1 && splat_channels >= 1, ErrorCode::kInvalidArgument,
            "tokenizer dimensions must be positive");
  LVT_CHECK(height % patch_size == 0 && width % patch_size == 0, ErrorCode::kShapeMismatch,
            "patch size " + std::to_string(patch_size) + " does not tile " + std::to_string(height) + "x" +
                std::to_string(width));
}

template <typename T>
void init_tokenizer_params(ParamStore<T>& store, const TokenizerConfig& cfg, std::mt19937_64& rng,
                           const std::vector<double>& splat_bias) {
  const int p = cfg.patch_size, d = cfg.hidden_dim, g = cfg.splat_channels;
  store.add("patch.weight", lecun_normal<T>({p * p * 6, d}, p * p * 6, rng));
  store.add("patch.bias", Tensor<T>({d}));
  store.add("token_norm.gamma", Tensor<T>({d}, T(1)));
  store.add("token_norm.beta", Tensor<T>({d}));
  store.add("unpatch.weight", lecun_normal<T>({d, p * p * g}, d, rng));
  Tensor<T> bias({g});
  LVT_CHECK(splat_bias.empty() || static_cast<int>(splat_bias.size()) == g, ErrorCode::kShapeMismatch,
            "splat bias must have d_G entries");
  for (size_t i = 0; i < splat_bias.size(); ++i) bias[static_cast<int64_t>(i)] = static_cast<T>(splat_bias[i]);
  store.add("unpatch.bias", std::move(bias));
}

template <typename T>
ad::Var<T> patchify(const ad::Var<T>& images, const ad::Var<T>& raymaps, const ad::Var<T>& weight,
                    const ad::Var<T>& bias, int p) {
  const Shape& s = images.shape();
  LVT_CHECK(s.size() == 4 && s[3] == 3 && raymaps.shape() == s, ErrorCode::kShapeMismatch,
            "patchify expects matching [N, H, W, 3] images and ray maps, got " + shape_string(s) + " and " +
                shape_string(raymaps.shape()));
  const int64_t n = s[0], h = s[1], w = s[2];
  LVT_CHECK(p >= 1 && h % p == 0 && w % p == 0, ErrorCode::kShapeMismatch, "patch size does not tile the image");
  LVT_CHECK(weight.shape() == Shape({p * p * 6, weight.shape().back()}), ErrorCode::kShapeMismatch,
            "patch kernel must be [p*p*6, d]");
  const int64_t hp = h / p, wp = w / p, window = int64_t{p} * p * 6;

  const std::array<ad::Var<T>, 2> parts{images, raymaps};
  const ad::Var<T> stacked = ad::concat<T>(parts, 3);  // [N, H, W, 6]

  auto index = std::make_shared<std::vector<int64_t>>();
  index->reserve(n * hp * wp * window);
  for (int64_t v = 0; v < n; ++v)
    for (int64_t r = 0; r < hp; ++r)
      for (int64_t c = 0; c < wp; ++c)
        for (int64_t dy = 0; dy < p; ++dy)
          for (int64_t dx = 0; dx < p; ++dx)
            for (int64_t ch = 0; ch < 6; ++ch)
              index->push_back(((v * h + r * p + dy) * w + c * p + dx) * 6 + ch);
  const ad::Var<T> windows = ad::gather<T>(stacked, std::move(index), {n * hp * wp, window});
  const ad::Var<T> tokens = ad::add_bias(ad::matmul(windows, weight), bias);
  return ad::reshape(tokens, {n, hp, wp, weight.shape().back()});
}

template <typename T>
ad::Var<T> flatten_and_normalize(const ad::Var<T>& grid, const ad::Var<T>& gamma, const ad::Var<T>& beta) {
  const Shape& s = grid.shape();
  LVT_CHECK(s.size() == 4, ErrorCode::kShapeMismatch, "token grid must be [N, Hp, Wp, d]");
  return ad::layer_norm(ad::reshape(grid, {s[0], s[1] * s[2], s[3]}), gamma, beta);
}

template <typename T>
ad::Var<T> unpatchify(const ad::Var<T>& tokens, const ad::Var<T>& weight, const ad::Var<T>& bias, int p,
                      int height, int width) {
  const Shape& s = tokens.shape();
  LVT_CHECK(s.size() == 3, ErrorCode::kShapeMismatch, "tokens must be [N, T, d]");
  LVT_CHECK(p >= 1 && height % p == 0 && width % p == 0, ErrorCode::kShapeMismatch,
            "patch size does not tile the image");
  const int64_t n = s[0], hp = height / p, wp = width / p;
  LVT_CHECK(s[1] == hp * wp, ErrorCode::kShapeMismatch,
            "token count " + std::to_string(s[1]) + " does not match a " + std::to_string(height) + "x" +
                std::to_string(width) + " image");
  const int64_t g = bias.value().size();
  LVT_CHECK(weight.shape() == Shape({s[2], int64_t{p} * p * g}), ErrorCode::kShapeMismatch,
            "unpatch kernel must be [d, p*p*d_G]");

  const ad::Var<T> blocks = ad::matmul(tokens, weight);  // [N, T, p*p*d_G]
  auto index = std::make_shared<std::vector<int64_t>>();
  index->reserve(n * height * width * g);
  const int64_t row_len = int64_t{p} * p * g;
  for (int64_t v = 0; v < n; ++v)
    for (int64_t y = 0; y < height; ++y)
      for (int64_t x = 0; x < width; ++x) {
        const int64_t token = v * hp * wp + (y / p) * wp + x / p;
        const int64_t base = token * row_len + ((y % p) * p + x % p) * g;
        for (int64_t ch = 0; ch < g; ++ch) index->push_back(base + ch);
      }
  const ad::Var<T> maps = ad::gather<T>(blocks, std::move(index), {n, height, width, g});
  return ad::add_bias(maps, bias);
}

#define LVT_INSTANTIATE_TOKENIZER(T)                                                                        \
  template void init_tokenizer_params(ParamStore<T>&, const TokenizerConfig&, std::mt19937_64&,           \
                                      const std::vector<double>&);                                         \
  template ad::Var<T> patchify(const ad::Var<T>&, const ad::Var<T>&, const ad::Var<T>&, const ad::Var<T>&, \
                               int);                                                                        \
  template ad::Var<T> flatten_and_normalize(const ad::Var<T>&, const ad::Var<T>&, const ad::Var<T>&);     \
  template ad::Var<T> unpatchify(const ad::Var<T>&, const ad::Var<T>&, const ad::Var<T>&, int, int, int);

LVT_INSTANTIATE_TOKENIZER(float)
LVT_INSTANTIATE_TOKENIZER(double)

}  // namespace lvt
