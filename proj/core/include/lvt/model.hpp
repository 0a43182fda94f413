// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lvt/autodiff.hpp"
#include "lvt/geometry.hpp"
#include "lvt/lvt_block.hpp"
#include "lvt/params.hpp"
#include "lvt/pose_encoding.hpp"
#include "lvt/renderer.hpp"
#include "lvt/splat.hpp"
#include "lvt/tokenizer.hpp"

namespace lvt {

struct ModelConfig {
  int patch_size = 8;
  StackConfig stack;
  int conditioning_blocks = 2;
  SinusoidalPEConfig pe;
  ConditioningMode conditioning = ConditioningMode::kRelative;
  SplatLayout layout;
  DecodeBounds bounds;
  RenderSettings render;

  // Initial splat parameters, written into the unpatchify bias.
  double init_scale = 0.02;
  double init_color = 0.5;
  double init_opacity = 0.5;
  // Multiplies the unpatchify kernel after LeCun init.
  double output_gain = 0.1;

  void validate() const;
  TokenizerConfig tokenizer() const;
  ConditioningEncoderConfig conditioning_encoder() const;
  // Raw channel values that decode to the initial splat parameters.
  std::vector<double> splat_bias() const;
};

std::string model_config_to_json(const ModelConfig& cfg);
// Missing keys keep their defaults. Throws MalformedManifest on bad JSON or
// unknown enum names.
ModelConfig model_config_from_json(const std::string& text);

// Posed input views: images are [N, H, W, 3] in [0, 1].
template <typename T>
struct ViewSet {
  std::vector<Camera> cameras;
  Tensor<T> images;

  int count() const { return static_cast<int>(cameras.size()); }
  void validate() const;
};

template <typename T>
struct ForwardResult {
  SplatVars<T> splats;  // world frame
  std::vector<int> source_view;
  Tensor<T> source_rotation;
  AttentionCounters counters;
};

template <typename T>
class LvtModel {
 public:
  LvtModel(ModelConfig cfg, uint64_t seed);
  LvtModel(ModelConfig cfg, ParamStore<T> params);

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  // tokenize -> stack -> unpatchify -> decode -> world transform
  ForwardResult<T> forward(const ParamVars<T>& vars, const ViewSet<T>& views) const;
  // Same pipeline without gradients.
  GaussianSplatSet<T> predict(const ViewSet<T>& views, AttentionCounters* counters = nullptr) const;

 private:
  ModelConfig cfg_;
  ParamStore<T> params_;
};

}  // namespace lvt
