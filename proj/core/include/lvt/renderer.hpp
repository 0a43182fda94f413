// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

// CPU Gaussian splat rasterizer.
//
// Splats are projected with the EWA approximation, sorted once per image by
// camera depth (ties by index), binned into square tiles and alpha-composited
// front to back:
//
//   C = sum_i c_i a_i prod_{k<i} (1 - a_k) + background * prod_k (1 - a_k)
//
// with a_i = min(o_i g_i, alpha_max) and contributions below alpha_min
// skipped. Color and opacity are evaluated per target from the splat's SH
// coefficients. The differentiable entry point records per-pixel contribution
// lists and replays them in reverse.

#pragma once

#include <cstdint>
#include <optional>

#include "lvt/autodiff.hpp"
#include "lvt/geometry.hpp"
#include "lvt/splat.hpp"

namespace lvt {

struct RenderSettings {
  double near_plane = 0.01;
  double blur = 0.3;  // px², added to the projected covariance diagonal
  double alpha_max = 0.999;
  double alpha_min = 1.0 / 255.0;
  // A pixel stops compositing once its transmittance drops below this.
  double min_transmittance = 1e-4;
  int tile_size = 16;

  void validate() const;
};

struct RenderTarget {
  Camera camera;
  Vec3 background = Vec3::Zero();
};

struct RenderStats {
  int64_t culled = 0;
  int64_t degenerate = 0;
  int64_t contributions = 0;
};

template <typename T>
struct Framebuffer {
  int width = 0, height = 0;
  Tensor<T> color;  // [H, W, 3], clamped to [0, 1]
  Tensor<T> alpha;  // [H, W], 1 - final transmittance
  RenderStats stats;
};

struct ProjectedGaussian {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
  double depth = 0;
};

// Empty when the center lies at or in front of the near plane.
std::optional<ProjectedGaussian> project_gaussian(const Vec3& position, const UnitQuaternion& rotation,
                                                  const Vec3& scale, const Camera& camera,
                                                  const RenderSettings& settings = {});

// Throws FrameMismatch for local-frame input.
template <typename T>
Framebuffer<T> render(const GaussianSplatSet<T>& splats, const RenderTarget& target,
                      const RenderSettings& settings = {});

// Differentiable color image [H, W, 3] with respect to every splat field.
// Clamping to [0, 1] passes gradients straight through.
template <typename T>
ad::Var<T> render(const SplatVars<T>& splats, const SplatLayout& layout, const Tensor<T>& source_rotation,
                  const RenderTarget& target, const RenderSettings& settings = {}, RenderStats* stats = nullptr);

}  // namespace lvt
