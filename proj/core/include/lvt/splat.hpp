// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lvt/autodiff.hpp"
#include "lvt/geometry.hpp"
#include "lvt/sh.hpp"

namespace lvt {

// Channel layout of one decoded pixel:
//   [0, 3) log-scale, [3, 7) quaternion, 7 depth logit,
//   [8, 8 + d_c) color SH (k-major, 3 per coefficient), then d_o opacity SH.
struct SplatLayout {
  int color_degree = 1;
  int opacity_degree = 1;

  static constexpr int kScale = 0;
  static constexpr int kRotation = 3;
  static constexpr int kDepth = 7;
  static constexpr int kColor = 8;

  int color_coeffs() const { return sh_coeff_count(color_degree); }
  int opacity_coeffs() const { return sh_coeff_count(opacity_degree); }
  int color_channels() const { return 3 * color_coeffs(); }
  int opacity_offset() const { return kColor + color_channels(); }
  int channels() const { return opacity_offset() + opacity_coeffs(); }
};

struct DecodeBounds {
  double near = 0.3;
  double far = 3.0;
  double scale_min = 1e-4;
  double scale_max = 0.5;

  void validate() const;
};

enum class SplatFrame { kLocal, kWorld };

// Struct-of-arrays splat storage; row n of every tensor is splat n.
template <typename T>
struct GaussianSplatSet {
  SplatFrame frame = SplatFrame::kWorld;
  int color_degree = 0;
  int opacity_degree = 0;
  Tensor<T> positions;        // [n, 3]
  Tensor<T> rotations;        // [n, 4] unit (w, x, y, z)
  Tensor<T> scales;           // [n, 3]
  Tensor<T> color_sh;         // [n, 3 * k_c]
  Tensor<T> opacity_sh;       // [n, k_o]
  std::vector<int> source_view;
  Tensor<T> source_rotation;  // [n, 4] quaternion of the source camera's world-to-camera rotation

  int64_t size() const { return positions.rows(); }
  static GaussianSplatSet empty(int color_degree, int opacity_degree);
  void validate() const;
  GaussianSplatSet subset(std::span<const int64_t> indices) const;

  template <typename U>
  GaussianSplatSet<U> cast() const {
    GaussianSplatSet<U> out;
    out.frame = frame;
    out.color_degree = color_degree;
    out.opacity_degree = opacity_degree;
    out.positions = positions.template cast<U>();
    out.rotations = rotations.template cast<U>();
    out.scales = scales.template cast<U>();
    out.color_sh = color_sh.template cast<U>();
    out.opacity_sh = opacity_sh.template cast<U>();
    out.source_view = source_view;
    out.source_rotation = source_rotation.template cast<U>();
    return out;
  }
};

// Differentiable splat fields, same shapes as GaussianSplatSet.
template <typename T>
struct SplatVars {
  ad::Var<T> positions, rotations, scales, color_sh, opacity_sh;
};

// Raw [N, H, W, d_G] maps to local-frame splats, one per pixel, n = (v*H + y)*W + x.
//   depth    t = exp(ln near + sigmoid(x_d) (ln far - ln near)), position = t * ray
//   scale    clamp(exp(x_s), scale_min, scale_max)
//   rotation normalize(x_w + 1, x_x, x_y, x_z), canonical sign
//   SH       passed through
// Throws NonFinite for non-finite raw channels.
template <typename T>
SplatVars<T> decode_pixel_splats(const ad::Var<T>& raw, std::span<const RayMap> raymaps, const SplatLayout& layout,
                                 const DecodeBounds& bounds);
template <typename T>
GaussianSplatSet<T> decode_pixel_splats(const Tensor<T>& raw, std::span<const RayMap> raymaps,
                                        const SplatLayout& layout, const DecodeBounds& bounds);

// position_w = R_jᵀ (position - t_j), rotation_w = quat(R_jᵀ) ⊗ rotation.
// `source_view[n]` selects the camera of splat n.
template <typename T>
SplatVars<T> splats_to_world(const SplatVars<T>& local, std::span<const Camera> cameras,
                             std::span<const int> source_view);
// Throws FrameMismatch unless `local` is in local frames.
template <typename T>
GaussianSplatSet<T> splats_to_world(const GaussianSplatSet<T>& local, std::span<const Camera> cameras);
// Inverse of splats_to_world; throws FrameMismatch unless `world` is in world frame.
template <typename T>
GaussianSplatSet<T> splats_to_local(const GaussianSplatSet<T>& world, std::span<const Camera> cameras);

// Per-splat source view for pixel-aligned splats of `views` images of h x w.
std::vector<int> pixel_source_views(int views, int height, int width);

// Quaternions of each source camera rotation, [n, 4].
template <typename T>
Tensor<T> source_rotation_table(std::span<const Camera> cameras, std::span<const int> source_view);

// Snapshot of differentiable fields into a plain set.
template <typename T>
GaussianSplatSet<T> to_splat_set(const SplatVars<T>& vars, SplatFrame frame, const SplatLayout& layout,
                                 std::vector<int> source_view, Tensor<T> source_rotation);

}  // namespace lvt
