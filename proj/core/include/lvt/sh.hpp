// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

// Real spherical harmonics up to degree 3 and the view-dependent color and
// opacity built on them.
//
// Basis ordering is band by band, m = -l..l within a band, without the
// Condon-Shortley phase: band 1 is c1 * (y, z, x).
//
// Coefficients live in the splat's source-camera frame. A world direction is
// rotated into that frame (d_src = R_src d_world) before evaluation, which is
// equivalent to rotating the coefficients into world space.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lvt/autodiff.hpp"
#include "lvt/geometry.hpp"

namespace lvt {

inline constexpr int kMaxShDegree = 3;
inline constexpr double kShC0 = 0.28209479177387814;  // 1 / (2 sqrt(pi))

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

struct SHConfig {
  int color_degree = 1;
  int opacity_degree = 1;
  int n_reg_samples = 1;
  uint64_t seed = 0;

  void validate() const;
};

// Unchecked basis for a unit (x, y, z); writes sh_coeff_count(degree) values.
template <typename T>
void sh_basis_unchecked(T x, T y, T z, int degree, T* out);

// Partial derivatives of the basis polynomials, jac[k * 3 + axis]. Composed
// with the Jacobian of direction normalization this gives the gradient on the
// sphere.
template <typename T>
void sh_basis_jacobian(T x, T y, T z, int degree, T* jac);

// Throws NonUnitDirection when |dir| differs from 1 by more than 1e-6.
std::vector<double> sh_basis(const Vec3& dir, int degree);

// Color channels evaluated independently; coefficients are k-major
// (coeffs[k * 3 + channel]).
Vec3 eval_view_dependent_color(std::span<const double> coeffs, const Vec3& dir_world, const Mat3& source_rotation,
                               int degree);
// sigmoid(Y(R_src d) · coeffs)
double eval_view_dependent_opacity(std::span<const double> coeffs, const Vec3& dir_world,
                                   const Mat3& source_rotation, int degree);

enum class OpacityRegularizerMode {
  kSphericalHarmonics,  // mean_n |sigma_n · Y(n_hat)| with a fresh random n_hat per splat
  kScalar,              // mean_n |sigma_n| for per-splat scalar opacity
};

inline OpacityRegularizerMode regularizer_mode_for_degree(int opacity_degree) {
  return opacity_degree > 0 ? OpacityRegularizerMode::kSphericalHarmonics : OpacityRegularizerMode::kScalar;
}

// Uniform direction on S^2 from normalized Gaussian draws.
Vec3 sample_unit_direction(std::mt19937_64& rng);

// coeffs: [n, k]. Draws n * samples directions from `rng` in splat order.
template <typename T>
double opacity_regularizer(const Tensor<T>& coeffs, OpacityRegularizerMode mode, std::mt19937_64& rng,
                           int samples = 1);
template <typename T>
ad::Var<T> opacity_regularizer(const ad::Var<T>& coeffs, OpacityRegularizerMode mode, std::mt19937_64& rng,
                               int samples = 1);

}  // namespace lvt
