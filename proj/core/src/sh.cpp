// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/sh.hpp"

#include <cmath>
#include <string>

namespace lvt {

namespace {

constexpr double kC1 = 0.4886025119029199;   // sqrt(3 / 4pi)
constexpr double kC2a = 1.0925484305920792;  // xy, yz, xz
constexpr double kC2b = 0.31539156525252005;
constexpr double kC2c = 0.5462742152960396;
constexpr double kC3a = 0.5900435899266435;
constexpr double kC3b = 2.890611442640554;
constexpr double kC3c = 0.4570457994644658;
constexpr double kC3d = 0.3731763325901154;
constexpr double kC3e = 1.445305721320277;

}  // namespace

void SHConfig::validate() const {
  LVT_CHECK(color_degree >= 0 && color_degree <= kMaxShDegree && opacity_degree >= 0 &&
                opacity_degree <= kMaxShDegree,
            ErrorCode::kInvalidArgument, "SH degrees must lie in [0, 3]");
  LVT_CHECK(n_reg_samples >= 1, ErrorCode::kInvalidArgument, "n_reg_samples must be at least 1");
}

template <typename T>
void sh_basis_unchecked(T x, T y, T z, int degree, T* out) {
  out[0] = T(kShC0);
  if (degree < 1) return;
  out[1] = T(kC1) * y;
  out[2] = T(kC1) * z;
  out[3] = T(kC1) * x;
  if (degree < 2) return;
  out[4] = T(kC2a) * x * y;
  out[5] = T(kC2a) * y * z;
  out[6] = T(kC2b) * (T(3) * z * z - T(1));
  out[7] = T(kC2a) * x * z;
  out[8] = T(kC2c) * (x * x - y * y);
  if (degree < 3) return;
  out[9] = T(kC3a) * y * (T(3) * x * x - y * y);
  out[10] = T(kC3b) * x * y * z;
  out[11] = T(kC3c) * y * (T(5) * z * z - T(1));
  out[12] = T(kC3d) * z * (T(5) * z * z - T(3));
  out[13] = T(kC3c) * x * (T(5) * z * z - T(1));
  out[14] = T(kC3e) * z * (x * x - y * y);
  out[15] = T(kC3a) * x * (x * x - T(3) * y * y);
}

template <typename T>
void sh_basis_jacobian(T x, T y, T z, int degree, T* jac) {
  auto set = [jac](int k, T dx, T dy, T dz) {
    jac[k * 3 + 0] = dx;
    jac[k * 3 + 1] = dy;
    jac[k * 3 + 2] = dz;
  };
  set(0, 0, 0, 0);
  if (degree < 1) return;
  set(1, 0, T(kC1), 0);
  set(2, 0, 0, T(kC1));
  set(3, T(kC1), 0, 0);
  if (degree < 2) return;
  set(4, T(kC2a) * y, T(kC2a) * x, 0);
  set(5, 0, T(kC2a) * z, T(kC2a) * y);
  set(6, 0, 0, T(6 * kC2b) * z);
  set(7, T(kC2a) * z, 0, T(kC2a) * x);
  set(8, T(2 * kC2c) * x, T(-2 * kC2c) * y, 0);
  if (degree < 3) return;
  set(9, T(6 * kC3a) * x * y, T(3 * kC3a) * (x * x - y * y), 0);
  set(10, T(kC3b) * y * z, T(kC3b) * x * z, T(kC3b) * x * y);
  set(11, 0, T(kC3c) * (T(5) * z * z - T(1)), T(10 * kC3c) * y * z);
  set(12, 0, 0, T(kC3d) * (T(15) * z * z - T(3)));
  set(13, T(kC3c) * (T(5) * z * z - T(1)), 0, T(10 * kC3c) * x * z);
  set(14, T(2 * kC3e) * x * z, T(-2 * kC3e) * y * z, T(kC3e) * (x * x - y * y));
  set(15, T(3 * kC3a) * (x * x - y * y), T(-6 * kC3a) * x * y, 0);
}

std::vector<double> sh_basis(const Vec3& dir, int degree) {
  LVT_CHECK(degree >= 0 && degree <= kMaxShDegree, ErrorCode::kInvalidArgument, "SH degree must lie in [0, 3]");
  LVT_CHECK(std::abs(dir.norm() - 1.0) <= 1e-6, ErrorCode::kNonUnitDirection,
            "direction norm " + std::to_string(dir.norm()));
  std::vector<double> out(sh_coeff_count(degree));
  sh_basis_unchecked(dir.x(), dir.y(), dir.z(), degree, out.data());
  return out;
}

Vec3 eval_view_dependent_color(std::span<const double> coeffs, const Vec3& dir_world, const Mat3& source_rotation,
                               int degree) {
  const int k = sh_coeff_count(degree);
  LVT_CHECK(static_cast<int>(coeffs.size()) == 3 * k, ErrorCode::kShapeMismatch, "color SH needs 3 * (deg+1)^2");
  const auto basis = sh_basis(source_rotation * dir_world, degree);
  Vec3 out = Vec3::Zero();
  for (int i = 0; i < k; ++i) {
    for (int c = 0; c < 3; ++c) out[c] += basis[i] * coeffs[i * 3 + c];
  }
  return out;
}

double eval_view_dependent_opacity(std::span<const double> coeffs, const Vec3& dir_world,
                                   const Mat3& source_rotation, int degree) {
  const int k = sh_coeff_count(degree);
  LVT_CHECK(static_cast<int>(coeffs.size()) == k, ErrorCode::kShapeMismatch, "opacity SH needs (deg+1)^2");
  const auto basis = sh_basis(source_rotation * dir_world, degree);
  double logit = 0;
  for (int i = 0; i < k; ++i) logit += basis[i] * coeffs[i];
  return 1.0 / (1.0 + std::exp(-logit));
}

Vec3 sample_unit_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Vec3 v(normal(rng), normal(rng), normal(rng));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

namespace {

int degree_from_count(int64_t k) {
  for (int d = 0; d <= kMaxShDegree; ++d) {
    if (sh_coeff_count(d) == k) return d;
  }
  throw Error(ErrorCode::kShapeMismatch, "coefficient count " + std::to_string(k) + " is not (deg+1)^2");
}

// [n, k] basis values at fresh random directions.
template <typename T>
Tensor<T> sampled_basis(int64_t n, int64_t k, std::mt19937_64& rng) {
  const int degree = degree_from_count(k);
  Tensor<T> out({n, k});
  std::vector<T> row(k);
  for (int64_t i = 0; i < n; ++i) {
    const Vec3 d = sample_unit_direction(rng);
    sh_basis_unchecked(static_cast<T>(d.x()), static_cast<T>(d.y()), static_cast<T>(d.z()), degree, row.data());
    std::copy(row.begin(), row.end(), out.data() + i * k);
  }
  return out;
}

}  // namespace

template <typename T>
double opacity_regularizer(const Tensor<T>& coeffs, OpacityRegularizerMode mode, std::mt19937_64& rng, int samples) {
  ad::Tape<T> tape;
  const ad::Var<T> c = tape.constant(coeffs);
  return static_cast<double>(opacity_regularizer(c, mode, rng, samples).value()[0]);
}

template <typename T>
ad::Var<T> opacity_regularizer(const ad::Var<T>& coeffs, OpacityRegularizerMode mode, std::mt19937_64& rng,
                               int samples) {
  const Shape& s = coeffs.shape();
  LVT_CHECK(s.size() == 2 && s[0] > 0, ErrorCode::kShapeMismatch, "opacity coefficients must be [n, k]");
  LVT_CHECK(samples >= 1, ErrorCode::kInvalidArgument, "at least one regularizer sample is required");
  for (T v : coeffs.value().span()) {
    LVT_CHECK(std::isfinite(v), ErrorCode::kNonFinite, "opacity coefficients must be finite");
  }
  if (mode == OpacityRegularizerMode::kScalar) {
    LVT_CHECK(s[1] == 1, ErrorCode::kShapeMismatch, "scalar opacity regularizer expects one coefficient per splat");
    return ad::mean(ad::abs(coeffs));
  }
  ad::Tape<T>& tape = coeffs.tape();
  ad::Var<T> total;
  for (int i = 0; i < samples; ++i) {
    const ad::Var<T> basis = tape.constant(sampled_basis<T>(s[0], s[1], rng));
    const ad::Var<T> term = ad::mean(ad::abs(ad::sum_last(ad::mul(coeffs, basis))));
    total = total.valid() ? ad::add(total, term) : term;
  }
  return samples == 1 ? total : ad::scale(total, T(1) / T(samples));
}

#define LVT_INSTANTIATE_SH(T)                                                                                 \
  template void sh_basis_unchecked(T, T, T, int, T*);                                                       \
  template void sh_basis_jacobian(T, T, T, int, T*);                                                        \
  template double opacity_regularizer(const Tensor<T>&, OpacityRegularizerMode, std::mt19937_64&, int);     \
  template ad::Var<T> opacity_regularizer(const ad::Var<T>&, OpacityRegularizerMode, std::mt19937_64&, int);

LVT_INSTANTIATE_SH(float)
LVT_INSTANTIATE_SH(double)

}  // namespace lvt
