// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <span>

namespace lvt {

void RenderSettings::validate() const {
  LVT_CHECK(near_plane > 0, ErrorCode::kInvalidArgument, "near plane must be positive");
  LVT_CHECK(blur >= 0, ErrorCode::kInvalidArgument, "blur must be non-negative");
  LVT_CHECK(alpha_min >= 0 && alpha_max > alpha_min && alpha_max < 1, ErrorCode::kInvalidArgument,
            "alpha bounds must satisfy 0 <= min < max < 1");
  LVT_CHECK(tile_size >= 1, ErrorCode::kInvalidArgument, "tile size must be positive");
  LVT_CHECK(min_transmittance >= 0 && min_transmittance < 1, ErrorCode::kInvalidArgument,
            "minimum transmittance must lie in [0, 1)");
}

namespace {

template <typename T>
using M3 = Eigen::Matrix<T, 3, 3>;
template <typename T>
using V3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using M2 = Eigen::Matrix<T, 2, 2>;
template <typename T>
using M23 = Eigen::Matrix<T, 2, 3>;

template <typename T>
M3<T> rotation_matrix(T w, T x, T y, T z) {
  M3<T> r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),    //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

// Gradient of sum(G ∘ R(w, x, y, z)) with respect to a unit quaternion.
template <typename T>
std::array<T, 4> rotation_matrix_vjp(T w, T x, T y, T z, const M3<T>& g) {
  return {
      2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1)),
      2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) + z * g(2, 0) + w * g(2, 1) -
           2 * x * g(2, 2)),
      2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) - w * g(2, 0) + z * g(2, 1) -
           2 * y * g(2, 2)),
      2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) + y * g(1, 2) +
           x * g(2, 0) + y * g(2, 1)),
  };
}

// Per-splat state for one target view.
template <typename T>
struct Projected {
  bool visible = false;
  T depth = 0;
  V3<T> pc;        // camera-frame center
  M3<T> rot;       // from the normalized quaternion
  T qn[4];         // normalized quaternion
  T qnorm = 1;
  V3<T> scale;
  M3<T> sigma;     // world covariance
  M23<T> jw;       // J W
  M2<T> conic;     // inverse 2-D covariance
  T mean[2];
  V3<T> view_dir;  // unit, splat toward camera center, world frame
  T dist = 1;      // |camera center - position|
  V3<T> src_dir;   // view_dir in the source camera frame
  T opacity = 0;
  T color[3] = {0, 0, 0};
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // covered pixel range, inclusive
};

struct Contribution {
  int32_t splat;
  int32_t clamped;
};

template <typename T>
struct Record {
  Contribution c;
  T alpha;
  T trans;  // transmittance before this splat
  T g;
};

template <typename T>
class Rasterizer {
 public:
  Rasterizer(const Tensor<T>& positions, const Tensor<T>& rotations, const Tensor<T>& scales,
             const Tensor<T>& color_sh, const Tensor<T>& opacity_sh, const Tensor<T>& source_rotation,
             const SplatLayout& layout, const RenderTarget& target, const RenderSettings& settings)
      : positions_(positions), rotations_(rotations), scales_(scales), color_sh_(color_sh),
        opacity_sh_(opacity_sh), source_rotation_(source_rotation), layout_(layout), target_(target),
        settings_(settings) {
    settings.validate();
    target.camera.intrinsics.validate();
    const int64_t n = positions.rows();
    auto check = [n](const Tensor<T>& t, int64_t cols, const char* name) {
      LVT_CHECK(t.rank() == 2 && t.rows() == n && t.cols() == cols, ErrorCode::kShapeMismatch,
                std::string(name) + " has shape " + shape_string(t.shape()));
    };
    check(positions, 3, "positions");
    check(rotations, 4, "rotations");
    check(scales, 3, "scales");
    check(color_sh, layout.color_channels(), "color_sh");
    check(opacity_sh, layout.opacity_coeffs(), "opacity_sh");
    check(source_rotation, 4, "source_rotation");
  }

  Framebuffer<T> forward(bool keep_records) {
    const CameraIntrinsics& k = target_.camera.intrinsics;
    width_ = k.width;
    height_ = k.height;
    project_all();
    bin();

    Framebuffer<T> fb;
    fb.width = width_;
    fb.height = height_;
    fb.color = Tensor<T>({height_, width_, 3});
    fb.alpha = Tensor<T>({height_, width_});
    raw_color_ = Tensor<T>({height_, width_, 3});
    if (keep_records) {
      records_.clear();
      record_begin_.assign(static_cast<size_t>(width_) * height_, 0);
      record_end_.assign(static_cast<size_t>(width_) * height_, 0);
    }
    const T bg[3] = {T(target_.background[0]), T(target_.background[1]), T(target_.background[2])};
    const T amax = T(settings_.alpha_max), amin = T(settings_.alpha_min);
    const T tmin = T(settings_.min_transmittance);

    for (int ty = 0; ty < tiles_y_; ++ty) {
      for (int tx = 0; tx < tiles_x_; ++tx) {
        const std::vector<int32_t>& list = tiles_[ty * tiles_x_ + tx];
        const int ys = ty * settings_.tile_size, ye = std::min(height_, ys + settings_.tile_size);
        const int xs = tx * settings_.tile_size, xe = std::min(width_, xs + settings_.tile_size);
        for (int py = ys; py < ye; ++py) {
          for (int px = xs; px < xe; ++px) {
            const T u = T(px) + T(0.5), v = T(py) + T(0.5);
            T trans = 1;
            T acc[3] = {0, 0, 0};
            const int64_t o = (static_cast<int64_t>(py) * width_ + px);
            if (keep_records) record_begin_[o] = static_cast<int64_t>(records_.size());
            for (int32_t s : list) {
              const Projected<T>& p = proj_[s];
              if (px < p.x0 || px > p.x1 || py < p.y0 || py > p.y1) continue;
              const T dx = u - p.mean[0], dy = v - p.mean[1];
              const T power =
                  T(-0.5) * (p.conic(0, 0) * dx * dx + T(2) * p.conic(0, 1) * dx * dy + p.conic(1, 1) * dy * dy);
              const T g = std::exp(power);
              T alpha = p.opacity * g;
              int32_t clamped = 0;
              if (alpha > amax) {
                alpha = amax;
                clamped = 1;
              }
              if (alpha < amin) continue;
              const T w = alpha * trans;
              for (int c = 0; c < 3; ++c) acc[c] += w * p.color[c];
              if (keep_records) records_.push_back({{s, clamped}, alpha, trans, g});
              trans *= (T(1) - alpha);
              ++stats_.contributions;
              if (trans < tmin) break;
            }
            if (keep_records) record_end_[o] = static_cast<int64_t>(records_.size());
            for (int c = 0; c < 3; ++c) {
              const T value = acc[c] + bg[c] * trans;
              raw_color_[o * 3 + c] = value;
              fb.color[o * 3 + c] = std::clamp(value, T(0), T(1));
            }
            fb.alpha[o] = T(1) - trans;
          }
        }
      }
    }
    fb.stats = stats_;
    return fb;
  }

  // Gradients of sum(d_color ∘ color) with respect to every splat field.
  void backward(const Tensor<T>& d_color, Tensor<T>* g_pos, Tensor<T>* g_rot, Tensor<T>* g_scale,
                Tensor<T>* g_color, Tensor<T>* g_opacity) const {
    const int64_t n = positions_.rows();
    // Screen-space accumulators.
    std::vector<T> g_mean(n * 2, T(0)), g_conic(n * 3, T(0)), g_o(n, T(0)), g_c(n * 3, T(0));
    const T bg[3] = {T(target_.background[0]), T(target_.background[1]), T(target_.background[2])};

    for (int py = 0; py < height_; ++py) {
      for (int px = 0; px < width_; ++px) {
        const int64_t o = static_cast<int64_t>(py) * width_ + px;
        const T* dc = d_color.data() + o * 3;
        const std::span<const Record<T>> rec(records_.data() + record_begin_[o], records_.data() + record_end_[o]);
        T rest[3] = {bg[0], bg[1], bg[2]};
        const T u = T(px) + T(0.5), v = T(py) + T(0.5);
        for (auto it = rec.rbegin(); it != rec.rend(); ++it) {
          const Record<T>& r = *it;
          const Projected<T>& p = proj_[r.c.splat];
          const int32_t s = r.c.splat;
          T d_alpha = 0;
          for (int c = 0; c < 3; ++c) {
            g_c[s * 3 + c] += r.alpha * r.trans * dc[c];
            d_alpha += r.trans * (p.color[c] - rest[c]) * dc[c];
            rest[c] = r.alpha * p.color[c] + (T(1) - r.alpha) * rest[c];
          }
          if (r.c.clamped) continue;
          g_o[s] += d_alpha * r.g;
          const T d_power = d_alpha * p.opacity * r.g;
          const T dx = u - p.mean[0], dy = v - p.mean[1];
          // power = -1/2 δᵀ A δ with δ = pixel - mean
          g_conic[s * 3 + 0] += T(-0.5) * dx * dx * d_power;
          g_conic[s * 3 + 1] += T(-0.5) * dx * dy * d_power;  // each off-diagonal entry
          g_conic[s * 3 + 2] += T(-0.5) * dy * dy * d_power;
          g_mean[s * 2 + 0] += (p.conic(0, 0) * dx + p.conic(0, 1) * dy) * d_power;
          g_mean[s * 2 + 1] += (p.conic(0, 1) * dx + p.conic(1, 1) * dy) * d_power;
        }
      }
    }

    *g_pos = Tensor<T>({n, 3});
    *g_rot = Tensor<T>({n, 4});
    *g_scale = Tensor<T>({n, 3});
    *g_color = Tensor<T>({n, layout_.color_channels()});
    *g_opacity = Tensor<T>({n, layout_.opacity_coeffs()});
    const CameraIntrinsics& k = target_.camera.intrinsics;
    const T fx = T(k.fx), fy = T(k.fy);
    const M3<T> w = target_.camera.pose.rotation.template cast<T>();
    const int kc = layout_.color_coeffs(), ko = layout_.opacity_coeffs();
    const int max_degree = std::max(layout_.color_degree, layout_.opacity_degree);
    std::vector<T> basis(sh_coeff_count(max_degree)), jac(3 * sh_coeff_count(max_degree));

    for (int64_t s = 0; s < n; ++s) {
      const Projected<T>& p = proj_[s];
      if (!p.visible) continue;

      // Color and opacity through the SH basis.
      sh_basis_unchecked(p.src_dir[0], p.src_dir[1], p.src_dir[2], max_degree, basis.data());
      sh_basis_jacobian(p.src_dir[0], p.src_dir[1], p.src_dir[2], max_degree, jac.data());
      V3<T> g_src = V3<T>::Zero();
      const T* coef = color_sh_.data() + s * layout_.color_channels();
      for (int i = 0; i < kc; ++i) {
        T g_basis = 0;
        for (int c = 0; c < 3; ++c) {
          (*g_color)[s * layout_.color_channels() + i * 3 + c] = basis[i] * g_c[s * 3 + c];
          g_basis += coef[i * 3 + c] * g_c[s * 3 + c];
        }
        for (int a = 0; a < 3; ++a) g_src[a] += g_basis * jac[i * 3 + a];
      }
      const T g_logit = g_o[s] * p.opacity * (T(1) - p.opacity);
      const T* sig = opacity_sh_.data() + s * ko;
      for (int i = 0; i < ko; ++i) {
        (*g_opacity)[s * ko + i] = basis[i] * g_logit;
        for (int a = 0; a < 3; ++a) g_src[a] += sig[i] * g_logit * jac[i * 3 + a];
      }
      const M3<T> r_src = source_rotation_matrix(s);
      const V3<T> g_dir = r_src.transpose() * g_src;
      // view_dir = (center - position) / |center - position|
      const V3<T> g_u = (g_dir - p.view_dir * p.view_dir.dot(g_dir)) / p.dist;
      V3<T> g_p = -g_u;

      // Conic -> 2-D covariance -> world covariance and Jacobian.
      M2<T> g_a;
      g_a << g_conic[s * 3], g_conic[s * 3 + 1], g_conic[s * 3 + 1], g_conic[s * 3 + 2];
      const M2<T> g_cov = -p.conic * g_a * p.conic;
      const M3<T> g_sigma = p.jw.transpose() * g_cov * p.jw;
      const M23<T> g_jw = T(2) * g_cov * p.jw * p.sigma;
      const M23<T> g_j = g_jw * w.transpose();
      const T x = p.pc[0], y = p.pc[1], z = p.pc[2];
      const T iz = T(1) / z, iz2 = iz * iz, iz3 = iz2 * iz;
      V3<T> g_pc;
      g_pc[0] = -fx * iz2 * g_j(0, 2);
      g_pc[1] = -fy * iz2 * g_j(1, 2);
      g_pc[2] = -fx * iz2 * g_j(0, 0) + T(2) * fx * x * iz3 * g_j(0, 2) - fy * iz2 * g_j(1, 1) +
                T(2) * fy * y * iz3 * g_j(1, 2);
      // mean = (fx x / z + cx, fy y / z + cy)
      g_pc[0] += fx * iz * g_mean[s * 2];
      g_pc[1] += fy * iz * g_mean[s * 2 + 1];
      g_pc[2] += -fx * x * iz2 * g_mean[s * 2] - fy * y * iz2 * g_mean[s * 2 + 1];
      g_p += w.transpose() * g_pc;
      for (int a = 0; a < 3; ++a) (*g_pos)[s * 3 + a] = g_p[a];

      // sigma = (R S)(R S)ᵀ
      const M3<T> m = p.rot * p.scale.asDiagonal();
      const M3<T> g_m = T(2) * g_sigma * m;
      M3<T> g_r;
      for (int c = 0; c < 3; ++c) {
        g_r.col(c) = g_m.col(c) * p.scale[c];
        (*g_scale)[s * 3 + c] = g_m.col(c).dot(p.rot.col(c));
      }
      const auto g_qn = rotation_matrix_vjp(p.qn[0], p.qn[1], p.qn[2], p.qn[3], g_r);
      const T dot = p.qn[0] * g_qn[0] + p.qn[1] * g_qn[1] + p.qn[2] * g_qn[2] + p.qn[3] * g_qn[3];
      for (int c = 0; c < 4; ++c) (*g_rot)[s * 4 + c] = (g_qn[c] - p.qn[c] * dot) / p.qnorm;
    }
  }

  const Tensor<T>& raw_color() const { return raw_color_; }
  const RenderStats& stats() const { return stats_; }

 private:
  M3<T> source_rotation_matrix(int64_t s) const {
    const T* q = source_rotation_.data() + s * 4;
    const T norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    return rotation_matrix(q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm);
  }

  void project_all() {
    const int64_t n = positions_.rows();
    proj_.assign(n, {});
    const CameraIntrinsics& k = target_.camera.intrinsics;
    const T fx = T(k.fx), fy = T(k.fy), cx = T(k.cx), cy = T(k.cy);
    const M3<T> w = target_.camera.pose.rotation.template cast<T>();
    const V3<T> t = target_.camera.pose.translation.template cast<T>();
    const V3<T> center = target_.camera.pose.center().template cast<T>();
    const int kc = layout_.color_coeffs(), ko = layout_.opacity_coeffs();
    const int max_degree = std::max(layout_.color_degree, layout_.opacity_degree);
    std::vector<T> basis(sh_coeff_count(max_degree));
    const T blur = T(settings_.blur);

    for (int64_t s = 0; s < n; ++s) {
      Projected<T>& p = proj_[s];
      const V3<T> pos(positions_[s * 3], positions_[s * 3 + 1], positions_[s * 3 + 2]);
      p.pc = w * pos + t;
      p.depth = p.pc[2];
      if (!(p.depth > T(settings_.near_plane))) {
        ++stats_.culled;
        continue;
      }
      const T* q = rotations_.data() + s * 4;
      p.qnorm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
      for (int c = 0; c < 4; ++c) p.qn[c] = q[c] / p.qnorm;
      p.rot = rotation_matrix(p.qn[0], p.qn[1], p.qn[2], p.qn[3]);
      p.scale = V3<T>(scales_[s * 3], scales_[s * 3 + 1], scales_[s * 3 + 2]);
      const M3<T> m = p.rot * p.scale.asDiagonal();
      p.sigma = m * m.transpose();
      const T x = p.pc[0], y = p.pc[1], z = p.pc[2];
      M23<T> j;
      j << fx / z, 0, -fx * x / (z * z), 0, fy / z, -fy * y / (z * z);
      p.jw = j * w;
      M2<T> cov = p.jw * p.sigma * p.jw.transpose();
      cov(0, 0) += blur;
      cov(1, 1) += blur;
      cov(0, 1) = cov(1, 0) = T(0.5) * (cov(0, 1) + cov(1, 0));
      const T det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
      if (!(det > 0) || !std::isfinite(det)) {
        ++stats_.degenerate;
        continue;
      }
      p.conic << cov(1, 1) / det, -cov(0, 1) / det, -cov(0, 1) / det, cov(0, 0) / det;
      p.mean[0] = fx * x / z + cx;
      p.mean[1] = fy * y / z + cy;

      const V3<T> u = center - pos;
      p.dist = u.norm();
      p.view_dir = p.dist > T(0) ? V3<T>(u / p.dist) : V3<T>(0, 0, 1);
      if (!(p.dist > T(0))) p.dist = T(1);
      p.src_dir = source_rotation_matrix(s) * p.view_dir;
      sh_basis_unchecked(p.src_dir[0], p.src_dir[1], p.src_dir[2], max_degree, basis.data());
      const T* coef = color_sh_.data() + s * layout_.color_channels();
      for (int c = 0; c < 3; ++c) {
        T v = 0;
        for (int i = 0; i < kc; ++i) v += basis[i] * coef[i * 3 + c];
        p.color[c] = v;
      }
      T logit = 0;
      for (int i = 0; i < ko; ++i) logit += basis[i] * opacity_sh_[s * ko + i];
      p.opacity = T(1) / (T(1) + std::exp(-logit));

      // Pixels with o * g >= alpha_min satisfy δᵀ A δ <= 2 ln(o / alpha_min).
      // Without a contribution floor every pixel is covered.
      const double bound = settings_.alpha_min > 0 ? 2.0 * std::log(double(p.opacity) / settings_.alpha_min)
                                                   : std::numeric_limits<double>::infinity();
      if (bound < 0 || std::isnan(bound)) continue;
      const double big = 4.0 * (width_ + height_);
      const double rx = std::isfinite(bound) ? std::sqrt(bound * double(cov(0, 0))) + 1e-3 : big;
      const double ry = std::isfinite(bound) ? std::sqrt(bound * double(cov(1, 1))) + 1e-3 : big;
      const double mx = double(p.mean[0]), my = double(p.mean[1]);
      p.x0 = static_cast<int>(std::max(0.0, std::ceil(mx - rx - 0.5)));
      p.x1 = static_cast<int>(std::min(double(width_ - 1), std::floor(mx + rx - 0.5)));
      p.y0 = static_cast<int>(std::max(0.0, std::ceil(my - ry - 0.5)));
      p.y1 = static_cast<int>(std::min(double(height_ - 1), std::floor(my + ry - 0.5)));
      p.visible = p.x0 <= p.x1 && p.y0 <= p.y1;
    }
  }

  void bin() {
    const int ts = settings_.tile_size;
    tiles_x_ = (width_ + ts - 1) / ts;
    tiles_y_ = (height_ + ts - 1) / ts;
    tiles_.assign(static_cast<size_t>(tiles_x_) * tiles_y_, {});
    std::vector<int32_t> order;
    order.reserve(proj_.size());
    for (size_t s = 0; s < proj_.size(); ++s) {
      if (proj_[s].visible) order.push_back(static_cast<int32_t>(s));
    }
    std::stable_sort(order.begin(), order.end(),
                     [this](int32_t a, int32_t b) { return proj_[a].depth < proj_[b].depth; });
    for (int32_t s : order) {
      const Projected<T>& p = proj_[s];
      for (int ty = p.y0 / ts; ty <= p.y1 / ts; ++ty) {
        for (int tx = p.x0 / ts; tx <= p.x1 / ts; ++tx) tiles_[ty * tiles_x_ + tx].push_back(s);
      }
    }
  }

  Tensor<T> positions_, rotations_, scales_, color_sh_, opacity_sh_, source_rotation_;
  SplatLayout layout_;
  RenderTarget target_;
  RenderSettings settings_;
  int width_ = 0, height_ = 0, tiles_x_ = 0, tiles_y_ = 0;
  std::vector<Projected<T>> proj_;
  std::vector<std::vector<int32_t>> tiles_;
  std::vector<Record<T>> records_;  // per pixel, contiguous in compositing order
  std::vector<int64_t> record_begin_, record_end_;
  Tensor<T> raw_color_;
  RenderStats stats_;
};

}  // namespace

std::optional<ProjectedGaussian> project_gaussian(const Vec3& position, const UnitQuaternion& rotation,
                                                  const Vec3& scale, const Camera& camera,
                                                  const RenderSettings& settings) {
  settings.validate();
  const Vec3 pc = camera.pose.apply(position);
  if (!(pc.z() > settings.near_plane)) return std::nullopt;
  const CameraIntrinsics& k = camera.intrinsics;
  const Mat3 m = rotation_from_quat(rotation) * scale.asDiagonal();
  const Mat3 sigma = m * m.transpose();
  Eigen::Matrix<double, 2, 3> j;
  j << k.fx / pc.z(), 0, -k.fx * pc.x() / (pc.z() * pc.z()), 0, k.fy / pc.z(), -k.fy * pc.y() / (pc.z() * pc.z());
  const Eigen::Matrix<double, 2, 3> jw = j * camera.pose.rotation;
  ProjectedGaussian out;
  out.cov = jw * sigma * jw.transpose() + settings.blur * Eigen::Matrix2d::Identity();
  out.mean = {k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy};
  out.depth = pc.z();
  return out;
}

template <typename T>
Framebuffer<T> render(const GaussianSplatSet<T>& splats, const RenderTarget& target, const RenderSettings& settings) {
  LVT_CHECK(splats.frame == SplatFrame::kWorld, ErrorCode::kFrameMismatch, "rendering requires world-frame splats");
  const SplatLayout layout{splats.color_degree, splats.opacity_degree};
  Rasterizer<T> r(splats.positions, splats.rotations, splats.scales, splats.color_sh, splats.opacity_sh,
                  splats.source_rotation, layout, target, settings);
  return r.forward(false);
}

template <typename T>
ad::Var<T> render(const SplatVars<T>& splats, const SplatLayout& layout, const Tensor<T>& source_rotation,
                  const RenderTarget& target, const RenderSettings& settings, RenderStats* stats) {
  auto r = std::make_shared<Rasterizer<T>>(splats.positions.value(), splats.rotations.value(), splats.scales.value(),
                                           splats.color_sh.value(), splats.opacity_sh.value(), source_rotation,
                                           layout, target, settings);
  Framebuffer<T> fb = r->forward(true);
  if (stats) {
    stats->culled += fb.stats.culled;
    stats->degenerate += fb.stats.degenerate;
    stats->contributions += fb.stats.contributions;
  }
  const SplatVars<T> in = splats;
  return splats.positions.tape().record(
      std::move(fb.color), {in.positions, in.rotations, in.scales, in.color_sh, in.opacity_sh},
      [r, in](const Tensor<T>& g) {
        Tensor<T> gp, gr, gs, gc, go;
        r->backward(g, &gp, &gr, &gs, &gc, &go);
        ad::Tape<T>& tape = in.positions.tape();
        tape.accumulate(in.positions, gp);
        tape.accumulate(in.rotations, gr);
        tape.accumulate(in.scales, gs);
        tape.accumulate(in.color_sh, gc);
        tape.accumulate(in.opacity_sh, go);
      });
}

#define LVT_INSTANTIATE_RENDER(T)                                                                                \
  template Framebuffer<T> render(const GaussianSplatSet<T>&, const RenderTarget&, const RenderSettings&);      \
  template ad::Var<T> render(const SplatVars<T>&, const SplatLayout&, const Tensor<T>&, const RenderTarget&,   \
                             const RenderSettings&, RenderStats*);

LVT_INSTANTIATE_RENDER(float)
LVT_INSTANTIATE_RENDER(double)

}  // namespace lvt
