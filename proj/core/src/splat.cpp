// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/splat.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace lvt {

namespace {

template <typename T>
T canonical_sign(T w, T x, T y, T z) {
  if (w != 0) return w < 0 ? T(-1) : T(1);
  if (x != 0) return x < 0 ? T(-1) : T(1);
  if (y != 0) return y < 0 ? T(-1) : T(1);
  return z < 0 ? T(-1) : T(1);
}

// Row-major 4x4 matrix of q -> a ⊗ q.
Eigen::Matrix4d left_multiplication(const UnitQuaternion& a) {
  Eigen::Matrix4d m;
  m << a.w, -a.x, -a.y, -a.z,  //
      a.x, a.w, -a.z, a.y,     //
      a.y, a.z, a.w, -a.x,     //
      a.z, -a.y, a.x, a.w;
  return m;
}

void check_source_views(std::span<const int> source_view, int64_t n, size_t cameras) {
  LVT_CHECK(static_cast<int64_t>(source_view.size()) == n, ErrorCode::kShapeMismatch,
            "one source view per splat is required");
  for (int v : source_view) {
    LVT_CHECK(v >= 0 && static_cast<size_t>(v) < cameras, ErrorCode::kInvalidArgument,
              "source view " + std::to_string(v) + " has no camera");
  }
}

}  // namespace

void DecodeBounds::validate() const {
  LVT_CHECK(near > 0 && far > near, ErrorCode::kInvalidArgument, "decode bounds need 0 < near < far");
  LVT_CHECK(scale_min > 0 && scale_max >= scale_min, ErrorCode::kInvalidArgument,
            "decode bounds need 0 < scale_min <= scale_max");
}

template <typename T>
GaussianSplatSet<T> GaussianSplatSet<T>::empty(int color_degree, int opacity_degree) {
  GaussianSplatSet out;
  out.color_degree = color_degree;
  out.opacity_degree = opacity_degree;
  out.positions = Tensor<T>({0, 3});
  out.rotations = Tensor<T>({0, 4});
  out.scales = Tensor<T>({0, 3});
  out.color_sh = Tensor<T>({0, 3 * sh_coeff_count(color_degree)});
  out.opacity_sh = Tensor<T>({0, sh_coeff_count(opacity_degree)});
  out.source_rotation = Tensor<T>({0, 4});
  return out;
}

template <typename T>
void GaussianSplatSet<T>::validate() const {
  LVT_CHECK(color_degree >= 0 && color_degree <= kMaxShDegree && opacity_degree >= 0 &&
                opacity_degree <= kMaxShDegree,
            ErrorCode::kInvalidArgument, "SH degrees must lie in [0, 3]");
  const int64_t n = size();
  auto check = [n](const Tensor<T>& t, int64_t cols, const char* name) {
    LVT_CHECK(t.rank() == 2 && t.rows() == n && t.cols() == cols, ErrorCode::kShapeMismatch,
              std::string(name) + " has shape " + shape_string(t.shape()));
  };
  check(positions, 3, "positions");
  check(rotations, 4, "rotations");
  check(scales, 3, "scales");
  check(color_sh, 3 * sh_coeff_count(color_degree), "color_sh");
  check(opacity_sh, sh_coeff_count(opacity_degree), "opacity_sh");
  check(source_rotation, 4, "source_rotation");
  LVT_CHECK(static_cast<int64_t>(source_view.size()) == n, ErrorCode::kShapeMismatch, "source_view length");
  for (const Tensor<T>* t : {&positions, &rotations, &scales, &color_sh, &opacity_sh}) {
    for (T v : t->span()) LVT_CHECK(std::isfinite(v), ErrorCode::kNonFinite, "splat parameters must be finite");
  }
  for (T v : scales.span()) LVT_CHECK(v > 0, ErrorCode::kInvalidArgument, "splat scales must be positive");
}

template <typename T>
GaussianSplatSet<T> GaussianSplatSet<T>::subset(std::span<const int64_t> indices) const {
  GaussianSplatSet out = empty(color_degree, opacity_degree);
  out.frame = frame;
  const int64_t m = static_cast<int64_t>(indices.size());
  auto take = [&](const Tensor<T>& src, Tensor<T>& dst) {
    const int64_t c = src.cols();
    dst = Tensor<T>({m, c});
    for (int64_t i = 0; i < m; ++i) {
      LVT_CHECK(indices[i] >= 0 && indices[i] < size(), ErrorCode::kInvalidArgument, "subset index out of range");
      std::copy_n(src.data() + indices[i] * c, c, dst.data() + i * c);
    }
  };
  take(positions, out.positions);
  take(rotations, out.rotations);
  take(scales, out.scales);
  take(color_sh, out.color_sh);
  take(opacity_sh, out.opacity_sh);
  take(source_rotation, out.source_rotation);
  out.source_view.reserve(m);
  for (int64_t i : indices) out.source_view.push_back(source_view[i]);
  return out;
}

std::vector<int> pixel_source_views(int views, int height, int width) {
  std::vector<int> out(static_cast<size_t>(views) * height * width);
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(i / (static_cast<size_t>(height) * width));
  return out;
}

template <typename T>
Tensor<T> source_rotation_table(std::span<const Camera> cameras, std::span<const int> source_view) {
  check_source_views(source_view, static_cast<int64_t>(source_view.size()), cameras.size());
  std::vector<UnitQuaternion> quats;
  quats.reserve(cameras.size());
  for (const Camera& c : cameras) quats.push_back(quat_from_rotation(c.pose.rotation));
  Tensor<T> out({static_cast<int64_t>(source_view.size()), 4});
  for (size_t i = 0; i < source_view.size(); ++i) {
    const UnitQuaternion& q = quats[source_view[i]];
    T* dst = out.data() + i * 4;
    dst[0] = T(q.w);
    dst[1] = T(q.x);
    dst[2] = T(q.y);
    dst[3] = T(q.z);
  }
  return out;
}

template <typename T>
SplatVars<T> decode_pixel_splats(const ad::Var<T>& raw, std::span<const RayMap> raymaps, const SplatLayout& layout,
                                 const DecodeBounds& bounds) {
  bounds.validate();
  const Shape& s = raw.shape();
  LVT_CHECK(s.size() == 4 && s[3] == layout.channels(), ErrorCode::kShapeMismatch,
            "raw splat map " + shape_string(s) + " does not match layout with " +
                std::to_string(layout.channels()) + " channels");
  LVT_CHECK(static_cast<int64_t>(raymaps.size()) == s[0], ErrorCode::kShapeMismatch, "one ray map per view");
  const int64_t height = s[1], width = s[2], channels = s[3];
  const int64_t n = s[0] * height * width;
  for (T v : raw.value().span()) LVT_CHECK(std::isfinite(v), ErrorCode::kNonFinite, "raw splat channel is not finite");

  auto rays = std::make_shared<std::vector<T>>(n * 3);
  for (int64_t v = 0; v < s[0]; ++v) {
    const RayMap& rm = raymaps[v];
    LVT_CHECK(rm.height == height && rm.width == width, ErrorCode::kShapeMismatch, "ray map size mismatch");
    for (int64_t i = 0; i < height * width * 3; ++i) (*rays)[v * height * width * 3 + i] = T(rm.directions[i]);
  }

  ad::Tape<T>& tape = raw.tape();
  const T* x = raw.value().data();
  const T log_near = T(std::log(bounds.near));
  const T log_range = T(std::log(bounds.far) - std::log(bounds.near));

  // depth along the pixel ray
  Tensor<T> pos({n, 3});
  auto depth_slope = std::make_shared<std::vector<T>>(n);
  for (int64_t i = 0; i < n; ++i) {
    const T sg = T(1) / (T(1) + std::exp(-x[i * channels + SplatLayout::kDepth]));
    const T t = std::exp(log_near + sg * log_range);
    (*depth_slope)[i] = t * log_range * sg * (T(1) - sg);
    for (int c = 0; c < 3; ++c) pos[i * 3 + c] = t * (*rays)[i * 3 + c];
  }
  SplatVars<T> out;
  out.positions = tape.record(std::move(pos), {raw}, [raw, rays, depth_slope, n, channels](const Tensor<T>& g) {
    Tensor<T>& gr = raw.tape().grad_buffer(raw);
    for (int64_t i = 0; i < n; ++i) {
      const T* r = rays->data() + i * 3;
      const T* gi = g.data() + i * 3;
      gr[i * channels + SplatLayout::kDepth] += (*depth_slope)[i] * (gi[0] * r[0] + gi[1] * r[1] + gi[2] * r[2]);
    }
  });

  // clamped exponential scale; zero gradient where the clamp is active
  Tensor<T> scl({n, 3});
  const T smin = T(bounds.scale_min), smax = T(bounds.scale_max);
  for (int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) scl[i * 3 + c] = std::clamp(std::exp(x[i * channels + SplatLayout::kScale + c]), smin, smax);
  }
  out.scales = tape.record(scl, {raw}, [raw, scl, n, channels, smin, smax](const Tensor<T>& g) {
    Tensor<T>& gr = raw.tape().grad_buffer(raw);
    for (int64_t i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) {
        const T v = scl[i * 3 + c];
        if (v > smin && v < smax) gr[i * channels + SplatLayout::kScale + c] += g[i * 3 + c] * v;
      }
    }
  });

  // (w + 1, x, y, z) normalized, then sign-canonicalized
  Tensor<T> rot({n, 4});
  auto inv_norm = std::make_shared<std::vector<T>>(n);
  for (int64_t i = 0; i < n; ++i) {
    const T* q = x + i * channels + SplatLayout::kRotation;
    const T v[4] = {q[0] + T(1), q[1], q[2], q[3]};
    const T norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
    T* dst = rot.data() + i * 4;
    if (!(norm > T(1e-12))) {
      (*inv_norm)[i] = 0;
      dst[0] = 1;
      dst[1] = dst[2] = dst[3] = 0;
      continue;
    }
    const T sg = canonical_sign(v[0], v[1], v[2], v[3]);
    (*inv_norm)[i] = sg / norm;
    for (int c = 0; c < 4; ++c) dst[c] = v[c] * sg / norm;
  }
  out.rotations = tape.record(rot, {raw}, [raw, rot, inv_norm, n, channels](const Tensor<T>& g) {
    Tensor<T>& gr = raw.tape().grad_buffer(raw);
    for (int64_t i = 0; i < n; ++i) {
      const T k = (*inv_norm)[i];
      if (k == 0) continue;
      const T* q = rot.data() + i * 4;
      const T* gi = g.data() + i * 4;
      const T dot = q[0] * gi[0] + q[1] * gi[1] + q[2] * gi[2] + q[3] * gi[3];
      for (int c = 0; c < 4; ++c) gr[i * channels + SplatLayout::kRotation + c] += k * (gi[c] - q[c] * dot);
    }
  });

  const ad::Var<T> flat = ad::reshape(raw, {n, channels});
  out.color_sh = ad::slice(flat, 1, SplatLayout::kColor, layout.opacity_offset());
  out.opacity_sh = ad::slice(flat, 1, layout.opacity_offset(), channels);
  return out;
}

template <typename T>
GaussianSplatSet<T> to_splat_set(const SplatVars<T>& vars, SplatFrame frame, const SplatLayout& layout,
                                 std::vector<int> source_view, Tensor<T> source_rotation) {
  GaussianSplatSet<T> out;
  out.frame = frame;
  out.color_degree = layout.color_degree;
  out.opacity_degree = layout.opacity_degree;
  out.positions = vars.positions.value();
  out.rotations = vars.rotations.value();
  out.scales = vars.scales.value();
  out.color_sh = vars.color_sh.value();
  out.opacity_sh = vars.opacity_sh.value();
  out.source_view = std::move(source_view);
  out.source_rotation = std::move(source_rotation);
  return out;
}

template <typename T>
GaussianSplatSet<T> decode_pixel_splats(const Tensor<T>& raw, std::span<const RayMap> raymaps,
                                        const SplatLayout& layout, const DecodeBounds& bounds) {
  ad::Tape<T> tape;
  const SplatVars<T> vars = decode_pixel_splats(tape.constant(raw), raymaps, layout, bounds);
  const int64_t n = vars.positions.value().rows();
  Tensor<T> identity({n, 4});
  for (int64_t i = 0; i < n; ++i) identity[i * 4] = T(1);
  return to_splat_set(vars, SplatFrame::kLocal, layout,
                      pixel_source_views(static_cast<int>(raw.dim(0)), static_cast<int>(raw.dim(1)),
                                         static_cast<int>(raw.dim(2))),
                      std::move(identity));
}

template <typename T>
SplatVars<T> splats_to_world(const SplatVars<T>& local, std::span<const Camera> cameras,
                             std::span<const int> source_view) {
  const int64_t n = local.positions.value().rows();
  check_source_views(source_view, n, cameras.size());
  ad::Tape<T>& tape = local.positions.tape();

  // Per-camera transforms in working precision.
  const size_t nc = cameras.size();
  auto rot = std::make_shared<std::vector<T>>(nc * 9);    // R_j row-major
  auto lmul = std::make_shared<std::vector<T>>(nc * 16);  // q -> quat(R_jᵀ) ⊗ q
  std::vector<T> trans(nc * 3);
  for (size_t c = 0; c < nc; ++c) {
    const RigidPose& p = cameras[c].pose;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) (*rot)[c * 9 + r * 3 + k] = T(p.rotation(r, k));
      trans[c * 3 + r] = T(p.translation[r]);
    }
    const Eigen::Matrix4d m = left_multiplication(quat_from_rotation(p.rotation.transpose()));
    for (int r = 0; r < 4; ++r) {
      for (int k = 0; k < 4; ++k) (*lmul)[c * 16 + r * 4 + k] = T(m(r, k));
    }
  }
  auto views = std::make_shared<std::vector<int>>(source_view.begin(), source_view.end());

  Tensor<T> pos({n, 3});
  const T* p = local.positions.value().data();
  for (int64_t i = 0; i < n; ++i) {
    const int c = (*views)[i];
    const T* r = rot->data() + c * 9;
    const T d[3] = {p[i * 3] - trans[c * 3], p[i * 3 + 1] - trans[c * 3 + 1], p[i * 3 + 2] - trans[c * 3 + 2]};
    for (int k = 0; k < 3; ++k) pos[i * 3 + k] = r[k] * d[0] + r[3 + k] * d[1] + r[6 + k] * d[2];
  }
  const ad::Var<T> lp = local.positions;
  SplatVars<T> out = local;
  out.positions = tape.record(std::move(pos), {lp}, [lp, rot, views, n](const Tensor<T>& g) {
    Tensor<T>& gp = lp.tape().grad_buffer(lp);
    for (int64_t i = 0; i < n; ++i) {
      const T* r = rot->data() + (*views)[i] * 9;
      const T* gi = g.data() + i * 3;
      for (int k = 0; k < 3; ++k) gp[i * 3 + k] += r[k * 3] * gi[0] + r[k * 3 + 1] * gi[1] + r[k * 3 + 2] * gi[2];
    }
  });

  Tensor<T> q({n, 4});
  auto signs = std::make_shared<std::vector<T>>(n);
  const T* ql = local.rotations.value().data();
  for (int64_t i = 0; i < n; ++i) {
    const T* m = lmul->data() + (*views)[i] * 16;
    T v[4];
    for (int r = 0; r < 4; ++r) {
      v[r] = m[r * 4] * ql[i * 4] + m[r * 4 + 1] * ql[i * 4 + 1] + m[r * 4 + 2] * ql[i * 4 + 2] +
             m[r * 4 + 3] * ql[i * 4 + 3];
    }
    const T sg = canonical_sign(v[0], v[1], v[2], v[3]);
    (*signs)[i] = sg;
    for (int r = 0; r < 4; ++r) q[i * 4 + r] = sg * v[r];
  }
  const ad::Var<T> lq = local.rotations;
  out.rotations = tape.record(std::move(q), {lq}, [lq, lmul, views, signs, n](const Tensor<T>& g) {
    Tensor<T>& gq = lq.tape().grad_buffer(lq);
    for (int64_t i = 0; i < n; ++i) {
      const T* m = lmul->data() + (*views)[i] * 16;
      const T sg = (*signs)[i];
      const T* gi = g.data() + i * 4;
      for (int k = 0; k < 4; ++k) {
        gq[i * 4 + k] += sg * (m[k] * gi[0] + m[4 + k] * gi[1] + m[8 + k] * gi[2] + m[12 + k] * gi[3]);
      }
    }
  });
  return out;
}

template <typename T>
GaussianSplatSet<T> splats_to_world(const GaussianSplatSet<T>& local, std::span<const Camera> cameras) {
  LVT_CHECK(local.frame == SplatFrame::kLocal, ErrorCode::kFrameMismatch, "splats are already in world frame");
  local.validate();
  ad::Tape<T> tape;
  SplatVars<T> vars{tape.constant(local.positions), tape.constant(local.rotations), tape.constant(local.scales),
                    tape.constant(local.color_sh), tape.constant(local.opacity_sh)};
  const SplatVars<T> world = splats_to_world(vars, cameras, local.source_view);
  const SplatLayout layout{local.color_degree, local.opacity_degree};
  return to_splat_set(world, SplatFrame::kWorld, layout, local.source_view,
                      source_rotation_table<T>(cameras, local.source_view));
}

template <typename T>
GaussianSplatSet<T> splats_to_local(const GaussianSplatSet<T>& world, std::span<const Camera> cameras) {
  LVT_CHECK(world.frame == SplatFrame::kWorld, ErrorCode::kFrameMismatch, "splats are already in local frames");
  world.validate();
  const int64_t n = world.size();
  check_source_views(world.source_view, n, cameras.size());
  GaussianSplatSet<T> out = world;
  out.frame = SplatFrame::kLocal;
  for (int64_t i = 0; i < n; ++i) {
    const RigidPose& pose = cameras[world.source_view[i]].pose;
    const T* p = world.positions.data() + i * 3;
    const Vec3 pl = pose.apply(Vec3(double(p[0]), double(p[1]), double(p[2])));
    for (int k = 0; k < 3; ++k) out.positions[i * 3 + k] = T(pl[k]);
    const T* q = world.rotations.data() + i * 4;
    const UnitQuaternion ql = canonicalize(quat_multiply(
        quat_from_rotation(pose.rotation), UnitQuaternion{double(q[0]), double(q[1]), double(q[2]), double(q[3])}));
    out.rotations[i * 4] = T(ql.w);
    out.rotations[i * 4 + 1] = T(ql.x);
    out.rotations[i * 4 + 2] = T(ql.y);
    out.rotations[i * 4 + 3] = T(ql.z);
    out.source_rotation[i * 4] = T(1);
    for (int k = 1; k < 4; ++k) out.source_rotation[i * 4 + k] = T(0);
  }
  return out;
}

#define LVT_INSTANTIATE_SPLAT(T)                                                                                  \
  template struct GaussianSplatSet<T>;                                                                          \
  template Tensor<T> source_rotation_table<T>(std::span<const Camera>, std::span<const int>);                   \
  template SplatVars<T> decode_pixel_splats(const ad::Var<T>&, std::span<const RayMap>, const SplatLayout&,      \
                                            const DecodeBounds&);                                               \
  template GaussianSplatSet<T> decode_pixel_splats(const Tensor<T>&, std::span<const RayMap>, const SplatLayout&, \
                                                   const DecodeBounds&);                                        \
  template GaussianSplatSet<T> to_splat_set(const SplatVars<T>&, SplatFrame, const SplatLayout&,                \
                                            std::vector<int>, Tensor<T>);                                       \
  template SplatVars<T> splats_to_world(const SplatVars<T>&, std::span<const Camera>, std::span<const int>);    \
  template GaussianSplatSet<T> splats_to_world(const GaussianSplatSet<T>&, std::span<const Camera>);            \
  template GaussianSplatSet<T> splats_to_local(const GaussianSplatSet<T>&, std::span<const Camera>);

LVT_INSTANTIATE_SPLAT(float)
LVT_INSTANTIATE_SPLAT(double)

}  // namespace lvt
