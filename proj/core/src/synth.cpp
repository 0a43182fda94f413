// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "lvt/ply.hpp"
#include "lvt/renderer.hpp"

namespace lvt {

namespace fs = std::filesystem;

void SynthConfig::validate() const {
  LVT_CHECK(n_splats >= 1, ErrorCode::kInvalidArgument, "at least one splat is required");
  LVT_CHECK(n_views >= 2, ErrorCode::kInvalidArgument, "at least two views are required");
  LVT_CHECK(width >= 1 && height >= 1, ErrorCode::kInvalidArgument, "image size must be positive");
  LVT_CHECK(fov_degrees > 0 && fov_degrees < 180, ErrorCode::kInvalidArgument, "field of view must lie in (0, 180)");
  LVT_CHECK(radius > box_half * 2 && box_half > 0, ErrorCode::kInvalidArgument, "cameras must sit outside the box");
  LVT_CHECK(log_scale_min <= log_scale_max, ErrorCode::kInvalidArgument, "log-scale range is inverted");
  LVT_CHECK(color_degree >= 0 && color_degree <= kMaxShDegree && opacity_degree >= 0 &&
                opacity_degree <= kMaxShDegree,
            ErrorCode::kInvalidArgument, "SH degrees must lie in [0, 3]");
}

namespace {

RigidPose look_at(const Vec3& center, const Vec3& target) {
  const Vec3 forward = (target - center).normalized();
  const Vec3 right = forward.cross(Vec3::UnitY()).normalized();
  const Vec3 down = forward.cross(right);
  RigidPose pose;
  pose.rotation.row(0) = right;
  pose.rotation.row(1) = down;
  pose.rotation.row(2) = forward;
  pose.translation = -pose.rotation * center;
  return pose;
}

// A float scale that survives the ln / exp round trip of the PLY format.
float stable_scale(float s) {
  for (int i = 0; i < 8; ++i) {
    const float next = std::exp(std::log(s));
    if (next == s) break;
    s = next;
  }
  return s;
}

}  // namespace

SyntheticScene generate_synthetic_scene(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // Cameras on an arc around the origin.
  const double fx = 0.5 * cfg.width / std::tan(0.5 * cfg.fov_degrees * std::numbers::pi / 180.0);
  CameraIntrinsics k{fx, fx, 0.5 * cfg.width, 0.5 * cfg.height, cfg.width, cfg.height};
  std::vector<Camera> cameras;
  const double elevation = cfg.elevation_degrees * std::numbers::pi / 180.0;
  for (int i = 0; i < cfg.n_views; ++i) {
    const double phi =
        (-0.5 + static_cast<double>(i) / (cfg.n_views - 1)) * cfg.arc_degrees * std::numbers::pi / 180.0;
    Vec3 c = cfg.radius * Vec3(std::cos(elevation) * std::sin(phi), std::sin(elevation),
                               std::cos(elevation) * std::cos(phi));
    const Vec3 jitter(normal(rng), normal(rng), normal(rng));
    const Vec3 aim(normal(rng), normal(rng), normal(rng));
    c += cfg.jitter * jitter;
    cameras.push_back({k, look_at(c, 0.5 * cfg.jitter * aim), i});
  }

  // Ground-truth splats in world units.
  const int kc = sh_coeff_count(cfg.color_degree), ko = sh_coeff_count(cfg.opacity_degree);
  GaussianSplatSet<float> gt = GaussianSplatSet<float>::empty(cfg.color_degree, cfg.opacity_degree);
  gt.frame = SplatFrame::kWorld;
  const int64_t n = cfg.n_splats;
  gt.positions = Tensor<float>({n, 3});
  gt.rotations = Tensor<float>({n, 4});
  gt.scales = Tensor<float>({n, 3});
  gt.color_sh = Tensor<float>({n, 3 * kc});
  gt.opacity_sh = Tensor<float>({n, ko});
  gt.source_rotation = Tensor<float>({n, 4});
  gt.source_view.assign(static_cast<size_t>(n), 0);
  std::vector<double> log_scales(static_cast<size_t>(n) * 3);
  for (int64_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) gt.positions[i * 3 + a] = static_cast<float>(uniform(-cfg.box_half, cfg.box_half));
    for (int a = 0; a < 3; ++a) log_scales[i * 3 + a] = uniform(cfg.log_scale_min, cfg.log_scale_max);
    UnitQuaternion q{normal(rng), normal(rng), normal(rng), normal(rng)};
    const double qn = q.norm();
    q = canonicalize(UnitQuaternion{q.w / qn, q.x / qn, q.y / qn, q.z / qn});
    gt.rotations[i * 4] = static_cast<float>(q.w);
    gt.rotations[i * 4 + 1] = static_cast<float>(q.x);
    gt.rotations[i * 4 + 2] = static_cast<float>(q.y);
    gt.rotations[i * 4 + 3] = static_cast<float>(q.z);
    for (int ch = 0; ch < 3; ++ch) gt.color_sh[i * 3 * kc + ch] = static_cast<float>(uniform(0.15, 0.85) / kShC0);
    for (int j = 3; j < 3 * kc; ++j) gt.color_sh[i * 3 * kc + j] = static_cast<float>(uniform(-0.15, 0.15));
    gt.opacity_sh[i * ko] = static_cast<float>(uniform(1.0, 3.0) / kShC0);
    for (int j = 1; j < ko; ++j) gt.opacity_sh[i * ko + j] = static_cast<float>(uniform(-0.3, 0.3));
    gt.source_rotation[i * 4] = 1.0f;
  }

  // Normalize cameras and splats together.
  SyntheticScene scene;
  SceneManifest& m = scene.manifest;
  for (int i = 0; i < cfg.n_views; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03d.png", i);
    m.views.push_back({name, k.matrix(), cameras[i].pose.matrix()});
  }
  const Normalization norm = fit_normalization(m);
  apply_normalization(m, norm);
  for (int i = 0; i < cfg.n_views; ++i) cameras[i].pose = RigidPose::from_matrix(m.views[i].camera_from_world);
  for (int64_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      gt.positions[i * 3 + a] = static_cast<float>(norm.scale * gt.positions[i * 3 + a] + norm.translation[a]);
      const double ls = log_scales[i * 3 + a] + std::log(norm.scale);
      gt.scales[i * 3 + a] = stable_scale(std::exp(static_cast<float>(ls)));
    }
  }

  // Depth bounds enclosing every splat center from every view.
  double near = std::numeric_limits<double>::infinity(), far = 0;
  for (const Camera& c : cameras) {
    for (int64_t i = 0; i < n; ++i) {
      const Vec3 p(gt.positions[i * 3], gt.positions[i * 3 + 1], gt.positions[i * 3 + 2]);
      const double z = c.pose.apply(p).z();
      near = std::min(near, z);
      far = std::max(far, z);
    }
  }
  m.near = std::max(0.05, 0.5 * near);
  m.far = std::max(2.0 * far, m.near * 2);
  m.ground_truth = "ground_truth.ply";

  for (const Camera& c : cameras) {
    RenderTarget target{c, cfg.background};
    scene.images.push_back(render(gt, target).color);
  }
  scene.cameras = std::move(cameras);
  scene.ground_truth = std::move(gt);
  return scene;
}

void write_synthetic_scene(const SyntheticScene& scene, const std::string& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  LVT_CHECK(!ec, ErrorCode::kIo, "cannot create " + directory + ": " + ec.message());
  for (size_t i = 0; i < scene.images.size(); ++i) {
    write_png(resolve_path(directory, scene.manifest.views[i].image), scene.images[i]);
  }
  export_ply(scene.ground_truth, resolve_path(directory, *scene.manifest.ground_truth));
  save_manifest(scene.manifest, resolve_path(directory, "manifest.json"));
}

std::vector<int> select_input_views(int n_frames, std::span<const int> held_out, int stride) {
  LVT_CHECK(stride >= 1, ErrorCode::kInvalidArgument, "input stride must be positive");
  const std::set<int> skip(held_out.begin(), held_out.end());
  std::vector<int> remaining;
  for (int i = 0; i < n_frames; ++i) {
    if (!skip.contains(i)) remaining.push_back(i);
  }
  std::vector<int> out;
  for (size_t i = 0; i < remaining.size(); i += static_cast<size_t>(stride)) out.push_back(remaining[i]);
  return out;
}

Tensor<float> downsample_image(const Tensor<float>& image, int factor) {
  LVT_CHECK(image.rank() == 3 && image.dim(2) == 3, ErrorCode::kShapeMismatch, "expected an [H, W, 3] image");
  LVT_CHECK(factor >= 1 && image.dim(0) % factor == 0 && image.dim(1) % factor == 0, ErrorCode::kShapeMismatch,
            "downsample factor must divide the image size");
  if (factor == 1) return image;
  const int64_t h = image.dim(0) / factor, w = image.dim(1) / factor, src_w = image.dim(1);
  Tensor<float> out({h, w, 3});
  const float inv = 1.0f / static_cast<float>(factor * factor);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float s = 0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) s += image[((y * factor + dy) * src_w + x * factor + dx) * 3 + c];
        }
        out[(y * w + x) * 3 + c] = s * inv;
      }
    }
  }
  return out;
}

CameraIntrinsics downsample_intrinsics(const CameraIntrinsics& k, int factor) {
  LVT_CHECK(factor >= 1 && k.width % factor == 0 && k.height % factor == 0, ErrorCode::kShapeMismatch,
            "downsample factor must divide the image size");
  const double f = factor;
  return {k.fx / f, k.fy / f, k.cx / f, k.cy / f, k.width / factor, k.height / factor};
}

MixedResolutionSampler::MixedResolutionSampler(std::vector<ResolutionBucket> buckets, int input_stride,
                                               uint64_t seed)
    : buckets_(std::move(buckets)), input_stride_(input_stride), rng_(seed) {
  LVT_CHECK(!buckets_.empty(), ErrorCode::kInvalidArgument, "sampler needs at least one bucket");
  LVT_CHECK(input_stride_ >= 1, ErrorCode::kInvalidArgument, "input stride must be positive");
  for (const ResolutionBucket& b : buckets_) {
    LVT_CHECK(b.weight > 0 && b.downsample >= 1 && b.n_inputs >= 1 && b.n_targets >= 1,
              ErrorCode::kInvalidArgument, "invalid resolution bucket");
  }
}

SampleSpec MixedResolutionSampler::next(int n_frames, std::span<const int> excluded) {
  std::vector<double> weights;
  for (const ResolutionBucket& b : buckets_) weights.push_back(b.weight);
  std::discrete_distribution<size_t> pick(weights.begin(), weights.end());
  const ResolutionBucket& b = buckets_[pick(rng_)];
  const int span = (b.n_inputs - 1) * input_stride_ + 1;
  LVT_CHECK(span <= n_frames, ErrorCode::kInvalidArgument,
            "scene has " + std::to_string(n_frames) + " frames, bucket needs " + std::to_string(span));
  const std::set<int> skip(excluded.begin(), excluded.end());
  std::vector<int> starts;
  for (int start = 0; start + span <= n_frames; ++start) {
    bool clean = true;
    for (int i = 0; i < b.n_inputs && clean; ++i) clean = !skip.contains(start + i * input_stride_);
    if (clean) starts.push_back(start);
  }
  LVT_CHECK(!starts.empty(), ErrorCode::kInvalidArgument, "every input window contains an excluded frame");
  const int start = starts[std::uniform_int_distribution<size_t>(0, starts.size() - 1)(rng_)];
  SampleSpec out;
  out.downsample = b.downsample;
  for (int i = 0; i < b.n_inputs; ++i) out.inputs.push_back(start + i * input_stride_);
  std::vector<int> pool;
  for (int f = start; f < start + span; ++f) {
    if (!skip.contains(f)) pool.push_back(f);
  }
  LVT_CHECK(!pool.empty(), ErrorCode::kInvalidArgument, "no target frames available in the sampled window");
  std::shuffle(pool.begin(), pool.end(), rng_);
  pool.resize(std::min<size_t>(pool.size(), static_cast<size_t>(b.n_targets)));
  std::sort(pool.begin(), pool.end());
  out.targets = std::move(pool);
  return out;
}

TrainBatch<float> make_batch(std::span<const Camera> cameras, std::span<const Tensor<float>> images,
                             const SampleSpec& spec, const Vec3& background) {
  LVT_CHECK(cameras.size() == images.size(), ErrorCode::kShapeMismatch, "one image per camera is required");
  LVT_CHECK(!spec.inputs.empty() && !spec.targets.empty(), ErrorCode::kEmptyViewSet, "empty sample");
  auto check = [&](int i) {
    LVT_CHECK(i >= 0 && static_cast<size_t>(i) < cameras.size(), ErrorCode::kInvalidArgument,
              "frame " + std::to_string(i) + " is not in the scene");
  };
  TrainBatch<float> batch;
  const int f = spec.downsample;
  std::vector<Tensor<float>> inputs;
  for (int i : spec.inputs) {
    check(i);
    Camera c = cameras[i];
    c.intrinsics = downsample_intrinsics(c.intrinsics, f);
    batch.inputs.cameras.push_back(c);
    inputs.push_back(downsample_image(images[i], f));
  }
  const Shape& s = inputs.front().shape();
  batch.inputs.images = Tensor<float>({static_cast<int64_t>(inputs.size()), s[0], s[1], s[2]});
  for (size_t i = 0; i < inputs.size(); ++i) {
    LVT_CHECK(inputs[i].shape() == s, ErrorCode::kShapeMismatch, "input views must share one resolution");
    std::copy(inputs[i].span().begin(), inputs[i].span().end(), batch.inputs.images.data() + i * inputs[i].size());
  }
  for (int t : spec.targets) {
    check(t);
    Camera c = cameras[t];
    c.intrinsics = downsample_intrinsics(c.intrinsics, f);
    batch.targets.push_back({c, background});
    batch.target_images.push_back(downsample_image(images[t], f));
  }
  return batch;
}

}  // namespace lvt
