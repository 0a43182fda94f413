// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lvt/scene.hpp"
#include "lvt/splat.hpp"
#include "lvt/training.hpp"

namespace lvt {

// Ground-truth splats in a box at the origin, viewed from a jittered arc of
// cameras looking at it. Everything is normalized like a loaded manifest.
struct SynthConfig {
  uint64_t seed = 0;
  int n_splats = 256;
  int n_views = 8;
  int width = 64;
  int height = 64;
  double fov_degrees = 50.0;  // horizontal
  double arc_degrees = 90.0;
  double elevation_degrees = 20.0;
  double radius = 1.0;
  double jitter = 0.02;
  double box_half = 0.25;
  double log_scale_min = -3.9;
  double log_scale_max = -2.1;
  int color_degree = 1;
  int opacity_degree = 1;
  Vec3 background = Vec3::Zero();

  void validate() const;
};

struct SyntheticScene {
  SceneManifest manifest;  // image paths view_XXX.png, ground truth ground_truth.ply
  std::vector<Camera> cameras;
  std::vector<Tensor<float>> images;
  GaussianSplatSet<float> ground_truth;
};

SyntheticScene generate_synthetic_scene(const SynthConfig& cfg);
// Writes manifest.json, the PNG views and the ground-truth PLY into `directory`.
void write_synthetic_scene(const SyntheticScene& scene, const std::string& directory);

// Every `stride`-th frame, counted after removing `held_out`.
std::vector<int> select_input_views(int n_frames, std::span<const int> held_out, int stride);

// Integer box filter; [H, W, 3] -> [H / f, W / f, 3].
Tensor<float> downsample_image(const Tensor<float>& image, int factor);
// Intrinsics of the box-filtered image.
CameraIntrinsics downsample_intrinsics(const CameraIntrinsics& k, int factor);

struct ResolutionBucket {
  double weight = 1.0;
  int downsample = 1;
  int n_inputs = 8;
  int n_targets = 4;
};

struct SampleSpec {
  std::vector<int> inputs;
  std::vector<int> targets;
  int downsample = 1;
};

// Weighted choice of bucket, then a random window of frames holding
// n_inputs inputs spaced by `input_stride` and n_targets targets drawn from
// the same window.
class MixedResolutionSampler {
 public:
  MixedResolutionSampler(std::vector<ResolutionBucket> buckets, int input_stride, uint64_t seed);

  // Frames in `excluded` are never used as inputs or targets.
  SampleSpec next(int n_frames, std::span<const int> excluded = {});
  const std::vector<ResolutionBucket>& buckets() const { return buckets_; }

 private:
  std::vector<ResolutionBucket> buckets_;
  int input_stride_;
  std::mt19937_64 rng_;
};

TrainBatch<float> make_batch(std::span<const Camera> cameras, std::span<const Tensor<float>> images,
                             const SampleSpec& spec, const Vec3& background);

}  // namespace lvt
