// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lvt/geometry.hpp"
#include "lvt/splat.hpp"
#include "lvt/tensor.hpp"

namespace lvt {

// x_normalized = scale * x + translation.
struct Normalization {
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();

  // (this ∘ inner)(x) = this(inner(x))
  Normalization compose(const Normalization& inner) const;
  Normalization inverse() const;
  bool is_identity(double tolerance = 1e-12) const;
};

struct ManifestView {
  std::string image;  // relative to the manifest directory, or absolute
  Mat3 intrinsics = Mat3::Identity();
  Mat4 camera_from_world = Mat4::Identity();
};

struct SceneManifest {
  double near = 0.1;
  double far = 10.0;
  std::vector<ManifestView> views;
  Normalization normalization;  // already applied to the stored poses
  std::optional<std::string> ground_truth;
  std::string directory;  // where relative paths resolve
};

// Parses and validates a manifest. Throws MalformedManifest (bad syntax or
// matrices), Io (missing referenced files) or the geometry errors. With
// `normalize`, camera centers are mapped into [-1, 1]^3 and the applied
// transform is composed into `normalization`.
SceneManifest load_manifest(const std::string& path, bool normalize = true);
void save_manifest(const SceneManifest& manifest, const std::string& path);

// Normalization mapping the camera-center bounding box midpoint to the origin
// and its largest half-extent to 1.
Normalization fit_normalization(const SceneManifest& manifest);
void apply_normalization(SceneManifest& manifest, const Normalization& n);
RigidPose normalize_pose(const RigidPose& pose, const Normalization& n);
template <typename T>
void apply_normalization(GaussianSplatSet<T>& splats, const Normalization& n);

// 8-bit PNG, any channel layout; returns [H, W, 3] in [0, 1].
Tensor<float> read_png(const std::string& path);
// [H, W, 3] values clamped to [0, 1], rounded to 8 bits.
template <typename T>
void write_png(const std::string& path, const Tensor<T>& image);

// Cameras and images of a manifest, ids equal to view positions.
struct LoadedScene {
  SceneManifest manifest;
  std::vector<Camera> cameras;
  std::vector<Tensor<float>> images;
  std::optional<GaussianSplatSet<float>> ground_truth;
};

LoadedScene load_scene(const std::string& manifest_path);
std::string resolve_path(const std::string& directory, const std::string& path);

}  // namespace lvt
