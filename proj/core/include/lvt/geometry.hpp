// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <span>
#include <vector>

#include "lvt/tensor.hpp"

namespace lvt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Pinhole intrinsics in pixels. Pixel (u, v) covers [u, u+1) x [v, v+1), so its
// center sits at (u + 0.5, v + 0.5).
struct CameraIntrinsics {
  double fx = 1, fy = 1, cx = 0.5, cy = 0.5;
  int width = 1, height = 1;

  void validate() const;
  Mat3 matrix() const;
  static CameraIntrinsics from_matrix(const Mat3& k, int width, int height);
};

struct UnitQuaternion {
  double w = 1, x = 0, y = 0, z = 0;

  double norm() const;
  Eigen::Vector4d coeffs() const { return {w, x, y, z}; }
};

// Flips the sign so that w >= 0; when w == 0 the first nonzero of x, y, z is
// made positive.
UnitQuaternion canonicalize(const UnitQuaternion& q);
UnitQuaternion quat_from_rotation(const Mat3& rotation);
Mat3 rotation_from_quat(const UnitQuaternion& q);
UnitQuaternion quat_multiply(const UnitQuaternion& a, const UnitQuaternion& b);

// World-to-camera rigid transform: x_cam = rotation * x_world + translation.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }
  static RigidPose from_matrix(const Mat4& m);
  Mat4 matrix() const;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidPose inverse() const;
  // (this ∘ other)(x) = this(other(x))
  RigidPose compose(const RigidPose& other) const;
  // World position of the camera center, -Rᵀt.
  Vec3 center() const { return -rotation.transpose() * translation; }

  void validate(double tolerance = 1e-9) const;
};

// P_j ∘ P_jp⁻¹: maps camera-jp frame points into the camera-j frame.
RigidPose relative_pose(const RigidPose& pose_j, const RigidPose& pose_jp);

struct Camera {
  CameraIntrinsics intrinsics;
  RigidPose pose;
  int id = 0;
};

// Unit ray directions in the camera frame, H x W x 3, forward along +z.
struct RayMap {
  int width = 0, height = 0;
  Tensor<double> directions;

  Vec3 at(int row, int col) const {
    const double* d = directions.data() + (static_cast<int64_t>(row) * width + col) * 3;
    return {d[0], d[1], d[2]};
  }
};

RayMap local_ray_map(const CameraIntrinsics& intrinsics);

enum class NeighborStrategy { kSpatial, kSequential };

// Per-view neighbor lists, indexed by position in the camera list. Each list
// starts with the view itself.
struct NeighborGraph {
  std::vector<std::vector<int>> neighbors;
  int window = 1;
  int dilation = 1;
  NeighborStrategy strategy = NeighborStrategy::kSpatial;

  int num_views() const { return static_cast<int>(neighbors.size()); }
  // Sum over views of |N(j)|.
  int64_t edge_count() const;
  bool contains(int j, int jp) const;
};

NeighborGraph build_neighbor_graph(std::span<const Camera> cameras, int window, int dilation,
                                   NeighborStrategy strategy);

// Every view attends to every view, in ascending order after itself.
NeighborGraph full_neighbor_graph(int num_views);

}  // namespace lvt
