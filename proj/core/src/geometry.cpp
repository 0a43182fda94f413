// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lvt/error.hpp"

namespace lvt {

void CameraIntrinsics::validate() const {
  LVT_CHECK(fx > 0 && fy > 0, ErrorCode::kInvalidArgument, "focal lengths must be positive");
  LVT_CHECK(width > 0 && height > 0, ErrorCode::kInvalidArgument, "image size must be positive");
  LVT_CHECK(cx > 0 && cx < width && cy > 0 && cy < height, ErrorCode::kInvalidArgument,
            "principal point must lie inside the image");
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

CameraIntrinsics CameraIntrinsics::from_matrix(const Mat3& k, int width, int height) {
  LVT_CHECK(k(0, 1) == 0 && k(1, 0) == 0 && k(2, 0) == 0 && k(2, 1) == 0 && k(2, 2) == 1,
            ErrorCode::kInvalidArgument, "intrinsics must be a skew-free pinhole matrix");
  CameraIntrinsics out{k(0, 0), k(1, 1), k(0, 2), k(1, 2), width, height};
  out.validate();
  return out;
}

double UnitQuaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

UnitQuaternion canonicalize(const UnitQuaternion& q) {
  bool flip = false;
  if (q.w != 0) {
    flip = q.w < 0;
  } else if (q.x != 0) {
    flip = q.x < 0;
  } else if (q.y != 0) {
    flip = q.y < 0;
  } else {
    flip = q.z < 0;
  }
  return flip ? UnitQuaternion{-q.w, -q.x, -q.y, -q.z} : q;
}

UnitQuaternion quat_from_rotation(const Mat3& r) {
  const double ortho_err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  LVT_CHECK(ortho_err <= 1e-6 && r.determinant() > 0, ErrorCode::kNonOrthonormal,
            "rotation matrix deviates from SO(3) by " + std::to_string(ortho_err));
  // Shepperd: branch on the largest diagonal term for stability.
  UnitQuaternion q;
  const double trace = r.trace();
  if (trace > r(0, 0) && trace > r(1, 1) && trace > r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
  } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
    q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
  } else if (r(1, 1) >= r(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
    q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
    q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
  }
  const double n = q.norm();
  q = {q.w / n, q.x / n, q.y / n, q.z / n};
  return canonicalize(q);
}

Mat3 rotation_from_quat(const UnitQuaternion& q) {
  const double n = q.norm();
  const double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),    //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

UnitQuaternion quat_multiply(const UnitQuaternion& a, const UnitQuaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

RigidPose RigidPose::from_matrix(const Mat4& m) {
  LVT_CHECK(m(3, 0) == 0 && m(3, 1) == 0 && m(3, 2) == 0 && m(3, 3) == 1, ErrorCode::kInvalidArgument,
            "rigid transform must have a [0 0 0 1] bottom row");
  RigidPose pose{m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
  pose.validate(1e-6);
  return pose;
}

Mat4 RigidPose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidPose RigidPose::inverse() const {
  const Mat3 rt = rotation.transpose();
  return {rt, -rt * translation};
}

RigidPose RigidPose::compose(const RigidPose& other) const {
  return {rotation * other.rotation, rotation * other.translation + translation};
}

void RigidPose::validate(double tolerance) const {
  const double ortho_err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  LVT_CHECK(ortho_err <= tolerance && std::abs(rotation.determinant() - 1.0) <= tolerance,
            ErrorCode::kNonOrthonormal, "pose rotation is not a proper rotation");
  LVT_CHECK(translation.allFinite(), ErrorCode::kNonFinite, "pose translation is not finite");
}

RigidPose relative_pose(const RigidPose& pose_j, const RigidPose& pose_jp) {
  return pose_j.compose(pose_jp.inverse());
}

RayMap local_ray_map(const CameraIntrinsics& k) {
  k.validate();
  RayMap map;
  map.width = k.width;
  map.height = k.height;
  map.directions = Tensor<double>({k.height, k.width, 3});
  double* out = map.directions.data();
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      Vec3 d((u + 0.5 - k.cx) / k.fx, (v + 0.5 - k.cy) / k.fy, 1.0);
      d.normalize();
      *out++ = d.x();
      *out++ = d.y();
      *out++ = d.z();
    }
  }
  return map;
}

int64_t NeighborGraph::edge_count() const {
  int64_t total = 0;
  for (const auto& n : neighbors) total += static_cast<int64_t>(n.size());
  return total;
}

bool NeighborGraph::contains(int j, int jp) const {
  const auto& n = neighbors.at(j);
  return std::find(n.begin(), n.end(), jp) != n.end();
}

NeighborGraph build_neighbor_graph(std::span<const Camera> cameras, int window, int dilation,
                                   NeighborStrategy strategy) {
  LVT_CHECK(!cameras.empty(), ErrorCode::kEmptyViewSet, "neighbor graph needs at least one camera");
  LVT_CHECK(window >= 1 && dilation >= 1, ErrorCode::kInvalidArgument,
            "window and dilation must be at least 1");
  const int n = static_cast<int>(cameras.size());
  std::vector<Vec3> centers(n);
  for (int i = 0; i < n; ++i) centers[i] = cameras[i].pose.center();

  NeighborGraph graph;
  graph.window = window;
  graph.dilation = dilation;
  graph.strategy = strategy;
  graph.neighbors.resize(n);
  std::vector<int> order(n);
  for (int j = 0; j < n; ++j) {
    // Candidates other than j, nearest first; ties by ascending camera id.
    order.clear();
    for (int i = 0; i < n; ++i) {
      if (i != j) order.push_back(i);
    }
    auto key = [&](int i) {
      if (strategy == NeighborStrategy::kSpatial) return (centers[i] - centers[j]).norm();
      return static_cast<double>(std::abs(cameras[i].id - cameras[j].id));
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double ka = key(a), kb = key(b);
      if (ka != kb) return ka < kb;
      return cameras[a].id < cameras[b].id;
    });
    // Distances equal up to rounding count as ties so that a global rigid
    // transform cannot reorder them.
    for (size_t begin = 0; begin < order.size();) {
      const double k0 = key(order[begin]);
      size_t end = begin + 1;
      while (end < order.size() && key(order[end]) - k0 <= 1e-9 * std::max(1.0, k0)) ++end;
      std::sort(order.begin() + begin, order.begin() + end,
                [&](int a, int b) { return cameras[a].id < cameras[b].id; });
      begin = end;
    }
    order.insert(order.begin(), j);
    auto& out = graph.neighbors[j];
    for (size_t idx = 0; idx < order.size() && static_cast<int>(out.size()) < window; idx += dilation) {
      out.push_back(order[idx]);
    }
  }
  return graph;
}

NeighborGraph full_neighbor_graph(int num_views) {
  LVT_CHECK(num_views >= 1, ErrorCode::kEmptyViewSet, "graph needs at least one view");
  NeighborGraph graph;
  graph.window = num_views;
  graph.neighbors.resize(num_views);
  for (int j = 0; j < num_views; ++j) {
    graph.neighbors[j].push_back(j);
    for (int i = 0; i < num_views; ++i) {
      if (i != j) graph.neighbors[j].push_back(i);
    }
  }
  return graph;
}

}  // namespace lvt
