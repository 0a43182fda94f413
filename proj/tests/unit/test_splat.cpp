// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/splat.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"

namespace lvt {
namespace {

using testing::random_tensor;

RigidPose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 1);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return {q.toRotationMatrix(), Vec3(g(rng), g(rng), g(rng))};
}

std::vector<Camera> cameras(int n, std::mt19937_64& rng, int size = 4) {
  std::vector<Camera> cams(n);
  for (int i = 0; i < n; ++i) {
    cams[i].id = i;
    cams[i].intrinsics = {5, 5, size / 2.0, size / 2.0, size, size};
    cams[i].pose = random_pose(rng);
  }
  return cams;
}

std::vector<RayMap> ray_maps(const std::vector<Camera>& cams) {
  std::vector<RayMap> out;
  for (const auto& c : cams) out.push_back(local_ray_map(c.intrinsics));
  return out;
}

const SplatLayout kLayout{1, 1};  // 8 + 12 + 4 = 24 channels

TEST(SplatLayout, ChannelArithmetic) {
  EXPECT_EQ(kLayout.channels(), 24);
  EXPECT_EQ(kLayout.opacity_offset(), 20);
  const SplatLayout deg0{0, 0};
  EXPECT_EQ(deg0.channels(), 12);
  const SplatLayout deg3{3, 2};
  EXPECT_EQ(deg3.channels(), 8 + 48 + 9);
}

TEST(Decode, ZeroRawGivesGeometricMeanDepthMaxScaleIdentityRotation) {
  std::mt19937_64 rng(1);
  const auto cams = cameras(2, rng);
  const DecodeBounds bounds{0.4, 3.6, 1e-4, 0.5};
  const auto set = decode_pixel_splats(Tensor<double>({2, 4, 4, 24}), ray_maps(cams), kLayout, bounds);
  EXPECT_EQ(set.frame, SplatFrame::kLocal);
  ASSERT_EQ(set.size(), 32);
  const auto rays = ray_maps(cams);
  for (int64_t n = 0; n < 32; ++n) {
    const Vec3 pos(set.positions[n * 3], set.positions[n * 3 + 1], set.positions[n * 3 + 2]);
    EXPECT_NEAR(pos.norm(), std::sqrt(0.4 * 3.6), 1e-12);
    const Vec3 ray = rays[0].at(static_cast<int>((n % 16) / 4), static_cast<int>(n % 4));
    EXPECT_LT((pos - pos.norm() * ray).norm(), 1e-12);
    for (int a = 0; a < 3; ++a) EXPECT_EQ(set.scales[n * 3 + a], 0.5);
    EXPECT_EQ(set.rotations[n * 4], 1.0);
    for (int a = 1; a < 4; ++a) EXPECT_EQ(set.rotations[n * 4 + a], 0.0);
    EXPECT_EQ(set.source_view[n], n / 16);
  }
}

TEST(Decode, ActivationsMatchClosedForms) {
  std::mt19937_64 rng(2);
  const auto cams = cameras(1, rng);
  const DecodeBounds bounds;
  const Tensor<double> raw = random_tensor({1, 4, 4, 24}, rng, 2.0);
  const auto set = decode_pixel_splats(raw, ray_maps(cams), kLayout, bounds);
  for (int64_t n = 0; n < 16; ++n) {
    const double* r = raw.data() + n * 24;
    const double sig = 1 / (1 + std::exp(-r[7]));
    const double depth = std::exp(std::log(bounds.near) + sig * (std::log(bounds.far) - std::log(bounds.near)));
    const Vec3 pos(set.positions[n * 3], set.positions[n * 3 + 1], set.positions[n * 3 + 2]);
    EXPECT_NEAR(pos.norm(), depth, 1e-12);
    EXPECT_GE(pos.norm(), bounds.near);
    EXPECT_LE(pos.norm(), bounds.far);
    for (int a = 0; a < 3; ++a) {
      EXPECT_NEAR(set.scales[n * 3 + a], std::clamp(std::exp(r[a]), bounds.scale_min, bounds.scale_max), 1e-15);
    }
    Eigen::Vector4d q(r[3] + 1, r[4], r[5], r[6]);
    q.normalize();
    if (q[0] < 0) q = -q;
    for (int a = 0; a < 4; ++a) EXPECT_NEAR(set.rotations[n * 4 + a], q[a], 1e-15);
    for (int k = 0; k < 12; ++k) EXPECT_EQ(set.color_sh[n * 12 + k], r[8 + k]);
    for (int k = 0; k < 4; ++k) EXPECT_EQ(set.opacity_sh[n * 4 + k], r[20 + k]);
  }
}

TEST(Decode, DepthIsMonotoneInItsChannel) {
  std::mt19937_64 rng(3);
  const auto cams = cameras(1, rng, 2);
  Tensor<double> raw({1, 2, 2, 24});
  double last = 0;
  for (double x = -6; x <= 6; x += 0.5) {
    raw[7] = x;
    const auto set = decode_pixel_splats(raw, ray_maps(cams), kLayout, {});
    const double t = Vec3(set.positions[0], set.positions[1], set.positions[2]).norm();
    EXPECT_GT(t, last);
    last = t;
  }
}

TEST(Decode, RejectsNonFiniteAndBadShapes) {
  std::mt19937_64 rng(4);
  const auto cams = cameras(1, rng, 2);
  Tensor<double> raw({1, 2, 2, 24});
  raw[5] = std::nan("");
  try {
    decode_pixel_splats(raw, ray_maps(cams), kLayout, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
  EXPECT_THROW(decode_pixel_splats(Tensor<double>({1, 2, 2, 23}), ray_maps(cams), kLayout, {}), Error);
  EXPECT_THROW(decode_pixel_splats(Tensor<double>({1, 2, 2, 24}), ray_maps(cams), kLayout, {2.0, 1.0}), Error);
}

TEST(Decode, IsDeterministic) {
  std::mt19937_64 rng(5);
  const auto cams = cameras(2, rng);
  const auto raw = random_tensor({2, 4, 4, 24}, rng);
  const auto a = decode_pixel_splats(raw, ray_maps(cams), kLayout, {});
  const auto b = decode_pixel_splats(raw, ray_maps(cams), kLayout, {});
  EXPECT_EQ(a.positions.vec(), b.positions.vec());
  EXPECT_EQ(a.rotations.vec(), b.rotations.vec());
  EXPECT_EQ(a.scales.vec(), b.scales.vec());
}

TEST(ToWorld, IdentityPoseLeavesSplatsUnchanged) {
  std::mt19937_64 rng(6);
  auto cams = cameras(1, rng);
  cams[0].pose = RigidPose::identity();
  const auto local = decode_pixel_splats(random_tensor({1, 4, 4, 24}, rng), ray_maps(cams), kLayout, {});
  const auto world = splats_to_world(local, cams);
  EXPECT_EQ(world.frame, SplatFrame::kWorld);
  for (int64_t i = 0; i < local.positions.size(); ++i) EXPECT_NEAR(world.positions[i], local.positions[i], 1e-15);
  for (int64_t i = 0; i < local.rotations.size(); ++i) EXPECT_NEAR(world.rotations[i], local.rotations[i], 1e-15);
  EXPECT_EQ(world.scales.vec(), local.scales.vec());
}

TEST(ToWorld, MatchesInverseMatrixOracle) {
  std::mt19937_64 rng(7);
  auto cams = cameras(3, rng);
  cams[0].pose.rotation = Mat3::Identity();  // pure translation
  const auto local = decode_pixel_splats(random_tensor({3, 4, 4, 24}, rng), ray_maps(cams), kLayout, {});
  const auto world = splats_to_world(local, cams);
  for (int64_t n = 0; n < local.size(); ++n) {
    const Mat4 inv = cams[local.source_view[n]].pose.matrix().inverse();
    const Eigen::Vector4d p(local.positions[n * 3], local.positions[n * 3 + 1], local.positions[n * 3 + 2], 1);
    const Eigen::Vector4d oracle = inv * p;
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(world.positions[n * 3 + a], oracle[a], 1e-12);
    // Orientation: world rotation matrix equals R_jᵀ times local rotation matrix.
    auto quat_at = [](const Tensor<double>& t, int64_t i) {
      return UnitQuaternion{t[i * 4], t[i * 4 + 1], t[i * 4 + 2], t[i * 4 + 3]};
    };
    const Mat3 expected = inv.topLeftCorner<3, 3>() * rotation_from_quat(quat_at(local.rotations, n));
    EXPECT_LT((rotation_from_quat(quat_at(world.rotations, n)) - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(world.rotations[n * 4], 0.0);
    const Mat3 src = rotation_from_quat(quat_at(world.source_rotation, n));
    EXPECT_LT((src - cams[local.source_view[n]].pose.rotation).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ToWorld, RoundTripThroughLocal) {
  std::mt19937_64 rng(8);
  const auto cams = cameras(2, rng);
  const auto local = decode_pixel_splats(random_tensor({2, 4, 4, 24}, rng), ray_maps(cams), kLayout, {});
  const auto world = splats_to_world(local, cams);
  const auto back = splats_to_local(world, cams);
  EXPECT_EQ(back.frame, SplatFrame::kLocal);
  const auto again = splats_to_world(back, cams);
  for (int64_t i = 0; i < world.positions.size(); ++i) {
    EXPECT_NEAR(again.positions[i], world.positions[i], 1e-12);
    EXPECT_NEAR(back.positions[i], local.positions[i], 1e-12);
  }
  for (int64_t i = 0; i < world.rotations.size(); ++i) EXPECT_NEAR(back.rotations[i], local.rotations[i], 1e-12);
}

TEST(ToWorld, FrameMismatchIsReported) {
  std::mt19937_64 rng(9);
  const auto cams = cameras(1, rng);
  const auto local = decode_pixel_splats(random_tensor({1, 4, 4, 24}, rng), ray_maps(cams), kLayout, {});
  const auto world = splats_to_world(local, cams);
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of([&] { splats_to_world(world, cams); }), ErrorCode::kFrameMismatch);
  EXPECT_EQ(code_of([&] { splats_to_local(local, cams); }), ErrorCode::kFrameMismatch);
}

TEST(ToWorld, EquivariantUnderGlobalTransform) {
  std::mt19937_64 rng(10);
  const auto cams = cameras(3, rng);
  const auto raw = random_tensor({3, 4, 4, 24}, rng);
  const auto local = decode_pixel_splats(raw, ray_maps(cams), kLayout, {});
  const auto world = splats_to_world(local, cams);
  for (int trial = 0; trial < 5; ++trial) {
    const RigidPose g = random_pose(rng);
    auto moved = cams;
    for (auto& c : moved) c.pose = c.pose.compose(g.inverse());
    const auto local2 = decode_pixel_splats(raw, ray_maps(moved), kLayout, {});
    EXPECT_EQ(local2.positions.vec(), local.positions.vec());
    const auto world2 = splats_to_world(local2, moved);
    for (int64_t n = 0; n < world.size(); ++n) {
      const Vec3 p(world.positions[n * 3], world.positions[n * 3 + 1], world.positions[n * 3 + 2]);
      const Vec3 expected = g.apply(p);
      for (int a = 0; a < 3; ++a) EXPECT_NEAR(world2.positions[n * 3 + a], expected[a], 1e-9);
    }
  }
}

TEST(SplatSet, SubsetValidateAndCast) {
  std::mt19937_64 rng(11);
  const auto cams = cameras(1, rng);
  const auto local = decode_pixel_splats(random_tensor({1, 4, 4, 24}, rng), ray_maps(cams), kLayout, {});
  EXPECT_NO_THROW(local.validate());
  const std::vector<int64_t> idx = {3, 0, 7};
  const auto sub = local.subset(idx);
  ASSERT_EQ(sub.size(), 3);
  EXPECT_EQ(sub.positions[0], local.positions[9]);
  EXPECT_EQ(sub.color_sh[12], local.color_sh[0]);
  const auto f = local.cast<float>();
  EXPECT_EQ(f.positions[5], static_cast<float>(local.positions[5]));
  auto broken = local;
  broken.scales[2] = -1;
  EXPECT_THROW(broken.validate(), Error);
}

TEST(DecodeGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  const auto cams = cameras(2, rng, 2);
  const auto rays = ray_maps(cams);
  const auto source_view = pixel_source_views(2, 2, 2);
  // Keep scale channels inside the clamp range so the map is smooth.
  Tensor<double> raw = random_tensor({2, 2, 2, 24}, rng);
  for (int64_t n = 0; n < 8; ++n) {
    for (int a = 0; a < 3; ++a) raw[n * 24 + a] = -3 + 0.5 * raw[n * 24 + a];
  }
  testing::GradCheckOptions opt;
  opt.step = 1e-6;
  opt.floor = 1e-6;
  const auto r = testing::check_gradients(
      [&](ad::Tape<double>&, const std::vector<ad::Var<double>>& in) {
        const auto local = decode_pixel_splats(in[0], rays, kLayout, {});
        const auto world = splats_to_world(local, cams, source_view);
        return ad::add(ad::add(testing::random_projection(world.positions, 1), testing::random_projection(world.rotations, 2)),
                       ad::add(testing::random_projection(world.scales, 3),
                               ad::add(testing::random_projection(world.color_sh, 4),
                                       testing::random_projection(world.opacity_sh, 5))));
      },
      {raw}, opt);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(DecodeGradient, ClampedScaleHasZeroGradient) {
  std::mt19937_64 rng(13);
  const auto cams = cameras(1, rng, 2);
  const auto rays = ray_maps(cams);
  ad::Tape<double> tape;
  Tensor<double> raw({1, 2, 2, 24});
  raw[0] = 5.0;    // above scale_max
  raw[1] = -20.0;  // below scale_min
  raw[2] = -2.0;   // inside
  const auto x = tape.variable(raw);
  tape.backward(ad::sum(decode_pixel_splats(x, rays, kLayout, {}).scales));
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[1], 0.0);
  EXPECT_NEAR(x.grad()[2], std::exp(-2.0), 1e-15);
}

}  // namespace
}  // namespace lvt
