// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/scene.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "lvt/ply.hpp"

namespace lvt {

namespace fs = std::filesystem;
using nlohmann::json;

Normalization Normalization::compose(const Normalization& inner) const {
  return {scale * inner.scale, scale * inner.translation + translation};
}

Normalization Normalization::inverse() const { return {1.0 / scale, -translation / scale}; }

bool Normalization::is_identity(double tolerance) const {
  return std::abs(scale - 1.0) <= tolerance && translation.cwiseAbs().maxCoeff() <= tolerance;
}

RigidPose normalize_pose(const RigidPose& pose, const Normalization& n) {
  // x_cam' = s x_cam for x_world = (x' - b) / s
  return {pose.rotation, n.scale * pose.translation - pose.rotation * n.translation};
}

Normalization fit_normalization(const SceneManifest& manifest) {
  if (manifest.views.empty()) return {};
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const ManifestView& v : manifest.views) {
    const Vec3 c = RigidPose::from_matrix(v.camera_from_world).center();
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  const Vec3 mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo).maxCoeff();
  const double scale = half > 0 ? 1.0 / half : 1.0;
  Normalization n{scale, -scale * mid};
  // Already-normalized scenes are left untouched so that loading is idempotent.
  if (n.is_identity(1e-9)) return {};
  return n;
}

void apply_normalization(SceneManifest& manifest, const Normalization& n) {
  for (ManifestView& v : manifest.views) {
    v.camera_from_world = normalize_pose(RigidPose::from_matrix(v.camera_from_world), n).matrix();
  }
  manifest.near *= n.scale;
  manifest.far *= n.scale;
  manifest.normalization = n.compose(manifest.normalization);
}

template <typename T>
void apply_normalization(GaussianSplatSet<T>& splats, const Normalization& n) {
  LVT_CHECK(splats.frame == SplatFrame::kWorld, ErrorCode::kFrameMismatch, "normalization applies to world splats");
  for (int64_t i = 0; i < splats.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      splats.positions[i * 3 + k] = static_cast<T>(n.scale * splats.positions[i * 3 + k] + n.translation[k]);
      splats.scales[i * 3 + k] = static_cast<T>(n.scale * splats.scales[i * 3 + k]);
    }
  }
}

std::string resolve_path(const std::string& directory, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute() || directory.empty()) return p.string();
  return (fs::path(directory) / p).string();
}

namespace {

template <int R, int C>
Eigen::Matrix<double, R, C> read_matrix(const json& j, const char* what) {
  LVT_CHECK(j.is_array() && j.size() == static_cast<size_t>(R * C), ErrorCode::kMalformedManifest,
            std::string(what) + " must hold " + std::to_string(R * C) + " numbers");
  Eigen::Matrix<double, R, C> m;
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const json& v = j[static_cast<size_t>(r * C + c)];
      LVT_CHECK(v.is_number(), ErrorCode::kMalformedManifest, std::string(what) + " entries must be numbers");
      m(r, c) = v.get<double>();
      LVT_CHECK(std::isfinite(m(r, c)), ErrorCode::kMalformedManifest, std::string(what) + " must be finite");
    }
  }
  return m;
}

template <typename M>
json matrix_json(const M& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

void validate_intrinsics(const Mat3& k) {
  LVT_CHECK(k(0, 0) > 0 && k(1, 1) > 0 && k(0, 1) == 0 && k(1, 0) == 0 && k(2, 0) == 0 && k(2, 1) == 0 &&
                k(2, 2) == 1,
            ErrorCode::kMalformedManifest, "K must be a skew-free pinhole matrix with positive focal lengths");
}

}  // namespace

SceneManifest load_manifest(const std::string& path, bool normalize) {
  std::ifstream in(path);
  LVT_CHECK(in.good(), ErrorCode::kIo, "cannot open manifest " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  SceneManifest m;
  m.directory = fs::path(path).parent_path().string();
  try {
    const json j = json::parse(buf.str());
    LVT_CHECK(j.is_object(), ErrorCode::kMalformedManifest, "manifest must be a JSON object");
    m.near = j.at("near").get<double>();
    m.far = j.at("far").get<double>();
    if (j.contains("normalization")) {
      const json& n = j.at("normalization");
      m.normalization.scale = n.at("scale").get<double>();
      m.normalization.translation = read_matrix<3, 1>(n.at("translation"), "normalization.translation");
      LVT_CHECK(m.normalization.scale > 0 && std::isfinite(m.normalization.scale), ErrorCode::kMalformedManifest,
                "normalization scale must be positive");
    }
    if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
      m.ground_truth = j.at("ground_truth").get<std::string>();
    }
    const json& views = j.at("views");
    LVT_CHECK(views.is_array(), ErrorCode::kMalformedManifest, "views must be an array");
    for (const json& v : views) {
      ManifestView mv;
      mv.image = v.at("image").get<std::string>();
      mv.intrinsics = read_matrix<3, 3>(v.at("K"), "K");
      mv.camera_from_world = read_matrix<4, 4>(v.at("camera_from_world"), "camera_from_world");
      m.views.push_back(std::move(mv));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedManifest, path + ": " + e.what());
  }
  LVT_CHECK(m.near > 0 && m.far > m.near, ErrorCode::kMalformedManifest, "manifest needs 0 < near < far");
  LVT_CHECK(!m.views.empty(), ErrorCode::kEmptyViewSet, "manifest has no views");
  for (const ManifestView& v : m.views) {
    validate_intrinsics(v.intrinsics);
    RigidPose::from_matrix(v.camera_from_world);
    const std::string image = resolve_path(m.directory, v.image);
    LVT_CHECK(fs::exists(image), ErrorCode::kIo, "missing image " + image);
  }
  if (m.ground_truth) {
    const std::string gt = resolve_path(m.directory, *m.ground_truth);
    LVT_CHECK(fs::exists(gt), ErrorCode::kIo, "missing ground truth " + gt);
  }
  if (normalize) {
    const Normalization n = fit_normalization(m);
    if (!n.is_identity(0)) apply_normalization(m, n);
  }
  return m;
}

void save_manifest(const SceneManifest& m, const std::string& path) {
  json j;
  j["near"] = m.near;
  j["far"] = m.far;
  j["normalization"] = {{"scale", m.normalization.scale}, {"translation", matrix_json(m.normalization.translation)}};
  if (m.ground_truth) j["ground_truth"] = *m.ground_truth;
  json views = json::array();
  for (const ManifestView& v : m.views) {
    views.push_back({{"image", v.image}, {"K", matrix_json(v.intrinsics)},
                     {"camera_from_world", matrix_json(v.camera_from_world)}});
  }
  j["views"] = views;
  std::ofstream out(path);
  LVT_CHECK(out.good(), ErrorCode::kIo, "cannot write manifest " + path);
  // max_digits10 keeps doubles exact through the text round trip.
  out << j.dump(2) << "\n";
  LVT_CHECK(out.good(), ErrorCode::kIo, "failed writing " + path);
}

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

Tensor<float> read_png(const std::string& path) {
  std::unique_ptr<FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  LVT_CHECK(file != nullptr, ErrorCode::kIo, "cannot open " + path);
  unsigned char sig[8];
  LVT_CHECK(std::fread(sig, 1, 8, file.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0, ErrorCode::kIo,
            path + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  LVT_CHECK(png && info, ErrorCode::kIo, "libpng initialization failed");
  std::vector<png_byte> pixels;
  png_uint_32 width = 0, height = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "corrupt PNG " + path);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const size_t row_bytes = png_get_rowbytes(png, info);
  LVT_CHECK(row_bytes == static_cast<size_t>(width) * 3, ErrorCode::kIo, "unsupported PNG layout in " + path);
  pixels.resize(row_bytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + r * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Tensor<float> out({static_cast<int64_t>(height), static_cast<int64_t>(width), 3});
  for (size_t i = 0; i < pixels.size(); ++i) out[static_cast<int64_t>(i)] = static_cast<float>(pixels[i]) / 255.0f;
  return out;
}

template <typename T>
void write_png(const std::string& path, const Tensor<T>& image) {
  LVT_CHECK(image.rank() == 3 && image.dim(2) == 3, ErrorCode::kShapeMismatch, "PNG output expects [H, W, 3]");
  const int64_t h = image.dim(0), w = image.dim(1);
  std::vector<png_byte> pixels(static_cast<size_t>(image.size()));
  for (int64_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(static_cast<double>(image[i]), 0.0, 1.0);
    pixels[static_cast<size_t>(i)] = static_cast<png_byte>(std::lround(v * 255.0));
  }
  std::unique_ptr<FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  LVT_CHECK(file != nullptr, ErrorCode::kIo, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  LVT_CHECK(png && info, ErrorCode::kIo, "libpng initialization failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "failed writing PNG " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int64_t r = 0; r < h; ++r) png_write_row(png, pixels.data() + r * w * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

LoadedScene load_scene(const std::string& manifest_path) {
  LoadedScene scene;
  const SceneManifest raw = load_manifest(manifest_path, false);
  scene.manifest = raw;
  const Normalization n = fit_normalization(raw);
  if (!n.is_identity(0)) apply_normalization(scene.manifest, n);
  for (size_t i = 0; i < scene.manifest.views.size(); ++i) {
    const ManifestView& v = scene.manifest.views[i];
    Tensor<float> image = read_png(resolve_path(scene.manifest.directory, v.image));
    Camera cam;
    try {
      cam.intrinsics = CameraIntrinsics::from_matrix(v.intrinsics, static_cast<int>(image.dim(1)),
                                                     static_cast<int>(image.dim(0)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedManifest, "view " + std::to_string(i) + ": " + e.what());
    }
    cam.pose = RigidPose::from_matrix(v.camera_from_world);
    cam.id = static_cast<int>(i);
    scene.cameras.push_back(cam);
    scene.images.push_back(std::move(image));
  }
  if (scene.manifest.ground_truth) {
    GaussianSplatSet<float> gt = import_ply(resolve_path(scene.manifest.directory, *scene.manifest.ground_truth));
    if (!n.is_identity(0)) apply_normalization(gt, n);
    scene.ground_truth = std::move(gt);
  }
  return scene;
}

template void apply_normalization(GaussianSplatSet<float>&, const Normalization&);
template void apply_normalization(GaussianSplatSet<double>&, const Normalization&);
template void write_png(const std::string&, const Tensor<float>&);
template void write_png(const std::string&, const Tensor<double>&);

}  // namespace lvt
