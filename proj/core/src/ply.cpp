// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/ply.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace lvt {

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace {

struct Property {
  std::string name;
  std::string type;
  int size = 4;
};

int type_size(const std::string& type) {
  static const std::map<std::string, int> sizes = {
      {"char", 1},  {"uchar", 1}, {"int8", 1},  {"uint8", 1},   {"short", 2},  {"ushort", 2},  {"int16", 2},
      {"uint16", 2}, {"int", 4},  {"uint", 4},  {"int32", 4},   {"uint32", 4}, {"float", 4},   {"float32", 4},
      {"double", 8}, {"float64", 8}};
  auto it = sizes.find(type);
  return it == sizes.end() ? -1 : it->second;
}

double decode(const std::string& type, const unsigned char* p) {
  auto get = [p]<typename V>(V) {
    V v;
    std::memcpy(&v, p, sizeof(V));
    return static_cast<double>(v);
  };
  if (type == "float" || type == "float32") return get(float{});
  if (type == "double" || type == "float64") return get(double{});
  if (type == "int" || type == "int32") return get(int32_t{});
  if (type == "uint" || type == "uint32") return get(uint32_t{});
  if (type == "short" || type == "int16") return get(int16_t{});
  if (type == "ushort" || type == "uint16") return get(uint16_t{});
  if (type == "char" || type == "int8") return get(int8_t{});
  return get(uint8_t{});
}

[[noreturn]] void malformed(size_t offset, const std::string& what) {
  throw Error(ErrorCode::kMalformedPly, "byte " + std::to_string(offset) + ": " + what);
}

int degree_for_count(int coeffs, size_t offset, const char* what) {
  for (int d = 0; d <= kMaxShDegree; ++d) {
    if (sh_coeff_count(d) == coeffs) return d;
  }
  malformed(offset, std::string("unsupported number of ") + what + " properties");
}

}  // namespace

template <typename T>
void export_ply(const GaussianSplatSet<T>& splats, const std::string& path) {
  LVT_CHECK(splats.frame == SplatFrame::kWorld, ErrorCode::kFrameMismatch, "PLY export requires world-frame splats");
  splats.validate();
  const int kc = sh_coeff_count(splats.color_degree), ko = sh_coeff_count(splats.opacity_degree);
  const int64_t n = splats.size();

  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\nelement vertex " << n << "\n";
  std::vector<std::string> names = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (int i = 0; i < 3 * (kc - 1); ++i) names.push_back("f_rest_" + std::to_string(i));
  names.push_back("opacity");
  for (int i = 0; i < 3; ++i) names.push_back("scale_" + std::to_string(i));
  for (int i = 0; i < 4; ++i) names.push_back("rot_" + std::to_string(i));
  for (int i = 0; i < ko - 1; ++i) names.push_back("op_rest_" + std::to_string(i));
  for (int i = 0; i < 4; ++i) names.push_back("srot_" + std::to_string(i));
  for (const std::string& name : names) h << "property float " << name << "\n";
  h << "property int source_view\nend_header\n";

  std::ofstream out(path, std::ios::binary);
  LVT_CHECK(out.good(), ErrorCode::kIo, "cannot write " + path);
  const std::string header = h.str();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::vector<float> row;
  row.reserve(names.size());
  for (int64_t i = 0; i < n; ++i) {
    row.clear();
    for (int k = 0; k < 3; ++k) row.push_back(static_cast<float>(splats.positions[i * 3 + k]));
    row.insert(row.end(), {0.0f, 0.0f, 0.0f});
    const T* c = splats.color_sh.data() + i * 3 * kc;
    for (int ch = 0; ch < 3; ++ch) row.push_back(static_cast<float>(c[ch]));
    for (int ch = 0; ch < 3; ++ch) {
      for (int k = 1; k < kc; ++k) row.push_back(static_cast<float>(c[k * 3 + ch]));
    }
    const T* o = splats.opacity_sh.data() + i * ko;
    row.push_back(static_cast<float>(o[0]));
    for (int k = 0; k < 3; ++k) row.push_back(std::log(static_cast<float>(splats.scales[i * 3 + k])));
    for (int k = 0; k < 4; ++k) row.push_back(static_cast<float>(splats.rotations[i * 4 + k]));
    for (int k = 1; k < ko; ++k) row.push_back(static_cast<float>(o[k]));
    for (int k = 0; k < 4; ++k) row.push_back(static_cast<float>(splats.source_rotation[i * 4 + k]));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    const int32_t sv = splats.source_view[i];
    out.write(reinterpret_cast<const char*>(&sv), sizeof(sv));
  }
  LVT_CHECK(out.good(), ErrorCode::kIo, "failed writing " + path);
}

GaussianSplatSet<float> import_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  LVT_CHECK(in.good(), ErrorCode::kIo, "cannot open " + path);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  size_t pos = 0;
  auto next_line = [&](size_t& start) -> std::string {
    start = pos;
    const auto* nl = static_cast<const unsigned char*>(std::memchr(bytes.data() + pos, '\n', bytes.size() - pos));
    if (nl == nullptr) malformed(pos, "unterminated header");
    const size_t end = static_cast<size_t>(nl - bytes.data());
    std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(end));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return line;
  };

  size_t line_start = 0;
  if (bytes.empty() || next_line(line_start) != "ply") malformed(0, "missing 'ply' magic");
  int64_t count = -1;
  bool in_vertex = false;
  std::vector<Property> props;
  for (;;) {
    const std::string line = next_line(line_start);
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") break;
    if (key == "comment" || key == "obj_info" || key.empty()) continue;
    if (key == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt != "binary_little_endian") malformed(line_start, "only binary_little_endian PLY is supported");
    } else if (key == "element") {
      std::string name;
      int64_t n = -1;
      ls >> name >> n;
      if (name == "vertex") {
        if (n < 0) malformed(line_start, "bad vertex count");
        count = n;
        in_vertex = true;
      } else {
        if (n != 0) malformed(line_start, "unsupported element '" + name + "'");
        in_vertex = false;
      }
    } else if (key == "property") {
      Property p;
      ls >> p.type >> p.name;
      if (p.type == "list") malformed(line_start, "list properties are not supported");
      p.size = type_size(p.type);
      if (p.size < 0) malformed(line_start, "unknown property type '" + p.type + "'");
      if (!in_vertex) malformed(line_start, "property outside the vertex element");
      props.push_back(p);
    } else {
      malformed(line_start, "unexpected header line '" + line + "'");
    }
  }
  if (count < 0) malformed(pos, "no vertex element");

  std::map<std::string, std::pair<size_t, const Property*>> columns;
  size_t stride = 0;
  for (const Property& p : props) {
    if (columns.contains(p.name)) malformed(pos, "duplicate property '" + p.name + "'");
    columns[p.name] = {stride, &p};
    stride += static_cast<size_t>(p.size);
  }
  const size_t data_start = pos;
  for (const char* required : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1",
                               "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"}) {
    if (!columns.contains(required)) malformed(data_start, std::string("missing property '") + required + "'");
  }
  int f_rest = 0, op_rest = 0;
  while (columns.contains("f_rest_" + std::to_string(f_rest))) ++f_rest;
  while (columns.contains("op_rest_" + std::to_string(op_rest))) ++op_rest;
  if (f_rest % 3 != 0) malformed(data_start, "f_rest count is not a multiple of 3");
  const int color_degree = degree_for_count(f_rest / 3 + 1, data_start, "f_rest");
  const int opacity_degree = degree_for_count(op_rest + 1, data_start, "op_rest");
  const bool has_srot = columns.contains("srot_0") && columns.contains("srot_1") && columns.contains("srot_2") &&
                        columns.contains("srot_3");
  const bool has_view = columns.contains("source_view");

  const size_t needed = stride * static_cast<size_t>(count);
  if (bytes.size() - data_start < needed) {
    malformed(bytes.size(), "vertex data truncated: expected " + std::to_string(needed) + " bytes after byte " +
                                std::to_string(data_start));
  }

  GaussianSplatSet<float> out = GaussianSplatSet<float>::empty(color_degree, opacity_degree);
  out.frame = SplatFrame::kWorld;
  const int kc = sh_coeff_count(color_degree), ko = sh_coeff_count(opacity_degree);
  out.positions = Tensor<float>({count, 3});
  out.rotations = Tensor<float>({count, 4});
  out.scales = Tensor<float>({count, 3});
  out.color_sh = Tensor<float>({count, 3 * kc});
  out.opacity_sh = Tensor<float>({count, ko});
  out.source_rotation = Tensor<float>({count, 4});
  out.source_view.assign(static_cast<size_t>(count), 0);
  for (int64_t i = 0; i < count; ++i) {
    const unsigned char* row = bytes.data() + data_start + static_cast<size_t>(i) * stride;
    auto value = [&](const std::string& name) {
      const auto& [offset, prop] = columns.at(name);
      return static_cast<float>(decode(prop->type, row + offset));
    };
    out.positions[i * 3] = value("x");
    out.positions[i * 3 + 1] = value("y");
    out.positions[i * 3 + 2] = value("z");
    for (int ch = 0; ch < 3; ++ch) {
      out.color_sh[i * 3 * kc + ch] = value("f_dc_" + std::to_string(ch));
      for (int k = 1; k < kc; ++k) {
        out.color_sh[i * 3 * kc + k * 3 + ch] = value("f_rest_" + std::to_string(ch * (kc - 1) + k - 1));
      }
    }
    out.opacity_sh[i * ko] = value("opacity");
    for (int k = 1; k < ko; ++k) out.opacity_sh[i * ko + k] = value("op_rest_" + std::to_string(k - 1));
    for (int k = 0; k < 3; ++k) out.scales[i * 3 + k] = std::exp(value("scale_" + std::to_string(k)));
    for (int k = 0; k < 4; ++k) out.rotations[i * 4 + k] = value("rot_" + std::to_string(k));
    if (has_srot) {
      for (int k = 0; k < 4; ++k) out.source_rotation[i * 4 + k] = value("srot_" + std::to_string(k));
    } else {
      out.source_rotation[i * 4] = 1.0f;
    }
    if (has_view) out.source_view[i] = static_cast<int>(value("source_view"));
  }
  try {
    out.validate();
  } catch (const Error& e) {
    malformed(data_start, e.what());
  }
  return out;
}

template void export_ply(const GaussianSplatSet<float>&, const std::string&);
template void export_ply(const GaussianSplatSet<double>&, const std::string&);

}  // namespace lvt
