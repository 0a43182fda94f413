// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/model.hpp"

#include <cmath>

#include "json.hpp"

namespace lvt {

using nlohmann::json;

void ModelConfig::validate() const {
  stack.validate();
  LVT_CHECK(patch_size >= 1, ErrorCode::kInvalidArgument, "patch size must be positive");
  LVT_CHECK(conditioning_blocks >= 0, ErrorCode::kInvalidArgument, "conditioning blocks must be non-negative");
  LVT_CHECK(layout.color_degree >= 0 && layout.color_degree <= kMaxShDegree && layout.opacity_degree >= 0 &&
                layout.opacity_degree <= kMaxShDegree,
            ErrorCode::kInvalidArgument, "SH degrees must lie in [0, 3]");
  bounds.validate();
  render.validate();
  LVT_CHECK(init_scale >= bounds.scale_min && init_scale <= bounds.scale_max, ErrorCode::kInvalidArgument,
            "initial scale outside the scale bounds");
  LVT_CHECK(init_opacity > 0 && init_opacity < 1, ErrorCode::kInvalidArgument, "initial opacity must lie in (0, 1)");
  LVT_CHECK(output_gain > 0, ErrorCode::kInvalidArgument, "output gain must be positive");
}

TokenizerConfig ModelConfig::tokenizer() const {
  return {patch_size, stack.hidden_dim, layout.channels()};
}

ConditioningEncoderConfig ModelConfig::conditioning_encoder() const {
  ConditioningEncoderConfig c;
  c.hidden_dim = stack.hidden_dim;
  c.n_blocks = conditioning_blocks;
  c.n_layers = stack.layers;
  c.pe = pe;
  c.mode = conditioning;
  return c;
}

std::vector<double> ModelConfig::splat_bias() const {
  std::vector<double> bias(layout.channels(), 0.0);
  for (int c = 0; c < 3; ++c) bias[SplatLayout::kScale + c] = std::log(init_scale);
  for (int c = 0; c < 3; ++c) bias[SplatLayout::kColor + c] = init_color / kShC0;
  bias[layout.opacity_offset()] = std::log(init_opacity / (1 - init_opacity)) / kShC0;
  return bias;
}

namespace {

const char* strategy_name(NeighborStrategy s) { return s == NeighborStrategy::kSpatial ? "spatial" : "sequential"; }

NeighborStrategy parse_strategy(const std::string& s) {
  if (s == "spatial") return NeighborStrategy::kSpatial;
  if (s == "sequential") return NeighborStrategy::kSequential;
  throw Error(ErrorCode::kMalformedManifest, "unknown neighbor strategy '" + s + "'");
}

const char* conditioning_name(ConditioningMode m) {
  switch (m) {
    case ConditioningMode::kRelative: return "relative";
    case ConditioningMode::kWorld: return "world";
    case ConditioningMode::kNone: return "none";
  }
  return "relative";
}

ConditioningMode parse_conditioning(const std::string& s) {
  if (s == "relative") return ConditioningMode::kRelative;
  if (s == "world") return ConditioningMode::kWorld;
  if (s == "none") return ConditioningMode::kNone;
  throw Error(ErrorCode::kMalformedManifest, "unknown conditioning mode '" + s + "'");
}

template <typename V>
void read(const json& j, const char* key, V& out) {
  if (j.contains(key)) out = j.at(key).get<V>();
}

}  // namespace

std::string model_config_to_json(const ModelConfig& c) {
  json j;
  j["patch_size"] = c.patch_size;
  j["layers"] = c.stack.layers;
  j["hidden_dim"] = c.stack.hidden_dim;
  j["mlp_dim"] = c.stack.mlp_dim;
  j["heads"] = c.stack.heads;
  j["window"] = c.stack.window;
  j["dilation"] = c.stack.dilation;
  j["strategy"] = strategy_name(c.stack.strategy);
  j["conditioning_blocks"] = c.conditioning_blocks;
  j["pe_frequencies"] = c.pe.n_freq;
  j["pe_include_input"] = c.pe.include_input;
  j["conditioning"] = conditioning_name(c.conditioning);
  j["color_degree"] = c.layout.color_degree;
  j["opacity_degree"] = c.layout.opacity_degree;
  j["near"] = c.bounds.near;
  j["far"] = c.bounds.far;
  j["scale_min"] = c.bounds.scale_min;
  j["scale_max"] = c.bounds.scale_max;
  j["near_plane"] = c.render.near_plane;
  j["blur"] = c.render.blur;
  j["alpha_max"] = c.render.alpha_max;
  j["alpha_min"] = c.render.alpha_min;
  j["tile_size"] = c.render.tile_size;
  j["min_transmittance"] = c.render.min_transmittance;
  j["init_scale"] = c.init_scale;
  j["init_color"] = c.init_color;
  j["init_opacity"] = c.init_opacity;
  j["output_gain"] = c.output_gain;
  return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    LVT_CHECK(j.is_object(), ErrorCode::kMalformedManifest, "model config must be a JSON object");
    read(j, "patch_size", c.patch_size);
    read(j, "layers", c.stack.layers);
    read(j, "hidden_dim", c.stack.hidden_dim);
    read(j, "mlp_dim", c.stack.mlp_dim);
    read(j, "heads", c.stack.heads);
    read(j, "window", c.stack.window);
    read(j, "dilation", c.stack.dilation);
    if (j.contains("strategy")) c.stack.strategy = parse_strategy(j.at("strategy").get<std::string>());
    read(j, "conditioning_blocks", c.conditioning_blocks);
    read(j, "pe_frequencies", c.pe.n_freq);
    read(j, "pe_include_input", c.pe.include_input);
    if (j.contains("conditioning")) c.conditioning = parse_conditioning(j.at("conditioning").get<std::string>());
    read(j, "color_degree", c.layout.color_degree);
    read(j, "opacity_degree", c.layout.opacity_degree);
    read(j, "near", c.bounds.near);
    read(j, "far", c.bounds.far);
    read(j, "scale_min", c.bounds.scale_min);
    read(j, "scale_max", c.bounds.scale_max);
    read(j, "near_plane", c.render.near_plane);
    read(j, "blur", c.render.blur);
    read(j, "alpha_max", c.render.alpha_max);
    read(j, "alpha_min", c.render.alpha_min);
    read(j, "tile_size", c.render.tile_size);
    read(j, "min_transmittance", c.render.min_transmittance);
    read(j, "init_scale", c.init_scale);
    read(j, "init_color", c.init_color);
    read(j, "init_opacity", c.init_opacity);
    read(j, "output_gain", c.output_gain);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedManifest, std::string("model config: ") + e.what());
  }
  return c;
}

template <typename T>
void ViewSet<T>::validate() const {
  LVT_CHECK(!cameras.empty(), ErrorCode::kEmptyViewSet, "at least one input view is required");
  const Shape& s = images.shape();
  LVT_CHECK(s.size() == 4 && s[0] == count() && s[3] == 3, ErrorCode::kShapeMismatch,
            "images must be [N, H, W, 3] with one image per camera, got " + shape_string(s));
  for (const Camera& c : cameras) {
    LVT_CHECK(c.intrinsics.width == s[2] && c.intrinsics.height == s[1], ErrorCode::kShapeMismatch,
              "camera resolution does not match its image");
  }
}

template <typename T>
LvtModel<T>::LvtModel(ModelConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  init_tokenizer_params(params_, cfg_.tokenizer(), rng, cfg_.splat_bias());
  for (T& v : params_.at("unpatch.weight").span()) v *= static_cast<T>(cfg_.output_gain);
  init_conditioning_params(params_, cfg_.conditioning_encoder(), rng);
  init_stack_params(params_, cfg_.stack, rng);
}

template <typename T>
LvtModel<T>::LvtModel(ModelConfig cfg, ParamStore<T> params) : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
  // Shape check against a fresh init.
  const LvtModel<T> reference(cfg_, 0);
  LVT_CHECK(reference.params_.names() == params_.names(), ErrorCode::kShapeMismatch,
            "parameter names do not match the configuration");
  for (size_t i = 0; i < params_.count(); ++i) {
    LVT_CHECK(reference.params_.at(i).shape() == params_.at(i).shape(), ErrorCode::kShapeMismatch,
              "parameter " + params_.names()[i] + " has the wrong shape");
  }
}

template <typename T>
ForwardResult<T> LvtModel<T>::forward(const ParamVars<T>& vars, const ViewSet<T>& views) const {
  views.validate();
  const int n = views.count();
  const int64_t h = views.images.dim(1), w = views.images.dim(2);
  cfg_.tokenizer().validate(static_cast<int>(h), static_cast<int>(w));
  ad::Tape<T>& tape = vars.at(0).tape();

  std::vector<RayMap> raymaps;
  Tensor<T> rays({n, h, w, 3});
  for (int v = 0; v < n; ++v) {
    raymaps.push_back(local_ray_map(views.cameras[v].intrinsics));
    const Tensor<double>& d = raymaps.back().directions;
    for (int64_t i = 0; i < d.size(); ++i) rays[v * h * w * 3 + i] = static_cast<T>(d[i]);
  }

  const ad::Var<T> grid = patchify(tape.constant(views.images), tape.constant(std::move(rays)),
                                   vars("patch.weight"), vars("patch.bias"), cfg_.patch_size);
  const ad::Var<T> tokens = flatten_and_normalize(grid, vars("token_norm.gamma"), vars("token_norm.beta"));

  const NeighborGraph graph =
      build_neighbor_graph(views.cameras, cfg_.stack.window, cfg_.stack.dilation, cfg_.stack.strategy);
  const PairTable table = PairTable::from_graph(graph);
  const ConditioningEncoderConfig cond_cfg = cfg_.conditioning_encoder();
  ad::Var<T> cond_base;
  if (cond_cfg.mode != ConditioningMode::kNone) {
    cond_base = encode_conditioning_base(tape, vars, cond_cfg, pair_pose_features<T>(table, views.cameras, cond_cfg));
  }

  ForwardResult<T> out;
  const ad::Var<T> mixed = lvt_forward(tokens, graph, table, cond_base, vars, cfg_.stack, &out.counters);
  const ad::Var<T> raw =
      unpatchify(mixed, vars("unpatch.weight"), vars("unpatch.bias"), cfg_.patch_size, static_cast<int>(h),
                 static_cast<int>(w));
  const SplatVars<T> local = decode_pixel_splats(raw, std::span<const RayMap>(raymaps), cfg_.layout, cfg_.bounds);
  out.source_view = pixel_source_views(n, static_cast<int>(h), static_cast<int>(w));
  out.splats = splats_to_world(local, views.cameras, out.source_view);
  out.source_rotation = source_rotation_table<T>(views.cameras, out.source_view);
  return out;
}

template <typename T>
GaussianSplatSet<T> LvtModel<T>::predict(const ViewSet<T>& views, AttentionCounters* counters) const {
  ad::Tape<T> tape;
  const ParamVars<T> vars(tape, params_, false);
  ForwardResult<T> f = forward(vars, views);
  if (counters) *counters = f.counters;
  return to_splat_set(f.splats, SplatFrame::kWorld, cfg_.layout, std::move(f.source_view),
                      std::move(f.source_rotation));
}

template struct ViewSet<float>;
template struct ViewSet<double>;
template class LvtModel<float>;
template class LvtModel<double>;

}  // namespace lvt
