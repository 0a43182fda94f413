// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "lvt/bench.hpp"
#include "lvt/lvt_block.hpp"
#include "lvt/model.hpp"
#include "lvt/ply.hpp"
#include "lvt/pose_encoding.hpp"
#include "lvt/renderer.hpp"
#include "lvt/scene.hpp"
#include "lvt/sh.hpp"
#include "lvt/splat.hpp"
#include "lvt/synth.hpp"
#include "lvt/tokenizer.hpp"
#include "lvt/training.hpp"

namespace lvt {
namespace {

using testing::random_projection;
using testing::random_tensor;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "" : "FAILED ") + what);
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RigidPose random_pose(std::mt19937_64& rng, double translation = 1.0) {
  std::normal_distribution<double> g(0, 1);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return {q.toRotationMatrix(), translation * Vec3(g(rng), g(rng), g(rng))};
}

std::vector<Camera> random_cameras(int n, std::mt19937_64& rng) {
  std::vector<Camera> cams(n);
  for (int i = 0; i < n; ++i) {
    cams[i].id = i;
    cams[i].pose = random_pose(rng);
  }
  return cams;
}

std::vector<Camera> transformed(const std::vector<Camera>& cams, const RigidPose& g) {
  auto out = cams;
  for (auto& c : out) c.pose = c.pose.compose(g.inverse());
  return out;
}

// ---------------------------------------------------------------------------
// 1. Local attention with a full window equals dense global attention.

// Softmax attention of every token over all N*T tokens, per head, in plain loops.
Tensor<double> dense_attention_oracle(const Tensor<double>& q, const Tensor<double>& k, const Tensor<double>& v,
                                      int heads) {
  const int64_t n = q.dim(0) * q.dim(1), d = q.dim(2), dh = d / heads;
  Tensor<double> out(q.shape());
  std::vector<double> w(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    for (int h = 0; h < heads; ++h) {
      double mx = -INFINITY;
      for (int64_t j = 0; j < n; ++j) {
        double dot = 0;
        for (int64_t c = h * dh; c < (h + 1) * dh; ++c) dot += q[i * d + c] * k[j * d + c];
        w[j] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, w[j]);
      }
      double z = 0;
      for (int64_t j = 0; j < n; ++j) z += (w[j] = std::exp(w[j] - mx));
      for (int64_t j = 0; j < n; ++j) {
        for (int64_t c = h * dh; c < (h + 1) * dh; ++c) out[i * d + c] += w[j] / z * v[j * d + c];
      }
    }
  }
  return out;
}

Outcome criterion_equivalence() {
  Outcome o;
  std::mt19937_64 rng(101);
  double worst32 = 0, worst64 = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 6, t = 1 + (trial * 7) % 5, heads = 1 + trial % 3, d = heads * (2 + trial % 3);
    const auto cams = random_cameras(n, rng);
    const NeighborGraph graph = build_neighbor_graph(cams, n + trial % 4, 1, NeighborStrategy::kSpatial);
    const PairTable table = PairTable::from_graph(graph);
    const auto q = random_tensor({n, t, d}, rng), k = random_tensor({n, t, d}, rng), v = random_tensor({n, t, d}, rng);
    const Tensor<double> oracle = dense_attention_oracle(q, k, v, heads);
    const Tensor<double> zero64({table.size(), d});
    const Tensor<float> zero32({table.size(), d});
    const auto local64 = neighborhood_attention_forward(q, k, v, zero64, zero64, graph, table, heads);
    const auto local32 = neighborhood_attention_forward(q.cast<float>(), k.cast<float>(), v.cast<float>(), zero32,
                                                        zero32, graph, table, heads);
    worst64 = std::max(worst64, max_abs_diff(local64.span(), oracle.span()));
    worst32 = std::max(worst32, max_abs_diff(local32.cast<double>().span(), oracle.span()));
  }
  o.check(worst32 < 1e-5, "float max diff " + fmt("%.2e", worst32) + " < 1e-5");
  o.check(worst64 < 1e-10, "double max diff " + fmt("%.2e", worst64) + " < 1e-10");
  return o;
}

// ---------------------------------------------------------------------------
// 2. Pair counts and wall-time scaling.

Outcome criterion_scaling() {
  Outcome o;
  BenchConfig cfg;
  cfg.views = {8, 16, 32, 64};
  cfg.window = 5;
  cfg.tokens = 16;
  cfg.repeats = 5;
  const BenchReport report = bench_attention(cfg);
  bool counts = true;
  for (const BenchRow& row : report.rows) {
    const int64_t n = row.views, t2 = int64_t{cfg.tokens} * cfg.tokens;
    counts = counts && row.local_pairs == n * cfg.window * t2 && row.global_pairs == n * n * t2;
  }
  o.check(counts && report.rows.size() == 4, "pair counts equal N*w*T^2 and N^2*T^2");
  o.check(report.local_slope >= 0.8 && report.local_slope <= 1.2,
          "local slope " + fmt("%.3f", report.local_slope) + " in [0.8, 1.2]");
  o.check(report.global_slope >= 1.7 && report.global_slope <= 2.3,
          "global slope " + fmt("%.3f", report.global_slope) + " in [1.7, 2.3]");
  return o;
}

// ---------------------------------------------------------------------------
// 3. Invariance under a global rigid transform of every camera.

ModelConfig small_model_config() {
  ModelConfig cfg;
  cfg.patch_size = 4;
  cfg.stack.layers = 2;
  cfg.stack.hidden_dim = 16;
  cfg.stack.mlp_dim = 32;
  cfg.stack.heads = 2;
  cfg.stack.window = 3;
  cfg.pe.n_freq = 3;
  cfg.bounds.near = 0.5;
  cfg.bounds.far = 4.0;
  cfg.init_scale = 0.05;
  return cfg;
}

ViewSet<double> views_of(const SyntheticScene& scene, const std::vector<int>& ids) {
  ViewSet<double> v;
  const int64_t h = scene.images[0].dim(0), w = scene.images[0].dim(1);
  v.images = Tensor<double>({static_cast<int64_t>(ids.size()), h, w, 3});
  for (size_t i = 0; i < ids.size(); ++i) {
    v.cameras.push_back(scene.cameras[ids[i]]);
    const auto& img = scene.images[ids[i]];
    for (int64_t e = 0; e < img.size(); ++e) v.images[static_cast<int64_t>(i) * img.size() + e] = img[e];
  }
  return v;
}

Outcome criterion_invariance() {
  Outcome o;
  const ModelConfig cfg = small_model_config();
  const LvtModel<double> model(cfg, 31);
  const ConditioningEncoderConfig cond = cfg.conditioning_encoder();
  std::mt19937_64 rng(31);

  // Conditioning features and stack outputs on random cameras and tokens.
  const auto cams = random_cameras(6, rng);
  const auto tokens = random_tensor({6, 5, cfg.stack.hidden_dim}, rng);
  auto stack_run = [&](const std::vector<Camera>& c, std::vector<double>* conditioning) {
    ad::Tape<double> tape;
    const ParamVars<double> vars(tape, model.params(), false);
    const NeighborGraph graph = build_neighbor_graph(c, cfg.stack.window, 1, cfg.stack.strategy);
    const PairTable table = PairTable::from_graph(graph);
    const auto base = encode_conditioning_base(tape, vars, cond, pair_pose_features<double>(table, c, cond));
    conditioning->clear();
    for (int l = 0; l < cfg.stack.layers; ++l) {
      const auto layer = project_conditioning(vars, base, l).value();
      conditioning->insert(conditioning->end(), layer.span().begin(), layer.span().end());
    }
    return lvt_forward(tape.constant(tokens), graph, table, base, vars, cfg.stack).value();
  };
  std::vector<double> cond_ref, cond_moved;
  const Tensor<double> stack_ref = stack_run(cams, &cond_ref);

  // Predicted splats and renders on a synthetic scene.
  SynthConfig sc;
  sc.seed = 32;
  sc.n_views = 6;
  sc.width = 16;
  sc.height = 16;
  sc.n_splats = 64;
  sc.background = Vec3(0.1, 0.2, 0.3);
  const SyntheticScene scene = generate_synthetic_scene(sc);
  const ViewSet<double> views = views_of(scene, {0, 2, 3, 5});
  const GaussianSplatSet<double> splats = model.predict(views);
  const RenderTarget target{scene.cameras[1], sc.background};
  const Tensor<double> render_ref = render(splats, target, cfg.render).color;

  double worst_cond = 0, worst_stack = 0, worst_pos = 0, worst_rot = 0, worst_attr = 0, worst_render = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const RigidPose g = random_pose(rng, 2.0);
    worst_stack = std::max(worst_stack, max_abs_diff(stack_run(transformed(cams, g), &cond_moved).span(),
                                                     stack_ref.span()));
    worst_cond = std::max(worst_cond, max_abs_diff(cond_moved, cond_ref));

    ViewSet<double> moved = views;
    moved.cameras = transformed(views.cameras, g);
    const GaussianSplatSet<double> ms = model.predict(moved);
    const Mat3 rg = g.rotation;
    for (int64_t i = 0; i < splats.size(); ++i) {
      const Vec3 p(splats.positions[i * 3], splats.positions[i * 3 + 1], splats.positions[i * 3 + 2]);
      const Vec3 expected = g.apply(p);
      for (int a = 0; a < 3; ++a) worst_pos = std::max(worst_pos, std::abs(ms.positions[i * 3 + a] - expected[a]));
      const UnitQuaternion q{splats.rotations[i * 4], splats.rotations[i * 4 + 1], splats.rotations[i * 4 + 2],
                             splats.rotations[i * 4 + 3]};
      const Mat3 expected_rot = rg * rotation_from_quat(q);
      const UnitQuaternion mq{ms.rotations[i * 4], ms.rotations[i * 4 + 1], ms.rotations[i * 4 + 2],
                              ms.rotations[i * 4 + 3]};
      worst_rot = std::max(worst_rot, (rotation_from_quat(mq) - expected_rot).cwiseAbs().maxCoeff());
    }
    worst_attr = std::max({worst_attr, max_abs_diff(ms.scales.span(), splats.scales.span()),
                           max_abs_diff(ms.color_sh.span(), splats.color_sh.span()),
                           max_abs_diff(ms.opacity_sh.span(), splats.opacity_sh.span())});
    RenderTarget moved_target = target;
    moved_target.camera.pose = target.camera.pose.compose(g.inverse());
    worst_render =
        std::max(worst_render, max_abs_diff(render(ms, moved_target, cfg.render).color.span(), render_ref.span()));
  }
  o.check(worst_cond < 1e-9, "conditioning " + fmt("%.2e", worst_cond) + " < 1e-9");
  o.check(worst_stack < 1e-9, "stack outputs " + fmt("%.2e", worst_stack) + " < 1e-9");
  o.check(worst_pos < 1e-9, "splat positions " + fmt("%.2e", worst_pos) + " < 1e-9");
  o.check(worst_rot < 1e-9, "splat rotations " + fmt("%.2e", worst_rot) + " < 1e-9");
  o.check(worst_attr < 1e-9, "scales and SH " + fmt("%.2e", worst_attr) + " < 1e-9");
  o.check(worst_render < 1e-6, "renders " + fmt("%.2e", worst_render) + " < 1e-6");
  return o;
}

// ---------------------------------------------------------------------------
// 4. Receptive field after L blocks on a chain of views.

struct StackParams {
  StackConfig stack;
  ConditioningEncoderConfig cond;
  ParamStore<double> params;

  StackParams(int layers, int dim, int window, uint64_t seed) {
    stack.layers = layers;
    stack.hidden_dim = dim;
    stack.mlp_dim = 2 * dim;
    stack.heads = 2;
    stack.window = window;
    cond.hidden_dim = dim;
    cond.n_layers = layers;
    cond.pe.n_freq = 2;
    std::mt19937_64 rng(seed);
    init_stack_params(params, stack, rng);
    init_conditioning_params(params, cond, rng);
    // Zero-initialized tensors get random values so every path carries signal.
    std::normal_distribution<double> n(0, 0.3);
    for (const auto& name : params.names()) {
      for (double& v : params.at(name).span()) {
        if (v == 0.0) v = n(rng);
      }
    }
  }

  Tensor<double> run(const Tensor<double>& tokens, const std::vector<Camera>& cams, const NeighborGraph& graph) const {
    ad::Tape<double> tape;
    const ParamVars<double> vars(tape, params, false);
    const PairTable table = PairTable::from_graph(graph);
    const auto base = encode_conditioning_base(tape, vars, cond, pair_pose_features<double>(table, cams, cond));
    return lvt_forward(tape.constant(tokens), graph, table, base, vars, stack).value();
  }
};

// Views reachable from `source` in at most `hops` steps along "attends to" edges.
std::set<int> graph_neighborhood(const NeighborGraph& graph, int source, int hops) {
  std::set<int> reached = {source};
  for (int h = 0; h < hops; ++h) {
    std::set<int> next = reached;
    for (int v = 0; v < graph.num_views(); ++v) {
      for (int u : graph.neighbors[v]) {
        if (reached.contains(u)) next.insert(v);
      }
    }
    reached = next;
  }
  return reached;
}

Outcome criterion_receptive_field() {
  Outcome o;
  std::vector<Camera> cams(9);
  for (int i = 0; i < 9; ++i) {
    cams[i].id = i;
    cams[i].pose.translation = Vec3(-static_cast<double>(i), 0, 0);
  }
  const NeighborGraph graph = build_neighbor_graph(cams, 3, 1, NeighborStrategy::kSpatial);
  bool chain = true;
  for (int v = 0; v < 9; ++v) {
    for (int u : graph.neighbors[v]) chain = chain && (std::abs(u - v) <= 1 || (v == 0 && u == 2) || (v == 8 && u == 6));
  }
  o.check(chain, "window-3 graph over collinear cameras is a chain");
  std::mt19937_64 rng(41);
  const auto x = random_tensor({9, 4, 8}, rng);
  const int64_t per_view = 4 * 8;
  bool sets_match = true;
  double leakage = 0, weakest = INFINITY;
  for (int layers = 1; layers <= 3; ++layers) {
    const StackParams f(layers, 8, 3, 40 + layers);
    const Tensor<double> base = f.run(x, cams, graph);
    for (int source = 0; source < 9; ++source) {
      Tensor<double> bumped = x;
      for (int64_t i = 0; i < per_view; ++i) bumped[source * per_view + i] += 1e-3 * std::sin(1.0 + i);
      const Tensor<double> out = f.run(bumped, cams, graph);
      const std::set<int> expected = graph_neighborhood(graph, source, layers);
      std::set<int> influenced;
      for (int v = 0; v < 9; ++v) {
        double m = 0;
        for (int64_t i = 0; i < per_view; ++i) m = std::max(m, std::abs(out[v * per_view + i] - base[v * per_view + i]));
        if (expected.contains(v)) {
          weakest = std::min(weakest, m);
        } else {
          leakage = std::max(leakage, m);
        }
        if (m >= 1e-12) influenced.insert(v);
      }
      sets_match = sets_match && influenced == expected;
    }
  }
  o.check(sets_match, "influence sets equal graph-distance <= L neighborhoods for L = 1, 2, 3");
  o.check(leakage < 1e-12, "leakage " + fmt("%.1e", leakage) + " < 1e-12");
  o.check(weakest > 1e-9, "weakest in-set response " + fmt("%.1e", weakest));
  return o;
}

// ---------------------------------------------------------------------------
// 5. Finite-difference gradient checks.

Tensor<double> uniform_tensor(Shape s, std::mt19937_64& rng, double lo = 0, double hi = 1) {
  Tensor<double> t(std::move(s));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.span()) v = u(rng);
  return t;
}

// Non-zero biases and shifts so that every term contributes.
void perturb_offsets(ParamStore<double>& store, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 0.1);
  for (const auto& name : store.names()) {
    if (name.ends_with("bias") || name.ends_with("beta")) {
      for (double& v : store.at(name).span()) v = n(rng);
    }
  }
}

testing::GradCheckResult grad_tokenizer() {
  std::mt19937_64 rng(51);
  ParamStore<double> store;
  const TokenizerConfig cfg{2, 6, 5};
  init_tokenizer_params(store, cfg, rng, {0.1, -0.2, 0.3, 0.0, 0.5});
  perturb_offsets(store, rng);
  std::vector<Tensor<double>> inputs = {uniform_tensor({2, 4, 4, 3}, rng), random_tensor({2, 4, 4, 3}, rng)};
  for (size_t i = 0; i < store.count(); ++i) inputs.push_back(store.at(i));
  testing::GradCheckOptions opt;
  opt.step = 1e-5;
  opt.floor = 1e-6;
  return testing::check_gradients(
      [&](ad::Tape<double>&, const std::vector<ad::Var<double>>& in) {
        const ParamVars<double> p(store, std::vector<ad::Var<double>>(in.begin() + 2, in.end()));
        const auto grid = patchify(in[0], in[1], p("patch.weight"), p("patch.bias"), 2);
        const auto flat = flatten_and_normalize(grid, p("token_norm.gamma"), p("token_norm.beta"));
        return random_projection(unpatchify(flat, p("unpatch.weight"), p("unpatch.bias"), 2, 4, 4), 3);
      },
      inputs, opt);
}

testing::GradCheckResult grad_conditioning() {
  ConditioningEncoderConfig cfg;
  cfg.hidden_dim = 8;
  cfg.n_layers = 2;
  cfg.pe.n_freq = 3;
  std::mt19937_64 rng(52);
  ParamStore<double> store;
  init_conditioning_params(store, cfg, rng);
  perturb_offsets(store, rng);
  std::vector<Camera> cams(3);
  for (auto& c : cams) c.pose = random_pose(rng, 0.5);
  const PairTable table = PairTable::from_graph(full_neighbor_graph(3));
  const Tensor<double> features = pair_pose_features<double>(table, cams, cfg);
  testing::GradCheckOptions opt;
  opt.step = 1e-5;
  opt.floor = 1e-6;
  return testing::check_param_gradients(
      store,
      [&](ad::Tape<double>& tape, const ParamVars<double>& p) {
        const auto base = encode_conditioning_base(tape, p, cfg, features);
        return ad::add(random_projection(project_conditioning(p, base, 0), 1),
                       random_projection(project_conditioning(p, base, 1), 2));
      },
      opt);
}

// Stack-level fixture: L=2, d=16, h=2, T=4, three views.
struct GradStack {
  StackParams f{2, 16, 2, 53};
  std::vector<Camera> cams;
  NeighborGraph graph;
  PairTable table;

  GradStack() {
    std::mt19937_64 rng(53);
    cams = random_cameras(3, rng);
    graph = build_neighbor_graph(cams, 2, 1, NeighborStrategy::kSpatial);
    table = PairTable::from_graph(graph);
  }

  std::vector<Tensor<double>> inputs(const Tensor<double>& lead) const {
    std::vector<Tensor<double>> in = {lead};
    for (size_t i = 0; i < f.params.count(); ++i) in.push_back(f.params.at(i));
    return in;
  }

  ParamVars<double> vars(const std::vector<ad::Var<double>>& in, size_t skip) const {
    return ParamVars<double>(f.params, std::vector<ad::Var<double>>(in.begin() + static_cast<long>(skip), in.end()));
  }
};

testing::GradCheckResult grad_attention_block() {
  const GradStack s;
  std::mt19937_64 rng(54);
  const auto x = random_tensor({3, 4, 16}, rng);
  auto in = s.inputs(x);
  in.insert(in.begin() + 1, random_tensor({s.table.size(), 16}, rng, 0.5));
  testing::GradCheckOptions opt;
  opt.step = 1e-5;
  opt.floor = 1e-6;
  opt.max_per_input = 32;
  return testing::check_gradients(
      [&](ad::Tape<double>&, const std::vector<ad::Var<double>>& v) {
        return random_projection(local_attention(v[0], s.graph, s.table, v[1], s.vars(v, 2), 0, 2), 5);
      },
      in, opt);
}

testing::GradCheckResult grad_feed_forward() {
  const GradStack s;
  std::mt19937_64 rng(55);
  testing::GradCheckOptions opt;
  opt.step = 1e-5;
  opt.floor = 1e-6;
  opt.max_per_input = 32;
  return testing::check_gradients(
      [&](ad::Tape<double>&, const std::vector<ad::Var<double>>& v) {
        return random_projection(feed_forward(v[0], s.vars(v, 1), 1), 6);
      },
      s.inputs(random_tensor({3, 4, 16}, rng)), opt);
}

testing::GradCheckResult grad_stack() {
  const GradStack s;
  std::mt19937_64 rng(56);
  const Tensor<double> features = pair_pose_features<double>(s.table, s.cams, s.f.cond);
  testing::GradCheckOptions opt;
  opt.step = 1e-5;
  opt.floor = 1e-6;
  opt.max_per_input = 24;
  return testing::check_gradients(
      [&](ad::Tape<double>& tape, const std::vector<ad::Var<double>>& v) {
        const ParamVars<double> p = s.vars(v, 1);
        const auto base = encode_conditioning_base(tape, p, s.f.cond, features);
        return random_projection(lvt_forward(v[0], s.graph, s.table, base, p, s.f.stack), 7);
      },
      s.inputs(random_tensor({3, 4, 16}, rng)), opt);
}

testing::GradCheckResult grad_decode() {
  std::mt19937_64 rng(57);
  std::vector<Camera> cams(2);
  for (int i = 0; i < 2; ++i) {
    cams[i].id = i;
    cams[i].intrinsics = {5, 5, 1, 1, 2, 2};
    cams[i].pose = random_pose(rng);
  }
  std::vector<RayMap> rays;
  for (const auto& c : cams) rays.push_back(local_ray_map(c.intrinsics));
  const auto source_view = pixel_source_views(2, 2, 2);
  const SplatLayout layout{1, 1};
  Tensor<double> raw = random_tensor({2, 2, 2, layout.channels()}, rng);
  // Scale channels stay inside the clamp range.
  for (int64_t n = 0; n < 8; ++n) {
    for (int a = 0; a < 3; ++a) raw[n * layout.channels() + a] = -3 + 0.5 * raw[n * layout.channels() + a];
  }
  testing::GradCheckOptions opt;
  opt.floor = 1e-6;
  return testing::check_gradients(
      [&](ad::Tape<double>&, const std::vector<ad::Var<double>>& in) {
        const auto world = splats_to_world(decode_pixel_splats(in[0], rays, layout, {}), cams, source_view);
        return ad::add(ad::add(random_projection(world.positions, 1), random_projection(world.rotations, 2)),
                       ad::add(random_projection(world.scales, 3), ad::add(random_projection(world.color_sh, 4),
                                                                           random_projection(world.opacity_sh, 5))));
      },
      {raw}, opt);
}

// Analytic basis derivatives against central differences, up to degree 3.
testing::GradCheckResult grad_sh() {
  testing::GradCheckResult r;
  std::mt19937_64 rng(58);
  const int k = sh_coeff_count(kMaxShDegree);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 d = sample_unit_direction(rng);
    std::vector<double> jac(static_cast<size_t>(k) * 3), up(k), down(k);
    sh_basis_jacobian(d.x(), d.y(), d.z(), kMaxShDegree, jac.data());
    for (int a = 0; a < 3; ++a) {
      Vec3 p = d, m = d;
      p[a] += h;
      m[a] -= h;
      sh_basis_unchecked(p.x(), p.y(), p.z(), kMaxShDegree, up.data());
      sh_basis_unchecked(m.x(), m.y(), m.z(), kMaxShDegree, down.data());
      for (int c = 0; c < k; ++c) {
        const double numeric = (up[c] - down[c]) / (2 * h), analytic = jac[c * 3 + a];
        const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        ++r.checked;
        if (rel > r.max_rel_error) {
          r.max_rel_error = rel;
          r.worst = "basis " + std::to_string(c) + " axis " + std::to_string(a);
        }
      }
    }
  }
  return r;
}

testing::GradCheckResult grad_regularizer() {
  std::mt19937_64 init(59);
  const auto coeffs = random_tensor({20, 9}, init);
  testing::GradCheckResult worst;
  for (auto mode : {OpacityRegularizerMode::kSphericalHarmonics, OpacityRegularizerMode::kScalar}) {
    const Tensor<double> c = mode == OpacityRegularizerMode::kScalar ? coeffs.reshaped({180, 1}) : coeffs;
    testing::GradCheckOptions opt;
    opt.floor = 1e-6;
    const auto r = testing::check_gradients(
        [&](ad::Tape<double>&, const std::vector<ad::Var<double>>& in) {
          std::mt19937_64 rng(21);
          return opacity_regularizer(in[0], mode, rng, 2);
        },
        {c}, opt);
    worst.checked += r.checked;
    if (r.max_rel_error >= worst.max_rel_error) {
      worst.max_rel_error = r.max_rel_error;
      worst.worst = r.worst;
    }
  }
  return worst;
}

GaussianSplatSet<double> random_world_splats(int n, int color_degree, int opacity_degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  auto s = GaussianSplatSet<double>::empty(color_degree, opacity_degree);
  s.frame = SplatFrame::kWorld;
  const int kc = sh_coeff_count(color_degree), ko = sh_coeff_count(opacity_degree);
  s.positions = Tensor<double>({n, 3});
  s.rotations = Tensor<double>({n, 4});
  s.scales = Tensor<double>({n, 3});
  s.color_sh = Tensor<double>({n, 3 * kc});
  s.opacity_sh = Tensor<double>({n, ko});
  s.source_rotation = Tensor<double>({n, 4});
  s.source_view.assign(static_cast<size_t>(n), 0);
  auto unit_quat = [&](double spread, double* out) {
    Eigen::Vector4d q(1 + spread * u(rng), spread * u(rng), spread * u(rng), spread * u(rng));
    q.normalize();
    for (int a = 0; a < 4; ++a) out[a] = q[a];
  };
  for (int i = 0; i < n; ++i) {
    const double pos[3] = {0.25 * u(rng), 0.25 * u(rng), 2.0 + 0.5 * u(rng)};
    for (int a = 0; a < 3; ++a) {
      s.positions[i * 3 + a] = pos[a];
      s.scales[i * 3 + a] = 0.08 + 0.04 * u(rng);
    }
    unit_quat(0.3, s.rotations.data() + i * 4);
    unit_quat(1.0, s.source_rotation.data() + i * 4);
    for (int k = 0; k < 3 * kc; ++k) s.color_sh[i * 3 * kc + k] = k < 3 ? (0.45 + 0.15 * u(rng)) / kShC0 : 0.1 * u(rng);
    for (int k = 0; k < ko; ++k) s.opacity_sh[i * ko + k] = k == 0 ? (0.5 + 0.8 * u(rng)) / kShC0 : 0.3 * u(rng);
  }
  return s;
}

testing::GradCheckResult grad_rasterizer() {
  std::mt19937_64 rng(60);
  const int cd = 2, od = 1;
  const GaussianSplatSet<double> set = random_world_splats(6, cd, od, rng);
  RenderTarget target;
  target.background = Vec3(0.2, 0.3, 0.25);
  target.camera.intrinsics = {14.0, 14.0, 6.0, 6.0, 12, 12};
  target.camera.pose.rotation = rotation_from_quat(UnitQuaternion{0.9997, 0.02, 0.01, -0.01});
  Eigen::Quaterniond fix(target.camera.pose.rotation);
  target.camera.pose.rotation = fix.normalized().toRotationMatrix();
  RenderSettings settings;
  settings.alpha_min = 0;
  settings.min_transmittance = 0;
  const SplatLayout layout{cd, od};
  testing::GradCheckOptions opt;
  opt.floor = 1e-6;
  return testing::check_gradients(
      [&](ad::Tape<double>&, const std::vector<ad::Var<double>>& in) {
        const SplatVars<double> vars{in[0], in[1], in[2], in[3], in[4]};
        return random_projection(render(vars, layout, set.source_rotation, target, settings), 99);
      },
      {set.positions, set.rotations, set.scales, set.color_sh, set.opacity_sh}, opt);
}

ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.patch_size = 4;
  cfg.stack.layers = 2;
  cfg.stack.hidden_dim = 16;
  cfg.stack.mlp_dim = 32;
  cfg.stack.heads = 2;
  cfg.stack.window = 2;
  cfg.pe.n_freq = 2;
  cfg.render.alpha_min = 0;
  cfg.render.min_transmittance = 0;
  cfg.bounds.near = 0.5;
  cfg.bounds.far = 4.0;
  cfg.init_scale = 0.05;
  return cfg;
}

testing::GradCheckResult grad_pipeline() {
  const ModelConfig cfg = micro_config();
  const LvtModel<double> model(cfg, 61);
  SynthConfig sc;
  sc.seed = 61;
  sc.n_splats = 48;
  sc.n_views = 4;
  sc.width = 16;
  sc.height = 16;
  sc.background = Vec3(0.2, 0.2, 0.2);
  const SyntheticScene scene = generate_synthetic_scene(sc);
  const ViewSet<double> inputs = views_of(scene, {0, 2});
  std::vector<RenderTarget> targets;
  std::vector<Tensor<double>> target_images;
  for (int t : {1, 3}) {
    targets.push_back({scene.cameras[t], sc.background});
    target_images.push_back(scene.images[t].cast<double>());
  }
  LossConfig loss;
  loss.regularizer_weight = 0.01;
  auto run = [&](const ParamVars<double>& vars) {
    const auto f = model.forward(vars, inputs);
    std::vector<ad::Var<double>> rendered;
    for (const auto& t : targets) rendered.push_back(render(f.splats, cfg.layout, f.source_rotation, t, cfg.render));
    std::mt19937_64 rng(3);
    return reconstruction_loss<double>(rendered, target_images, f.splats.opacity_sh, loss, rng);
  };
  ad::Tape<double> tape;
  const ParamVars<double> vars(tape, model.params());
  tape.backward(run(vars).total);
  const auto grads = vars.gradients();

  testing::GradCheckResult r;
  std::mt19937_64 pick(62);
  const int64_t total = model.params().total_elements();
  ParamStore<double> p = model.params();
  for (int sample = 0; sample < 32; ++sample) {
    int64_t e = std::uniform_int_distribution<int64_t>(0, total - 1)(pick);
    size_t t = 0;
    while (e >= p.at(t).size()) e -= p.at(t++).size();
    const double h = 1e-5, saved = p.at(t)[e];
    auto eval = [&](double value) {
      p.at(t)[e] = value;
      ad::Tape<double> fd_tape;
      return run(ParamVars<double>(fd_tape, p, false)).loss;
    };
    const double numeric = (eval(saved + h) - eval(saved - h)) / (2 * h);
    p.at(t)[e] = saved;
    const double analytic = grads[t][e];
    const double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    ++r.checked;
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst = model.params().names()[t] + "[" + std::to_string(e) + "]";
    }
  }
  return r;
}

Outcome criterion_gradients() {
  Outcome o;
  const auto t0 = Clock::now();
  struct Check {
    const char* name;
    std::function<testing::GradCheckResult()> run;
    double tolerance;
  };
  const std::vector<Check> checks = {
      {"tokenizer", grad_tokenizer, 1e-4},         {"conditioning encoder", grad_conditioning, 1e-4},
      {"attention block", grad_attention_block, 1e-4}, {"feed-forward", grad_feed_forward, 1e-4},
      {"transformer stack", grad_stack, 1e-4},     {"splat decode", grad_decode, 1e-4},
      {"SH basis", grad_sh, 1e-4},                 {"opacity regularizer", grad_regularizer, 1e-4},
      {"rasterizer", grad_rasterizer, 1e-3},       {"micro-pipeline", grad_pipeline, 1e-3},
  };
  for (const Check& c : checks) {
    const auto r = c.run();
    o.check(r.max_rel_error < c.tolerance && r.checked > 0,
            std::string(c.name) + " " + fmt("%.1e", r.max_rel_error) + " < " + fmt("%.0e", c.tolerance) + " (" +
                std::to_string(r.checked) + " entries" + (r.worst.empty() ? "" : ", worst " + r.worst) + ")");
  }
  const double elapsed = seconds_since(t0);
  o.check(elapsed < 900, "runtime " + fmt("%.0f", elapsed) + " s < 900 s");
  return o;
}

// ---------------------------------------------------------------------------
// 6. Regularizer closed forms.

Outcome criterion_regularizer() {
  Outcome o;
  std::mt19937_64 rng(71);
  const auto sh = OpacityRegularizerMode::kSphericalHarmonics;
  const auto scalar = OpacityRegularizerMode::kScalar;
  o.check(opacity_regularizer(Tensor<double>({64, 4}), sh, rng) == 0.0 &&
              opacity_regularizer(Tensor<double>({64, 9}), sh, rng, 3) == 0.0 &&
              opacity_regularizer(Tensor<double>({64, 1}), scalar, rng) == 0.0,
          "zero coefficients give exactly 0");
  // 0.28209479 is the 8-digit rounding of 1 / (2 sqrt(pi)).
  const double y00 = 0.5 / std::sqrt(std::numbers::pi);
  double worst_dc = 0;
  for (double c : {0.3, -1.7, 4.0, 1e-3}) {
    Tensor<double> coeffs({40, 4});
    for (int64_t n = 0; n < 40; ++n) coeffs[n * 4] = c;
    worst_dc = std::max(worst_dc, std::abs(opacity_regularizer(coeffs, sh, rng, 2) - std::abs(c) * y00));
  }
  o.check(std::round(y00 * 1e8) == 28209479.0 && worst_dc < 1e-9,
          "DC-only |c| * 0.28209479 within " + fmt("%.1e", worst_dc));
  const Tensor<double> dyadic({4, 1}, std::vector<double>{0.5, -0.25, 0.75, -1.5});
  const bool exact = opacity_regularizer(dyadic, scalar, rng) == 0.75;
  const auto r = random_tensor({33, 1}, rng);
  double oracle = 0;
  for (double v : r.span()) oracle += std::abs(v);
  oracle /= 33;
  const double err = std::abs(opacity_regularizer(r, scalar, rng) - oracle);
  o.check(exact && err < 1e-15, "scalar fallback equals mean |sigma| (random error " + fmt("%.1e", err) + ")");
  return o;
}

// ---------------------------------------------------------------------------
// 7 and 8. Overfitting one synthetic scene, then varying the input count.

constexpr int kSeeds = 5;
const std::vector<int> kTrainInputs = {0, 2, 4, 6, 8, 10, 12, 14};
const std::vector<int> kTargetPool = {0, 1, 2, 4, 5, 6, 8, 9, 10, 12, 13, 14};
const std::vector<int> kHeldOut = {3, 7, 11};
const std::vector<int> kNotHeldOut = {0, 1, 2, 4, 5, 6, 8, 9, 10, 12, 13, 14, 15};

struct OverfitRun {
  uint64_t seed = 0;
  SyntheticScene scene;
  std::optional<LvtModel<float>> model;
  int steps = 0;
  double train_psnr = 0;
  double held_psnr = 0;
  double seconds = 0;
};

ModelConfig overfit_config() {
  ModelConfig cfg;
  cfg.patch_size = 8;
  cfg.stack.layers = 4;
  cfg.stack.hidden_dim = 128;
  cfg.stack.mlp_dim = 256;
  cfg.stack.heads = 4;
  cfg.stack.window = 5;
  cfg.layout = {1, 1};
  return cfg;
}

SyntheticScene overfit_scene(uint64_t seed) {
  SynthConfig sc;
  sc.seed = seed;
  sc.n_views = 16;
  sc.width = 64;
  sc.height = 64;
  sc.n_splats = 256;
  return generate_synthetic_scene(sc);
}

// Mean PSNR of `targets` rendered from splats predicted on `inputs`.
double mean_psnr(const LvtModel<float>& model, const SyntheticScene& scene, const std::vector<int>& inputs,
                 const std::vector<int>& targets) {
  SampleSpec spec;
  spec.inputs = inputs;
  spec.targets = targets;
  const TrainBatch<float> batch = make_batch(scene.cameras, scene.images, spec, Vec3::Zero());
  const GaussianSplatSet<float> splats = model.predict(batch.inputs);
  const auto rendered = render_targets(splats, batch.targets, model.config().render);
  double sum = 0;
  for (size_t i = 0; i < rendered.size(); ++i) sum += psnr_from_mse(image_mse(rendered[i], batch.target_images[i]));
  return sum / static_cast<double>(rendered.size());
}

// Trains until the train-target PSNR reaches `goal` (checked every 250 steps)
// or `max_steps` pass; a positive `fixed_steps` trains exactly that long.
// With `random_inputs` every step draws 8 inputs and 2 targets from the
// frames that are not held out; otherwise the inputs are the even frames.
OverfitRun train_overfit(const ModelConfig& cfg, uint64_t seed, double goal, int max_steps, int fixed_steps = 0,
                         bool random_inputs = false) {
  OverfitRun run;
  run.seed = seed;
  run.scene = overfit_scene(seed);
  run.model.emplace(cfg, seed);
  const ScheduleConfig schedule{1e-3, 200, max_steps};
  Trainer<float> trainer(*run.model, LossConfig{}, schedule, AdamConfig{}, seed);
  std::mt19937_64 rng(seed);
  const auto t0 = Clock::now();
  const int limit = fixed_steps > 0 ? fixed_steps : max_steps;
  for (int s = 1; s <= limit; ++s) {
    SampleSpec spec;
    if (random_inputs) {
      std::vector<int> frames = kNotHeldOut;
      std::shuffle(frames.begin(), frames.end(), rng);
      spec.inputs.assign(frames.begin(), frames.begin() + 8);
      std::sort(spec.inputs.begin(), spec.inputs.end());
      spec.targets = {frames[8], frames[9]};
    } else {
      spec.inputs = kTrainInputs;
      std::vector<int> pool = kTargetPool;
      std::shuffle(pool.begin(), pool.end(), rng);
      spec.targets = {pool[0], pool[1]};
    }
    trainer.step(make_batch(run.scene.cameras, run.scene.images, spec, Vec3::Zero()));
    run.steps = s;
    if (fixed_steps == 0 && (s % 250 == 0 || s == limit)) {
      run.train_psnr = mean_psnr(*run.model, run.scene, kTrainInputs, kTargetPool);
      if (run.train_psnr >= goal) break;
    }
  }
  run.train_psnr = mean_psnr(*run.model, run.scene, kTrainInputs, kTargetPool);
  run.held_psnr = mean_psnr(*run.model, run.scene, kTrainInputs, kHeldOut);
  run.seconds = seconds_since(t0);
  return run;
}

std::vector<OverfitRun>& overfit_runs() {
  static std::vector<OverfitRun> runs = [] {
    std::vector<OverfitRun> out;
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
      out.push_back(train_overfit(overfit_config(), seed, 28.0, 3000));
      const auto& r = out.back();
      std::printf("  seed %llu: %d steps, train %.2f dB, held-out %.2f dB, %.0f s\n",
                  static_cast<unsigned long long>(seed), r.steps, r.train_psnr, r.held_psnr, r.seconds);
      std::fflush(stdout);
    }
    return out;
  }();
  return runs;
}

Outcome criterion_overfit() {
  Outcome o;
  std::vector<double> train, held;
  double total = 0;
  for (const auto& r : overfit_runs()) {
    train.push_back(r.train_psnr);
    held.push_back(r.held_psnr);
    total += r.seconds;
  }
  o.check(median(train) >= 28, "median train PSNR " + fmt("%.2f", median(train)) + " dB >= 28");
  o.check(median(held) >= 22, "median held-out PSNR " + fmt("%.2f", median(held)) + " dB >= 22");
  o.check(total < 2700, "training time " + fmt("%.0f", total) + " s < 2700 s");
  return o;
}

const std::vector<int> kSixInputs = {2, 4, 6, 8, 10, 12};
const std::vector<int>& kEightInputs = kTrainInputs;
const std::vector<int>& kTwelveInputs = kTargetPool;

constexpr int kSequenceSteps = 1000;

Outcome criterion_sequence_length() {
  Outcome o;
  std::vector<double> drops;
  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    const OverfitRun r = train_overfit(overfit_config(), seed, 0, 3000, kSequenceSteps, true);
    const double p6 = mean_psnr(*r.model, r.scene, kSixInputs, kHeldOut);
    const double p8 = mean_psnr(*r.model, r.scene, kEightInputs, kHeldOut);
    const double p12 = mean_psnr(*r.model, r.scene, kTwelveInputs, kHeldOut);
    drops.push_back(p8 - p12);
    std::printf("  local seed %llu: 6 views %.2f, 8 views %.2f, 12 views %.2f dB, %.0f s\n",
                static_cast<unsigned long long>(seed), p6, p8, p12, r.seconds);
    std::fflush(stdout);
  }
  // Dense twin: the window covers every view; same samples and step count as seed 0.
  ModelConfig dense = overfit_config();
  dense.stack.window = 16;
  const OverfitRun twin = train_overfit(dense, 0, 0, 3000, kSequenceSteps, true);
  const double g6 = mean_psnr(*twin.model, twin.scene, kSixInputs, kHeldOut);
  const double g8 = mean_psnr(*twin.model, twin.scene, kEightInputs, kHeldOut);
  const double g12 = mean_psnr(*twin.model, twin.scene, kTwelveInputs, kHeldOut);
  std::printf("  global twin seed 0: 6 views %.2f, 8 views %.2f, 12 views %.2f dB, %.0f s\n", g6, g8, g12,
              twin.seconds);
  o.check(median(drops) < 3, "local median 8->12 view drop " + fmt("%.2f", median(drops)) + " dB < 3");
  o.notes.push_back("global twin 8->12 view drop " + fmt("%.2f", g8 - g12) + " dB (reported only)");
  return o;
}

// ---------------------------------------------------------------------------
// 9. Schedule values and loss assembly.

Outcome criterion_schedule_and_loss() {
  Outcome o;
  const ScheduleConfig cfg{2e-4, 2000, 150000};
  const double mid = 2000 + (150000 - 2000) / 2.0;
  const double quarter = 2000 + (150000 - 2000) / 4.0;
  const std::vector<std::pair<int64_t, double>> expected = {
      {0, 0.0},
      {1000, 1e-4},
      {2000, 2e-4},
      {static_cast<int64_t>(quarter), 2e-4 * 0.5 * (1 + std::cos(std::numbers::pi * 0.25))},
      {static_cast<int64_t>(mid), 1e-4},
      {150000, 0.0},
  };
  double worst_lr = 0;
  for (const auto& [step, value] : expected) worst_lr = std::max(worst_lr, std::abs(lr_at(step, cfg) - value));
  o.check(worst_lr < 1e-12, "lr_at max error " + fmt("%.1e", worst_lr) + " < 1e-12");

  std::mt19937_64 rng(91);
  std::vector<Tensor<double>> rendered, targets;
  for (int k = 0; k < 3; ++k) {
    rendered.push_back(uniform_tensor({6, 7, 3}, rng));
    targets.push_back(uniform_tensor({6, 7, 3}, rng));
  }
  const auto coeffs = random_tensor({15, 4}, rng);
  LossConfig loss;
  loss.perceptual = PerceptualMode::kGradientDifference;
  loss.perceptual_weight = 0.05;
  loss.regularizer_weight = 0.001;
  std::mt19937_64 loss_rng(77), oracle_rng(77);
  const auto terms = reconstruction_loss<double>(rendered, targets, coeffs, loss, loss_rng);

  auto mse = [](const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0;
    for (int64_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
  };
  auto gradient_difference = [](const Tensor<double>& x, const Tensor<double>& y) {
    const int64_t h = x.dim(0), w = x.dim(1);
    auto at = [&](const Tensor<double>& t, int64_t r, int64_t c, int ch) { return t[(r * w + c) * 3 + ch]; };
    double dx = 0, dy = 0;
    for (int64_t r = 0; r < h; ++r) {
      for (int64_t c = 0; c < w; ++c) {
        for (int ch = 0; ch < 3; ++ch) {
          if (c + 1 < w) dx += std::abs(at(x, r, c + 1, ch) - at(x, r, c, ch) - at(y, r, c + 1, ch) + at(y, r, c, ch));
          if (r + 1 < h) dy += std::abs(at(x, r + 1, c, ch) - at(x, r, c, ch) - at(y, r + 1, c, ch) + at(y, r, c, ch));
        }
      }
    }
    return 0.5 * (dx / static_cast<double>(h * (w - 1) * 3) + dy / static_cast<double>((h - 1) * w * 3));
  };
  double recon = 0;
  for (int k = 0; k < 3; ++k) recon += mse(rendered[k], targets[k]) + 0.05 * gradient_difference(rendered[k], targets[k]);
  recon /= 3;
  double reg = 0;
  for (int64_t n = 0; n < 15; ++n) {
    const Vec3 d = sample_unit_direction(oracle_rng);
    const double y[4] = {kShC0, 0.4886025119029199 * d.y(), 0.4886025119029199 * d.z(), 0.4886025119029199 * d.x()};
    double dot = 0;
    for (int k = 0; k < 4; ++k) dot += coeffs[n * 4 + k] * y[k];
    reg += std::abs(dot);
  }
  reg /= 15;
  const double err = std::abs(terms.loss - (recon + 0.001 * reg));
  o.check(err < 1e-9, "loss assembly error " + fmt("%.1e", err) + " < 1e-9");
  return o;
}

// ---------------------------------------------------------------------------
// 10. File formats and synthetic determinism.

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / ("lvt_acceptance_" + name)) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& n) const { return (path / n).string(); }
};

double max_rel_diff(const Tensor<float>& a, const Tensor<float>& b) {
  double m = 0;
  for (int64_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]) / std::max(1.0, std::abs(static_cast<double>(b[i]))));
  }
  return m;
}

Outcome criterion_formats() {
  Outcome o;
  SynthConfig sc;
  sc.seed = 101;
  sc.n_views = 5;
  sc.width = 24;
  sc.height = 16;
  sc.n_splats = 80;
  sc.color_degree = 2;
  const SyntheticScene a = generate_synthetic_scene(sc);
  const SyntheticScene b = generate_synthetic_scene(sc);
  sc.seed = 102;
  const SyntheticScene c = generate_synthetic_scene(sc);
  bool same = a.ground_truth.positions.vec() == b.ground_truth.positions.vec() &&
              a.ground_truth.color_sh.vec() == b.ground_truth.color_sh.vec();
  for (size_t i = 0; i < a.images.size(); ++i) {
    same = same && a.images[i].vec() == b.images[i].vec() &&
           a.cameras[i].pose.matrix() == b.cameras[i].pose.matrix();
  }
  o.check(same && a.images[0].vec() != c.images[0].vec(), "synth is bit-identical per seed and differs across seeds");

  const TempDir dir("formats");
  export_ply(a.ground_truth, dir.file("gt.ply"));
  const GaussianSplatSet<float> back = import_ply(dir.file("gt.ply"));
  const auto& gt = a.ground_truth;
  const double ply_err = std::max({max_rel_diff(back.positions, gt.positions), max_rel_diff(back.rotations, gt.rotations),
                                   max_rel_diff(back.scales, gt.scales), max_rel_diff(back.color_sh, gt.color_sh),
                                   max_rel_diff(back.opacity_sh, gt.opacity_sh),
                                   max_rel_diff(back.source_rotation, gt.source_rotation)});
  const bool ply_meta = back.size() == gt.size() && back.color_degree == gt.color_degree &&
                        back.opacity_degree == gt.opacity_degree && back.source_view == gt.source_view &&
                        back.frame == SplatFrame::kWorld;
  o.check(ply_meta && ply_err < 2.4e-7, "PLY round trip max relative error " + fmt("%.1e", ply_err));

  write_synthetic_scene(a, dir.path.string());
  const SceneManifest m = load_manifest(dir.file("manifest.json"), false);
  save_manifest(m, dir.file("copy.json"));
  const SceneManifest again = load_manifest(dir.file("copy.json"), false);
  bool manifest_same = again.views.size() == m.views.size() && again.near == m.near && again.far == m.far &&
                       again.ground_truth == m.ground_truth && again.normalization.scale == m.normalization.scale &&
                       again.normalization.translation == m.normalization.translation;
  for (size_t i = 0; manifest_same && i < m.views.size(); ++i) {
    manifest_same = again.views[i].image == m.views[i].image && again.views[i].intrinsics == m.views[i].intrinsics &&
                    again.views[i].camera_from_world == m.views[i].camera_from_world &&
                    m.views[i].camera_from_world == a.manifest.views[i].camera_from_world;
  }
  o.check(manifest_same, "manifest save/load is lossless");
  return o;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double budget_seconds;  // 0 when no bound applies
};

}  // namespace
}  // namespace lvt

int main(int argc, char** argv) {
  using namespace lvt;
  const std::vector<Criterion> criteria = {
      {1, "local/global equivalence", criterion_equivalence, 60},
      {2, "linear vs quadratic scaling", criterion_scaling, 600},
      {3, "transformation invariance", criterion_invariance, 0},
      {4, "receptive-field growth", criterion_receptive_field, 0},
      {5, "gradient integrity", criterion_gradients, 0},
      {6, "regularizer closed forms", criterion_regularizer, 0},
      {7, "overfit smoke", criterion_overfit, 0},
      {8, "sequence-length robustness", criterion_sequence_length, 0},
      {9, "schedule and loss", criterion_schedule_and_loss, 0},
      {10, "format round trips", criterion_formats, 0},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.check(false, std::string("exception: ") + e.what());
    }
    const double elapsed = seconds_since(t0);
    if (c.budget_seconds > 0) {
      outcome.check(elapsed < c.budget_seconds, "runtime under " + fmt("%.0f", c.budget_seconds) + " s");
    }
    std::string details;
    for (const auto& n : outcome.notes) details += (details.empty() ? "" : "; ") + n;
    std::printf("criterion %2d %-28s %s  [%s] (%.1f s)\n", c.id, c.name, outcome.pass ? "PASS" : "FAIL",
                details.c_str(), elapsed);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
