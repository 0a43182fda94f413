// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

// lvt: synthetic scenes, training, rendering, PLY export and attention benchmarks.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lvt/bench.hpp"
#include "lvt/ply.hpp"
#include "lvt/run.hpp"
#include "lvt/scene.hpp"
#include "lvt/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace lvt;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  LVT_CHECK(in.good(), ErrorCode::kIo, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  LVT_CHECK(out.good(), ErrorCode::kIo, "cannot write " + path);
  out << text;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  LVT_CHECK(!ec, ErrorCode::kIo, "cannot create " + dir + ": " + ec.message());
}

// A scene is a manifest file or a directory holding manifest.json.
LoadedScene open_scene(const std::string& path) {
  return load_scene(fs::is_directory(path) ? (fs::path(path) / "manifest.json").string() : path);
}

// Inputs are explicit ids, or every `stride`-th frame once `exclude` is removed.
std::vector<int> choose_inputs(const std::vector<int>& explicit_ids, int n_frames, const std::vector<int>& exclude,
                               int stride) {
  const std::vector<int> ids = explicit_ids.empty() ? select_input_views(n_frames, exclude, stride) : explicit_ids;
  for (int id : ids) {
    LVT_CHECK(id >= 0 && id < n_frames, ErrorCode::kInvalidArgument,
              "input view " + std::to_string(id) + " is not in the manifest");
  }
  LVT_CHECK(!ids.empty(), ErrorCode::kEmptyViewSet, "no input views selected");
  return ids;
}

ViewSet<float> gather_views(const LoadedScene& scene, const std::vector<int>& ids) {
  ViewSet<float> v;
  const Tensor<float>& first = scene.images.at(ids.front());
  v.images = Tensor<float>({static_cast<int64_t>(ids.size()), first.dim(0), first.dim(1), 3});
  for (size_t i = 0; i < ids.size(); ++i) {
    const Tensor<float>& img = scene.images[ids[i]];
    LVT_CHECK(img.shape() == first.shape(), ErrorCode::kShapeMismatch, "input views differ in resolution");
    std::copy(img.data(), img.data() + img.size(), v.images.data() + static_cast<int64_t>(i) * img.size());
    v.cameras.push_back(scene.cameras[ids[i]]);
  }
  return v;
}

struct SynthArgs {
  SynthConfig cfg;
  std::vector<double> background = {0, 0, 0};
  std::string out;
};

int run_synth(const SynthArgs& a) {
  SynthConfig cfg = a.cfg;
  cfg.background = Vec3(a.background[0], a.background[1], a.background[2]);
  const SyntheticScene scene = generate_synthetic_scene(cfg);
  write_synthetic_scene(scene, a.out);
  std::printf("wrote %zu views and %lld splats to %s\n", scene.images.size(),
              static_cast<long long>(scene.ground_truth.size()), a.out.c_str());
  return kExitOk;
}

struct TrainArgs {
  std::string config, scene, out;
  int64_t steps = 0;
  int64_t seed = -1;
  int input_stride = 0;
  int threads = 1;
};

int run_train(const TrainArgs& a) {
  TrainRunConfig cfg = train_run_config_from_json(read_text(a.config));
  if (a.steps > 0) cfg.schedule.total_steps = a.steps;
  if (a.seed >= 0) cfg.seed = static_cast<uint64_t>(a.seed);
  if (a.input_stride > 0) cfg.input_stride = a.input_stride;
  cfg.validate();
  const LoadedScene scene = open_scene(a.scene);
  make_dir(a.out);
  write_text((fs::path(a.out) / "config.json").string(), train_run_config_to_json(cfg));

  LvtModel<float> model(cfg.model, cfg.seed);
  std::ofstream log((fs::path(a.out) / "metrics.jsonl").string());
  LVT_CHECK(log.good(), ErrorCode::kIo, "cannot write metrics log in " + a.out);
  train_on_scene(model, scene.cameras, scene.images, cfg, [&](const StepMetrics& m) {
    log << metrics_json(m) << "\n";
    if (m.step % cfg.log_every == 0 || m.step == cfg.schedule.total_steps) {
      std::printf("step %lld  loss %.5f  psnr %.2f  lr %.2e\n", static_cast<long long>(m.step), m.loss, m.psnr, m.lr);
      std::fflush(stdout);
    }
  });
  const std::string ckpt = (fs::path(a.out) / "model.ckpt").string();
  save_checkpoint(ckpt, model);
  std::printf("saved %s\n", ckpt.c_str());
  return kExitOk;
}

struct ViewArgs {
  std::string model, scene;
  std::vector<int> inputs;
  int input_stride = 2;
};

int run_render(const ViewArgs& a, const std::vector<int>& targets, const std::string& out, double bg) {
  const LvtModel<float> model = load_checkpoint<float>(a.model);
  const LoadedScene scene = open_scene(a.scene);
  const int n = static_cast<int>(scene.cameras.size());
  for (int t : targets) {
    LVT_CHECK(t >= 0 && t < n, ErrorCode::kInvalidArgument, "target view " + std::to_string(t) + " is not in the manifest");
  }
  const std::vector<int> inputs = choose_inputs(a.inputs, n, targets, a.input_stride);
  const GaussianSplatSet<float> splats = model.predict(gather_views(scene, inputs));
  make_dir(out);
  for (int t : targets) {
    const RenderTarget target{scene.cameras[t], Vec3::Constant(bg)};
    const Tensor<float> img = render(splats, target, model.config().render).color;
    const std::string path = (fs::path(out) / ("render_" + std::to_string(t) + ".png")).string();
    write_png(path, img);
    const double psnr = psnr_from_mse(image_mse(img, scene.images[t]));
    std::printf("{\"target\": %d, \"psnr\": %.4f, \"path\": \"%s\"}\n", t, psnr, path.c_str());
  }
  return kExitOk;
}

int run_export(const ViewArgs& a, const std::string& ply) {
  const LvtModel<float> model = load_checkpoint<float>(a.model);
  const LoadedScene scene = open_scene(a.scene);
  const std::vector<int> inputs = choose_inputs(a.inputs, static_cast<int>(scene.cameras.size()), {}, a.input_stride);
  GaussianSplatSet<float> splats = model.predict(gather_views(scene, inputs));
  // Back to the manifest's original units.
  apply_normalization(splats, scene.manifest.normalization.inverse());
  export_ply(splats, ply);
  std::printf("wrote %lld splats to %s\n", static_cast<long long>(splats.size()), ply.c_str());
  return kExitOk;
}

int run_bench(const BenchConfig& cfg, const std::string& out) {
  const BenchReport report = bench_attention(cfg);
  std::printf("%6s %14s %14s %12s %12s\n", "views", "local_s", "global_s", "local_pairs", "global_pairs");
  for (const BenchRow& r : report.rows) {
    std::printf("%6d %14.6g %14.6g %12lld %12lld\n", r.views, r.local_seconds, r.global_seconds,
                static_cast<long long>(r.local_pairs), static_cast<long long>(r.global_pairs));
  }
  std::printf("slope local %.3f global %.3f\n", report.local_slope, report.global_slope);
  if (!out.empty()) write_text(out, bench_report_json(report));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local View Transformer: posed images to 3D Gaussian splats"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads; kernels run sequentially, so every value is reproducible")
      ->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene");
  synth_cmd->add_option("--seed", synth.cfg.seed, "Random seed");
  synth_cmd->add_option("--views", synth.cfg.n_views, "Number of views")->check(CLI::Range(2, 100000));
  synth_cmd->add_option("--splats", synth.cfg.n_splats, "Ground-truth splat count")->check(CLI::Range(1, 100000000));
  synth_cmd->add_option("--width", synth.cfg.width, "Image width")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", synth.cfg.height, "Image height")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--color-degree", synth.cfg.color_degree, "SH degree of color")->check(CLI::Range(0, 3));
  synth_cmd->add_option("--opacity-degree", synth.cfg.opacity_degree, "SH degree of opacity")->check(CLI::Range(0, 3));
  synth_cmd->add_option("--background", synth.background, "Background RGB")->expected(3);
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train on one scene");
  train_cmd->add_option("--config", train.config, "Training config (JSON)")->required();
  train_cmd->add_option("--scene", train.scene, "Scene manifest or directory")->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--steps", train.steps, "Override the step count")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.seed, "Override the seed")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--input-stride", train.input_stride, "Spacing of input frames")->check(CLI::PositiveNumber);

  ViewArgs view;
  std::vector<int> targets;
  std::string render_out;
  double background = 0.0;
  auto* render_cmd = app.add_subcommand("render", "Render target views from predicted splats");
  render_cmd->add_option("--model", view.model, "Checkpoint")->required();
  render_cmd->add_option("--scene", view.scene, "Scene manifest or directory")->required();
  render_cmd->add_option("--targets", targets, "Target view ids")->required()->delimiter(',');
  render_cmd->add_option("--inputs", view.inputs, "Input view ids (default: strided non-targets)")->delimiter(',');
  render_cmd->add_option("--input-stride", view.input_stride, "Spacing of input frames")->check(CLI::PositiveNumber);
  render_cmd->add_option("--background", background, "Gray background level")->check(CLI::Range(0.0, 1.0));
  render_cmd->add_option("--out", render_out, "Output directory")->required();

  ViewArgs exp;
  std::string ply;
  auto* export_cmd = app.add_subcommand("export", "Export predicted splats as PLY");
  export_cmd->add_option("--model", exp.model, "Checkpoint")->required();
  export_cmd->add_option("--scene", exp.scene, "Scene manifest or directory")->required();
  export_cmd->add_option("--inputs", exp.inputs, "Input view ids (default: strided)")->delimiter(',');
  export_cmd->add_option("--input-stride", exp.input_stride, "Spacing of input frames")->check(CLI::PositiveNumber);
  export_cmd->add_option("--ply", ply, "Output PLY path")->required();

  BenchConfig bench;
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Time local against global attention");
  bench_cmd->add_option("--n", bench.views, "View counts, ascending")->delimiter(',');
  bench_cmd->add_option("--window", bench.window, "Neighbor window")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--tokens", bench.tokens, "Tokens per view")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--dim", bench.dim, "Hidden size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--heads", bench.heads, "Attention heads")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench.repeats, "Timed repeats (median)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Random seed");
  bench_cmd->add_option("--out", bench_out, "Report path (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (threads > 1) std::fprintf(stderr, "note: kernels are sequential; --threads %d runs on one thread\n", threads);

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*train_cmd) return run_train(train);
    if (*render_cmd) return run_render(view, targets, render_out, background);
    if (*export_cmd) return run_export(exp, ply);
    if (*bench_cmd) {
      if (!std::is_sorted(bench.views.begin(), bench.views.end()) || bench.views.empty()) {
        std::fprintf(stderr, "--n must be a non-empty ascending list\n");
        return kExitUsage;
      }
      return run_bench(bench, bench_out);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
