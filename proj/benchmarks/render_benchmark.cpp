// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "lvt/renderer.hpp"
#include "lvt/synth.hpp"

namespace {

using namespace lvt;

void BM_RenderSyntheticView(benchmark::State& state) {
  SynthConfig cfg;
  cfg.n_splats = static_cast<int>(state.range(0));
  cfg.n_views = 2;
  cfg.width = cfg.height = 64;
  const SyntheticScene scene = generate_synthetic_scene(cfg);
  const RenderTarget target{scene.cameras[0], Vec3::Zero()};
  int64_t contributions = 0;
  for (auto _ : state) {
    const Framebuffer<float> fb = render(scene.ground_truth, target);
    contributions = fb.stats.contributions;
    benchmark::DoNotOptimize(fb.color.data());
  }
  state.counters["contributions"] = static_cast<double>(contributions);
}

BENCHMARK(BM_RenderSyntheticView)->RangeMultiplier(4)->Range(256, 16384);

}  // namespace

BENCHMARK_MAIN();
