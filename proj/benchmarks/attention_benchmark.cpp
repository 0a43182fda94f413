// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "lvt/lvt_block.hpp"

namespace {

using namespace lvt;

constexpr int kTokens = 16;
constexpr int kDim = 64;
constexpr int kHeads = 4;
constexpr int kWindow = 5;

Tensor<float> random_tokens(int views, std::mt19937_64& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Tensor<float> t({views, kTokens, kDim});
  for (float& v : t.span()) v = normal(rng);
  return t;
}

void BM_LocalAttention(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(n);
  const Tensor<float> q = random_tokens(n, rng), k = random_tokens(n, rng), v = random_tokens(n, rng);
  std::vector<Camera> cameras(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) cameras[i].id = i;
  const NeighborGraph graph = build_neighbor_graph(cameras, kWindow, 1, NeighborStrategy::kSequential);
  const PairTable table = PairTable::from_graph(graph);
  const Tensor<float> zero({table.size(), kDim});
  AttentionCounters counters;
  for (auto _ : state) {
    counters = {};
    benchmark::DoNotOptimize(neighborhood_attention_forward(q, k, v, zero, zero, graph, table, kHeads, &counters));
  }
  state.counters["pairs"] = static_cast<double>(counters.key_query_pairs);
  state.SetComplexityN(n);
}

void BM_GlobalAttention(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(n);
  const Tensor<float> q = random_tokens(n, rng), k = random_tokens(n, rng), v = random_tokens(n, rng);
  AttentionCounters counters;
  for (auto _ : state) {
    counters = {};
    benchmark::DoNotOptimize(global_attention_reference(q, k, v, kHeads, &counters));
  }
  state.counters["pairs"] = static_cast<double>(counters.key_query_pairs);
  state.SetComplexityN(n);
}

BENCHMARK(BM_LocalAttention)->RangeMultiplier(2)->Range(8, 64)->Complexity(benchmark::oN);
BENCHMARK(BM_GlobalAttention)->RangeMultiplier(2)->Range(8, 64)->Complexity(benchmark::oNSquared);

}  // namespace

BENCHMARK_MAIN();
