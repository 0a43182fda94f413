// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

// Local View Transformer stack.
//
// Every token of view j attends to all tokens of the views in N(j). Keys and
// values of neighbor j' carry the pair's conditioning feature:
//
//   K = W_k (LN(M_j') + C(j, j')),   V = W_v (LN(M_j') + C(j, j'))
//
// so the softmax of a query row spans |N(j)| * T keys. Per layer this costs
// N * w * T^2 query-key pairs instead of (N * T)^2 for global attention.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lvt/autodiff.hpp"
#include "lvt/geometry.hpp"
#include "lvt/params.hpp"
#include "lvt/pose_encoding.hpp"

namespace lvt {

struct StackConfig {
  int layers = 4;
  int hidden_dim = 128;
  int mlp_dim = 256;
  int heads = 4;
  int window = 5;
  int dilation = 1;
  NeighborStrategy strategy = NeighborStrategy::kSpatial;

  void validate() const;
  int residual_count() const { return 2 * layers; }
};

// Instrumentation shared with the benchmark harness.
struct AttentionCounters {
  int64_t key_query_pairs = 0;
  std::vector<double> layer_seconds;
};

template <typename T>
void init_stack_params(ParamStore<T>& store, const StackConfig& cfg, std::mt19937_64& rng);

// Attention core without the tape. q, k_tokens, v_tokens: [N, T, d] (already
// projected); k_cond, v_cond: [P, d] projected conditioning, one row per entry
// of `table`. When `probs` is non-null the softmax rows are stored there.
template <typename T>
Tensor<T> neighborhood_attention_forward(const Tensor<T>& q, const Tensor<T>& k_tokens, const Tensor<T>& v_tokens,
                                         const Tensor<T>& k_cond, const Tensor<T>& v_cond,
                                         const NeighborGraph& graph, const PairTable& table, int heads,
                                         AttentionCounters* counters = nullptr, std::vector<T>* probs = nullptr);

// Tape version of the core above.
template <typename T>
ad::Var<T> neighborhood_attention(const ad::Var<T>& q, const ad::Var<T>& k_tokens, const ad::Var<T>& v_tokens,
                                  const ad::Var<T>& k_cond, const ad::Var<T>& v_cond, const NeighborGraph& graph,
                                  const PairTable& table, int heads, AttentionCounters* counters = nullptr);

// tokens + W_o · Attention(LN(tokens)) for layer `layer`. `cond` is [P, d]
// with rows ordered like `table`; throws MissingConditioning when a graph edge
// has no row.
template <typename T>
ad::Var<T> local_attention(const ad::Var<T>& tokens, const NeighborGraph& graph, const PairTable& table,
                           const ad::Var<T>& cond, const ParamVars<T>& params, int layer, int heads,
                           AttentionCounters* counters = nullptr);

// tokens + W_2 · GELU(W_1 · LN(tokens))
template <typename T>
ad::Var<T> feed_forward(const ad::Var<T>& tokens, const ParamVars<T>& params, int layer);

// L rounds of local_attention + feed_forward. `cond_base` is the shared
// conditioning feature from encode_conditioning_base, projected per layer; an
// invalid Var means zero conditioning.
template <typename T>
ad::Var<T> lvt_forward(const ad::Var<T>& tokens, const NeighborGraph& graph, const PairTable& table,
                       const ad::Var<T>& cond_base, const ParamVars<T>& params, const StackConfig& cfg,
                       AttentionCounters* counters = nullptr);

// Dense multi-head self-attention over all N*T tokens; the quadratic baseline.
template <typename T>
Tensor<T> global_attention_reference(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, int heads,
                                     AttentionCounters* counters = nullptr);

}  // namespace lvt
