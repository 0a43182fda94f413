// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/lvt_block.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <string>

namespace lvt {

void StackConfig::validate() const {
  LVT_CHECK(layers >= 0 && hidden_dim > 0 && mlp_dim > 0 && heads > 0, ErrorCode::kInvalidArgument,
            "stack dimensions must be positive");
  LVT_CHECK(hidden_dim % heads == 0, ErrorCode::kInvalidArgument, "hidden dim must be divisible by heads");
  LVT_CHECK(window >= 1 && dilation >= 1, ErrorCode::kInvalidArgument, "window and dilation must be >= 1");
}

template <typename T>
void init_stack_params(ParamStore<T>& store, const StackConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const int d = cfg.hidden_dim, m = cfg.mlp_dim;
  // Final kernels of both residual branches are shrunk by sqrt(1 / N_r).
  const double residual_gain = std::sqrt(1.0 / std::max(1, cfg.residual_count()));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    store.add(p + "attn_norm.gamma", Tensor<T>({d}, T(1)));
    store.add(p + "attn_norm.beta", Tensor<T>({d}));
    store.add(p + "attn.q", lecun_normal<T>({d, d}, d, rng));
    store.add(p + "attn.k", lecun_normal<T>({d, d}, d, rng));
    store.add(p + "attn.v", lecun_normal<T>({d, d}, d, rng));
    store.add(p + "attn.out", lecun_normal<T>({d, d}, d, rng, residual_gain));
    store.add(p + "mlp_norm.gamma", Tensor<T>({d}, T(1)));
    store.add(p + "mlp_norm.beta", Tensor<T>({d}));
    store.add(p + "mlp.fc1", lecun_normal<T>({d, m}, d, rng));
    store.add(p + "mlp.fc2", lecun_normal<T>({m, d}, m, rng, residual_gain));
  }
}

namespace {

// rows[j][k] = conditioning row of (j, graph.neighbors[j][k]).
std::vector<std::vector<int64_t>> conditioning_rows(const NeighborGraph& graph, const PairTable& table) {
  std::map<std::pair<int, int>, int64_t> lookup;
  for (int64_t r = 0; r < table.size(); ++r) lookup.emplace(table.pairs[r], r);
  std::vector<std::vector<int64_t>> rows(graph.num_views());
  for (int j = 0; j < graph.num_views(); ++j) {
    for (int jp : graph.neighbors[j]) {
      auto it = lookup.find({j, jp});
      LVT_CHECK(it != lookup.end(), ErrorCode::kMissingConditioning,
                "no conditioning feature for pair (" + std::to_string(j) + ", " + std::to_string(jp) + ")");
      rows[j].push_back(it->second);
    }
  }
  return rows;
}

struct AttentionShape {
  int64_t views, tokens, dim, head_dim;
};

template <typename T>
AttentionShape check_attention_inputs(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                      const Tensor<T>& kc, const Tensor<T>& vc, const NeighborGraph& graph,
                                      const PairTable& table, int heads) {
  LVT_CHECK(q.rank() == 3 && k.shape() == q.shape() && v.shape() == q.shape(), ErrorCode::kShapeMismatch,
            "attention tokens must share one [N, T, d] shape");
  const int64_t d = q.dim(2);
  LVT_CHECK(heads >= 1 && d % heads == 0, ErrorCode::kInvalidArgument, "hidden dim not divisible by heads");
  LVT_CHECK(q.dim(0) == graph.num_views(), ErrorCode::kShapeMismatch, "token views do not match the graph");
  LVT_CHECK(kc.rank() == 2 && kc.dim(0) == table.size() && kc.dim(1) == d && vc.shape() == kc.shape(),
            ErrorCode::kMissingConditioning,
            "conditioning must have one row per pair, got " + shape_string(kc.shape()));
  return {q.dim(0), q.dim(1), d, d / heads};
}

// Keys (or values) of every neighbor of view j, stacked: [|N(j)| * T, d].
template <typename T>
RowMatrix<T> gather_neighbors(const Tensor<T>& tokens, const Tensor<T>& cond, const std::vector<int>& neighbors,
                              const std::vector<int64_t>& rows, int64_t t) {
  const auto tok = tokens.matrix();
  const auto c = cond.matrix();
  RowMatrix<T> out(static_cast<int64_t>(neighbors.size()) * t, tokens.cols());
  for (size_t k = 0; k < neighbors.size(); ++k) {
    out.middleRows(static_cast<int64_t>(k) * t, t) =
        tok.middleRows(neighbors[k] * t, t).rowwise() + c.row(rows[k]);
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> neighborhood_attention_forward(const Tensor<T>& q, const Tensor<T>& k_tokens, const Tensor<T>& v_tokens,
                                         const Tensor<T>& k_cond, const Tensor<T>& v_cond,
                                         const NeighborGraph& graph, const PairTable& table, int heads,
                                         AttentionCounters* counters, std::vector<T>* probs) {
  const AttentionShape s = check_attention_inputs(q, k_tokens, v_tokens, k_cond, v_cond, graph, table, heads);
  const auto rows = conditioning_rows(graph, table);
  const T scale = T(1) / std::sqrt(static_cast<T>(s.head_dim));
  Tensor<T> out(q.shape());
  auto out_m = out.matrix();
  const auto q_m = q.matrix();
  if (probs) probs->clear();
  RowMatrix<T> scores;
  for (int64_t j = 0; j < s.views; ++j) {
    const auto& nb = graph.neighbors[j];
    const RowMatrix<T> keys = gather_neighbors(k_tokens, k_cond, nb, rows[j], s.tokens);
    const RowMatrix<T> vals = gather_neighbors(v_tokens, v_cond, nb, rows[j], s.tokens);
    const int64_t n_keys = keys.rows();
    if (counters) counters->key_query_pairs += n_keys * s.tokens;
    for (int h = 0; h < heads; ++h) {
      const int64_t c0 = h * s.head_dim;
      scores.noalias() = (q_m.block(j * s.tokens, c0, s.tokens, s.head_dim) *
                          keys.middleCols(c0, s.head_dim).transpose()) * scale;
      for (int64_t r = 0; r < s.tokens; ++r) {
        auto row = scores.row(r);
        row = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
      }
      out_m.block(j * s.tokens, c0, s.tokens, s.head_dim).noalias() = scores * vals.middleCols(c0, s.head_dim);
      if (probs) probs->insert(probs->end(), scores.data(), scores.data() + scores.size());
    }
  }
  return out;
}

template <typename T>
ad::Var<T> neighborhood_attention(const ad::Var<T>& q, const ad::Var<T>& k_tokens, const ad::Var<T>& v_tokens,
                                  const ad::Var<T>& k_cond, const ad::Var<T>& v_cond, const NeighborGraph& graph,
                                  const PairTable& table, int heads, AttentionCounters* counters) {
  auto probs = std::make_shared<std::vector<T>>();
  Tensor<T> out = neighborhood_attention_forward(q.value(), k_tokens.value(), v_tokens.value(), k_cond.value(),
                                                 v_cond.value(), graph, table, heads, counters, probs.get());
  auto rows = std::make_shared<std::vector<std::vector<int64_t>>>(conditioning_rows(graph, table));
  auto neighbors = std::make_shared<std::vector<std::vector<int>>>(graph.neighbors);
  return q.tape().record(
      std::move(out), {q, k_tokens, v_tokens, k_cond, v_cond},
      [q, k_tokens, v_tokens, k_cond, v_cond, heads, probs, rows, neighbors](const Tensor<T>& g) {
        ad::Tape<T>& tape = q.tape();
        const int64_t views = q.shape()[0], t = q.shape()[1], d = q.shape()[2];
        const int64_t dh = d / heads;
        const T scale = T(1) / std::sqrt(static_cast<T>(dh));
        Tensor<T>& gq = tape.grad_buffer(q);
        Tensor<T>& gk = tape.grad_buffer(k_tokens);
        Tensor<T>& gv = tape.grad_buffer(v_tokens);
        Tensor<T>& gkc = tape.grad_buffer(k_cond);
        Tensor<T>& gvc = tape.grad_buffer(v_cond);
        auto gq_m = gq.matrix();
        auto gk_m = gk.matrix();
        auto gv_m = gv.matrix();
        auto gkc_m = gkc.matrix();
        auto gvc_m = gvc.matrix();
        const auto q_m = q.value().matrix();
        const auto g_m = g.matrix();
        size_t offset = 0;
        RowMatrix<T> d_scores;
        for (int64_t j = 0; j < views; ++j) {
          const auto& nb = (*neighbors)[j];
          const auto& rj = (*rows)[j];
          const RowMatrix<T> keys = gather_neighbors(k_tokens.value(), k_cond.value(), nb, rj, t);
          const RowMatrix<T> vals = gather_neighbors(v_tokens.value(), v_cond.value(), nb, rj, t);
          const int64_t n_keys = keys.rows();
          RowMatrix<T> d_keys = RowMatrix<T>::Zero(n_keys, d);
          RowMatrix<T> d_vals = RowMatrix<T>::Zero(n_keys, d);
          for (int h = 0; h < heads; ++h) {
            const int64_t c0 = h * dh;
            const ConstMatrixMap<T> attn(probs->data() + offset, t, n_keys);
            offset += static_cast<size_t>(t * n_keys);
            const auto g_out = g_m.block(j * t, c0, t, dh);
            d_vals.middleCols(c0, dh).noalias() += attn.transpose() * g_out;
            d_scores.noalias() = g_out * vals.middleCols(c0, dh).transpose();
            // Softmax backward, row by row.
            for (int64_t r = 0; r < t; ++r) {
              const T dot = d_scores.row(r).dot(attn.row(r));
              d_scores.row(r) = (attn.row(r).array() * (d_scores.row(r).array() - dot)).matrix() * scale;
            }
            gq_m.block(j * t, c0, t, dh).noalias() += d_scores * keys.middleCols(c0, dh);
            d_keys.middleCols(c0, dh).noalias() += d_scores.transpose() * q_m.block(j * t, c0, t, dh);
          }
          for (size_t k = 0; k < nb.size(); ++k) {
            const auto dk = d_keys.middleRows(static_cast<int64_t>(k) * t, t);
            const auto dv = d_vals.middleRows(static_cast<int64_t>(k) * t, t);
            gk_m.middleRows(nb[k] * t, t) += dk;
            gv_m.middleRows(nb[k] * t, t) += dv;
            gkc_m.row(rj[k]) += dk.colwise().sum();
            gvc_m.row(rj[k]) += dv.colwise().sum();
          }
        }
      });
}

template <typename T>
ad::Var<T> local_attention(const ad::Var<T>& tokens, const NeighborGraph& graph, const PairTable& table,
                           const ad::Var<T>& cond, const ParamVars<T>& params, int layer, int heads,
                           AttentionCounters* counters) {
  const std::string p = "layer" + std::to_string(layer) + ".";
  const ad::Var<T> x = ad::layer_norm(tokens, params(p + "attn_norm.gamma"), params(p + "attn_norm.beta"));
  const ad::Var<T>& wk = params(p + "attn.k");
  const ad::Var<T>& wv = params(p + "attn.v");
  const ad::Var<T> attn = neighborhood_attention(ad::matmul(x, params(p + "attn.q")), ad::matmul(x, wk),
                                                 ad::matmul(x, wv), ad::matmul(cond, wk), ad::matmul(cond, wv),
                                                 graph, table, heads, counters);
  return ad::add(tokens, ad::matmul(attn, params(p + "attn.out")));
}

template <typename T>
ad::Var<T> feed_forward(const ad::Var<T>& tokens, const ParamVars<T>& params, int layer) {
  const std::string p = "layer" + std::to_string(layer) + ".";
  ad::Var<T> h = ad::layer_norm(tokens, params(p + "mlp_norm.gamma"), params(p + "mlp_norm.beta"));
  h = ad::gelu(ad::matmul(h, params(p + "mlp.fc1")));
  return ad::add(tokens, ad::matmul(h, params(p + "mlp.fc2")));
}

template <typename T>
ad::Var<T> lvt_forward(const ad::Var<T>& tokens, const NeighborGraph& graph, const PairTable& table,
                       const ad::Var<T>& cond_base, const ParamVars<T>& params, const StackConfig& cfg,
                       AttentionCounters* counters) {
  cfg.validate();
  ad::Var<T> x = tokens;
  const ad::Var<T> zero_cond =
      cond_base.valid() ? ad::Var<T>() : tokens.tape().constant(Tensor<T>({table.size(), cfg.hidden_dim}));
  for (int l = 0; l < cfg.layers; ++l) {
    const auto start = std::chrono::steady_clock::now();
    const ad::Var<T> cond = cond_base.valid() ? project_conditioning(params, cond_base, l) : zero_cond;
    x = local_attention(x, graph, table, cond, params, l, cfg.heads, counters);
    x = feed_forward(x, params, l);
    if (counters) {
      counters->layer_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
  }
  return x;
}

template <typename T>
Tensor<T> global_attention_reference(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, int heads,
                                     AttentionCounters* counters) {
  LVT_CHECK(q.rank() == 3 && k.shape() == q.shape() && v.shape() == q.shape(), ErrorCode::kShapeMismatch,
            "attention tokens must share one [N, T, d] shape");
  const int64_t n = q.rows(), d = q.cols();
  LVT_CHECK(heads >= 1 && d % heads == 0, ErrorCode::kInvalidArgument, "hidden dim not divisible by heads");
  const int64_t dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  if (counters) counters->key_query_pairs += n * n;
  Tensor<T> out(q.shape());
  auto out_m = out.matrix();
  // Query rows in blocks keep the score buffer at kBlock x n.
  constexpr int64_t kBlock = 64;
  RowMatrix<T> scores(std::min(kBlock, n), n);
  for (int h = 0; h < heads; ++h) {
    const int64_t c0 = h * dh;
    const auto keys = k.matrix().middleCols(c0, dh);
    const auto values = v.matrix().middleCols(c0, dh);
    for (int64_t r0 = 0; r0 < n; r0 += kBlock) {
      const int64_t rows = std::min(kBlock, n - r0);
      auto block = scores.topRows(rows);
      block.noalias() = (q.matrix().block(r0, c0, rows, dh) * keys.transpose()) * scale;
      for (int64_t r = 0; r < rows; ++r) {
        auto row = block.row(r);
        row = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
      }
      out_m.block(r0, c0, rows, dh).noalias() = block * values;
    }
  }
  return out;
}

#define LVT_INSTANTIATE_STACK(T)                                                                                 \
  template void init_stack_params(ParamStore<T>&, const StackConfig&, std::mt19937_64&);                       \
  template Tensor<T> neighborhood_attention_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                                    const Tensor<T>&, const Tensor<T>&, const NeighborGraph&,   \
                                                    const PairTable&, int, AttentionCounters*, std::vector<T>*); \
  template ad::Var<T> neighborhood_attention(const ad::Var<T>&, const ad::Var<T>&, const ad::Var<T>&,           \
                                             const ad::Var<T>&, const ad::Var<T>&, const NeighborGraph&,        \
                                             const PairTable&, int, AttentionCounters*);                         \
  template ad::Var<T> local_attention(const ad::Var<T>&, const NeighborGraph&, const PairTable&,                \
                                      const ad::Var<T>&, const ParamVars<T>&, int, int, AttentionCounters*);    \
  template ad::Var<T> feed_forward(const ad::Var<T>&, const ParamVars<T>&, int);                                \
  template ad::Var<T> lvt_forward(const ad::Var<T>&, const NeighborGraph&, const PairTable&, const ad::Var<T>&, \
                                  const ParamVars<T>&, const StackConfig&, AttentionCounters*);                 \
  template Tensor<T> global_attention_reference(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int,      \
                                                AttentionCounters*);

LVT_INSTANTIATE_STACK(float)
LVT_INSTANTIATE_STACK(double)

}  // namespace lvt
