// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "json.hpp"
#include "lvt/lvt_block.hpp"

namespace lvt {

void BenchConfig::validate() const {
  LVT_CHECK(!views.empty() && std::is_sorted(views.begin(), views.end()) && views.front() >= 1,
            ErrorCode::kInvalidArgument, "view counts must be positive and ascending");
  LVT_CHECK(window >= 1 && tokens >= 1 && dim >= 1 && heads >= 1 && dim % heads == 0, ErrorCode::kInvalidArgument,
            "invalid attention shape");
  LVT_CHECK(repeats >= 1, ErrorCode::kInvalidArgument, "at least one repeat is required");
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  LVT_CHECK(x.size() == y.size() && x.size() >= 2, ErrorCode::kInvalidArgument, "slope needs two or more points");
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

// Median over repeats of the mean per-call time; each sample loops until
// min_seconds has elapsed.
template <typename Fn>
double median_seconds(Fn&& fn, int repeats, double min_seconds) {
  using clock = std::chrono::steady_clock;
  std::vector<double> samples;
  fn();  // warm-up
  for (int r = 0; r < repeats; ++r) {
    int64_t calls = 0;
    const auto start = clock::now();
    double elapsed = 0;
    do {
      fn();
      ++calls;
      elapsed = std::chrono::duration<double>(clock::now() - start).count();
    } while (elapsed < min_seconds);
    samples.push_back(elapsed / static_cast<double>(calls));
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

BenchReport bench_attention(const BenchConfig& cfg) {
  cfg.validate();
  BenchReport report;
  report.config = cfg;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (int n : cfg.views) {
    const Shape shape = {n, cfg.tokens, cfg.dim};
    auto random = [&](Shape s) {
      Tensor<float> t(std::move(s));
      for (float& v : t.span()) v = normal(rng);
      return t;
    };
    const Tensor<float> q = random(shape), k = random(shape), v = random(shape);
    std::vector<Camera> cameras(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) cameras[i].id = i;
    const NeighborGraph graph = build_neighbor_graph(cameras, cfg.window, 1, NeighborStrategy::kSequential);
    const PairTable table = PairTable::from_graph(graph);
    const Tensor<float> zero_cond({table.size(), cfg.dim});

    BenchRow row;
    row.views = n;
    AttentionCounters local_count, global_count;
    neighborhood_attention_forward(q, k, v, zero_cond, zero_cond, graph, table, cfg.heads, &local_count);
    global_attention_reference(q, k, v, cfg.heads, &global_count);
    row.local_pairs = local_count.key_query_pairs;
    row.global_pairs = global_count.key_query_pairs;
    row.local_bytes = row.local_pairs * static_cast<int64_t>(sizeof(float));
    row.global_bytes = row.global_pairs * static_cast<int64_t>(sizeof(float));
    row.local_seconds = median_seconds(
        [&] { neighborhood_attention_forward(q, k, v, zero_cond, zero_cond, graph, table, cfg.heads); },
        cfg.repeats, cfg.min_seconds);
    row.global_seconds =
        median_seconds([&] { global_attention_reference(q, k, v, cfg.heads); }, cfg.repeats, cfg.min_seconds);
    report.rows.push_back(row);
  }
  if (report.rows.size() >= 2) {
    std::vector<double> x, local, global;
    for (const BenchRow& r : report.rows) {
      x.push_back(r.views);
      local.push_back(r.local_seconds);
      global.push_back(r.global_seconds);
    }
    report.local_slope = log_log_slope(x, local);
    report.global_slope = log_log_slope(x, global);
  }
  return report;
}

std::string bench_report_json(const BenchReport& report) {
  nlohmann::json j;
  j["window"] = report.config.window;
  j["tokens"] = report.config.tokens;
  j["dim"] = report.config.dim;
  j["heads"] = report.config.heads;
  j["repeats"] = report.config.repeats;
  j["local_slope"] = report.local_slope;
  j["global_slope"] = report.global_slope;
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchRow& r : report.rows) {
    rows.push_back({{"views", r.views},
                    {"local_seconds", r.local_seconds},
                    {"global_seconds", r.global_seconds},
                    {"local_pairs", r.local_pairs},
                    {"global_pairs", r.global_pairs},
                    {"local_bytes", r.local_bytes},
                    {"global_bytes", r.global_bytes}});
  }
  j["rows"] = rows;
  return j.dump(2);
}

}  // namespace lvt
