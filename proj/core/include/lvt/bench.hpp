// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lvt {

struct BenchConfig {
  std::vector<int> views = {8, 16, 32, 64};
  int window = 5;
  int tokens = 16;
  int dim = 64;
  int heads = 4;
  int repeats = 5;
  double min_seconds = 0.05;  // per timed sample, reached by looping
  uint64_t seed = 0;

  void validate() const;
};

struct BenchRow {
  int views = 0;
  double local_seconds = 0;   // median per call
  double global_seconds = 0;  // median per call
  int64_t local_pairs = 0;
  int64_t global_pairs = 0;
  int64_t local_bytes = 0;   // attention-score storage
  int64_t global_bytes = 0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<BenchRow> rows;
  double local_slope = 0;  // log-log fit of seconds against views
  double global_slope = 0;
};

// Times the local neighborhood attention core (sequential graph) and the
// dense global reference on random tokens.
BenchReport bench_attention(const BenchConfig& cfg);
std::string bench_report_json(const BenchReport& report);
// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lvt
