// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lvt/model.hpp"
#include "lvt/synth.hpp"
#include "lvt/training.hpp"

namespace lvt {

// Everything a single-scene training run needs besides the data.
struct TrainRunConfig {
  ModelConfig model;
  LossConfig loss;
  ScheduleConfig schedule{1e-3, 200, 3000};  // total_steps is the run length
  AdamConfig adam;
  std::vector<ResolutionBucket> buckets = {ResolutionBucket{1.0, 1, 8, 2}};
  int input_stride = 2;
  std::vector<int> held_out;  // never used as inputs or targets
  Vec3 background = Vec3::Zero();
  uint64_t seed = 0;
  int log_every = 50;

  void validate() const;
};

// Missing keys keep their defaults. Throws MalformedManifest.
TrainRunConfig train_run_config_from_json(const std::string& text);
std::string train_run_config_to_json(const TrainRunConfig& cfg);

// Runs schedule.total_steps optimizer steps on batches drawn by the
// mixed-resolution sampler. `on_step` sees every step's metrics.
void train_on_scene(LvtModel<float>& model, std::span<const Camera> cameras, std::span<const Tensor<float>> images,
                    const TrainRunConfig& cfg, const std::function<void(const StepMetrics&)>& on_step = {});

}  // namespace lvt
