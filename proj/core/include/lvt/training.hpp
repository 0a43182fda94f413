// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

// Loss, learning-rate schedule, optimizer and the end-to-end train step.
//
//   L = (1 / N_t) sum_k [ MSE(rendered_k, target_k) + lambda * Perc_k ] + alpha * R_sigma

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lvt/autodiff.hpp"
#include "lvt/model.hpp"
#include "lvt/params.hpp"
#include "lvt/renderer.hpp"
#include "lvt/sh.hpp"

namespace lvt {

enum class PerceptualMode {
  kOff,
  kGradientDifference,  // mean |∇ rendered - ∇ target| over forward differences
};

struct LossConfig {
  double perceptual_weight = 0.05;
  double regularizer_weight = 0.001;
  PerceptualMode perceptual = PerceptualMode::kOff;
  int regularizer_samples = 1;

  void validate() const;
};

struct ScheduleConfig {
  double peak_lr = 2e-4;
  int64_t warmup_steps = 2000;
  int64_t total_steps = 150000;

  void validate() const;
};

// Linear warmup to peak_lr, then half-cosine decay to zero at total_steps.
double lr_at(int64_t step, const ScheduleConfig& cfg);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double clip_norm = 1.0;  // global gradient norm; <= 0 disables clipping
};

template <typename T>
class Adam {
 public:
  Adam(const ParamStore<T>& params, AdamConfig cfg);

  // Clips, updates the moments and applies one step. Returns the global norm
  // before clipping.
  double step(ParamStore<T>& params, const std::vector<Tensor<T>>& grads, double lr);
  int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor<T>> m_, v_;
  int64_t t_ = 0;
};

double psnr_from_mse(double mse);  // capped at 99 dB
template <typename T>
double image_mse(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
struct LossTerms {
  ad::Var<T> total;
  double loss = 0;
  double mse = 0;         // mean over targets
  double perceptual = 0;  // mean over targets
  double regularizer = 0;
};

// rendered: N_t images [H, W, 3]; opacity_sh: [n, k_o]. Throws ShapeMismatch
// and NonFiniteLoss (naming the offending term).
template <typename T>
LossTerms<T> reconstruction_loss(std::span<const ad::Var<T>> rendered, std::span<const Tensor<T>> targets,
                                 const ad::Var<T>& opacity_sh, const LossConfig& cfg, std::mt19937_64& rng);
template <typename T>
LossTerms<T> reconstruction_loss(std::span<const Tensor<T>> rendered, std::span<const Tensor<T>> targets,
                                 const Tensor<T>& opacity_sh, const LossConfig& cfg, std::mt19937_64& rng);

template <typename T>
struct TrainBatch {
  ViewSet<T> inputs;
  std::vector<RenderTarget> targets;
  std::vector<Tensor<T>> target_images;  // [H, W, 3] each
};

struct StepMetrics {
  int64_t step = 0;
  double loss = 0, mse = 0, perceptual = 0, regularizer = 0, psnr = 0;
  double lr = 0, grad_norm = 0;
  int64_t key_query_pairs = 0;
  double seconds = 0;
};

std::string metrics_json(const StepMetrics& m);

template <typename T>
class Trainer {
 public:
  Trainer(LvtModel<T>& model, LossConfig loss, ScheduleConfig schedule, AdamConfig adam, uint64_t seed);

  // Forward, render, loss, backward and one optimizer update at lr_at(step + 1).
  StepMetrics step(const TrainBatch<T>& batch);
  int64_t steps_done() const { return step_; }

 private:
  LvtModel<T>* model_;
  LossConfig loss_;
  ScheduleConfig schedule_;
  Adam<T> adam_;
  std::mt19937_64 rng_;
  int64_t step_ = 0;
};

// Renders every target from predicted splats without gradients.
template <typename T>
std::vector<Tensor<T>> render_targets(const GaussianSplatSet<T>& splats, std::span<const RenderTarget> targets,
                                      const RenderSettings& settings);

// Binary checkpoint: magic, JSON header (config and tensor index), float32 data.
template <typename T>
void save_checkpoint(const std::string& path, const LvtModel<T>& model);
template <typename T>
LvtModel<T> load_checkpoint(const std::string& path);

}  // namespace lvt
