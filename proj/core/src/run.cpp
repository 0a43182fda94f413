// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/run.hpp"

#include "json.hpp"

namespace lvt {

using nlohmann::json;

void TrainRunConfig::validate() const {
  model.validate();
  loss.validate();
  schedule.validate();
  LVT_CHECK(!buckets.empty(), ErrorCode::kInvalidArgument, "at least one resolution bucket is required");
  LVT_CHECK(input_stride >= 1, ErrorCode::kInvalidArgument, "input stride must be positive");
  LVT_CHECK(log_every >= 1, ErrorCode::kInvalidArgument, "log interval must be positive");
}

namespace {

template <typename V>
void read(const json& j, const char* key, V& out) {
  if (j.contains(key)) out = j.at(key).get<V>();
}

const char* perceptual_name(PerceptualMode m) {
  return m == PerceptualMode::kGradientDifference ? "gradient_difference" : "off";
}

PerceptualMode parse_perceptual(const std::string& s) {
  if (s == "off") return PerceptualMode::kOff;
  if (s == "gradient_difference") return PerceptualMode::kGradientDifference;
  throw Error(ErrorCode::kMalformedManifest, "unknown perceptual mode '" + s + "'");
}

}  // namespace

TrainRunConfig train_run_config_from_json(const std::string& text) {
  TrainRunConfig c;
  try {
    const json j = json::parse(text);
    LVT_CHECK(j.is_object(), ErrorCode::kMalformedManifest, "training config must be a JSON object");
    if (j.contains("model")) c.model = model_config_from_json(j.at("model").dump());
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      read(l, "perceptual_weight", c.loss.perceptual_weight);
      read(l, "regularizer_weight", c.loss.regularizer_weight);
      read(l, "regularizer_samples", c.loss.regularizer_samples);
      if (l.contains("perceptual")) c.loss.perceptual = parse_perceptual(l.at("perceptual").get<std::string>());
    }
    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      read(s, "peak_lr", c.schedule.peak_lr);
      read(s, "warmup_steps", c.schedule.warmup_steps);
      read(s, "total_steps", c.schedule.total_steps);
    }
    if (j.contains("adam")) {
      const json& a = j.at("adam");
      read(a, "beta1", c.adam.beta1);
      read(a, "beta2", c.adam.beta2);
      read(a, "eps", c.adam.eps);
      read(a, "clip_norm", c.adam.clip_norm);
    }
    if (j.contains("buckets")) {
      c.buckets.clear();
      for (const json& b : j.at("buckets")) {
        ResolutionBucket r;
        read(b, "weight", r.weight);
        read(b, "downsample", r.downsample);
        read(b, "n_inputs", r.n_inputs);
        read(b, "n_targets", r.n_targets);
        c.buckets.push_back(r);
      }
    }
    read(j, "input_stride", c.input_stride);
    read(j, "held_out", c.held_out);
    if (j.contains("background")) {
      const auto bg = j.at("background").get<std::vector<double>>();
      LVT_CHECK(bg.size() == 3, ErrorCode::kMalformedManifest, "background needs three values");
      c.background = Vec3(bg[0], bg[1], bg[2]);
    }
    read(j, "seed", c.seed);
    read(j, "log_every", c.log_every);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedManifest, std::string("training config: ") + e.what());
  }
  return c;
}

std::string train_run_config_to_json(const TrainRunConfig& c) {
  json j;
  j["model"] = json::parse(model_config_to_json(c.model));
  j["loss"] = {{"perceptual", perceptual_name(c.loss.perceptual)},
               {"perceptual_weight", c.loss.perceptual_weight},
               {"regularizer_weight", c.loss.regularizer_weight},
               {"regularizer_samples", c.loss.regularizer_samples}};
  j["schedule"] = {{"peak_lr", c.schedule.peak_lr},
                   {"warmup_steps", c.schedule.warmup_steps},
                   {"total_steps", c.schedule.total_steps}};
  j["adam"] = {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}, {"clip_norm", c.adam.clip_norm}};
  j["buckets"] = json::array();
  for (const ResolutionBucket& b : c.buckets) {
    j["buckets"].push_back(
        {{"weight", b.weight}, {"downsample", b.downsample}, {"n_inputs", b.n_inputs}, {"n_targets", b.n_targets}});
  }
  j["input_stride"] = c.input_stride;
  j["held_out"] = c.held_out;
  j["background"] = {c.background[0], c.background[1], c.background[2]};
  j["seed"] = c.seed;
  j["log_every"] = c.log_every;
  return j.dump(2);
}

void train_on_scene(LvtModel<float>& model, std::span<const Camera> cameras, std::span<const Tensor<float>> images,
                    const TrainRunConfig& cfg, const std::function<void(const StepMetrics&)>& on_step) {
  cfg.validate();
  LVT_CHECK(cameras.size() == images.size(), ErrorCode::kShapeMismatch, "one image per camera is required");
  MixedResolutionSampler sampler(cfg.buckets, cfg.input_stride, cfg.seed);
  Trainer<float> trainer(model, cfg.loss, cfg.schedule, cfg.adam, cfg.seed);
  const int n = static_cast<int>(cameras.size());
  for (int64_t s = 0; s < cfg.schedule.total_steps; ++s) {
    const SampleSpec spec = sampler.next(n, cfg.held_out);
    const StepMetrics m = trainer.step(make_batch(cameras, images, spec, cfg.background));
    if (on_step) on_step(m);
  }
}

}  // namespace lvt
