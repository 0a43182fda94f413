// Copyright 2026 The LVT Authors
// SPDX-License-Identifier: Apache-2.0

#include "lvt/training.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "json.hpp"

namespace lvt {

using nlohmann::json;

void LossConfig::validate() const {
  LVT_CHECK(perceptual_weight >= 0 && regularizer_weight >= 0, ErrorCode::kInvalidArgument,
            "loss weights must be non-negative");
  LVT_CHECK(regularizer_samples >= 1, ErrorCode::kInvalidArgument, "regularizer needs at least one sample");
}

void ScheduleConfig::validate() const {
  LVT_CHECK(peak_lr >= 0, ErrorCode::kInvalidArgument, "peak learning rate must be non-negative");
  LVT_CHECK(warmup_steps > 0 && warmup_steps < total_steps, ErrorCode::kInvalidArgument,
            "schedule needs 0 < warmup_steps < total_steps");
}

double lr_at(int64_t step, const ScheduleConfig& cfg) {
  cfg.validate();
  LVT_CHECK(step >= 0 && step <= cfg.total_steps, ErrorCode::kInvalidArgument,
            "step " + std::to_string(step) + " outside [0, total_steps]");
  if (step <= cfg.warmup_steps) return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  const double progress =
      static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
Adam<T>::Adam(const ParamStore<T>& params, AdamConfig cfg) : cfg_(cfg) {
  for (size_t i = 0; i < params.count(); ++i) {
    m_.emplace_back(params.at(i).shape());
    v_.emplace_back(params.at(i).shape());
  }
}

template <typename T>
double Adam<T>::step(ParamStore<T>& params, const std::vector<Tensor<T>>& grads, double lr) {
  LVT_CHECK(grads.size() == params.count(), ErrorCode::kShapeMismatch, "one gradient per parameter is required");
  double sq = 0;
  for (const Tensor<T>& g : grads) {
    for (T v : g.span()) sq += static_cast<double>(v) * static_cast<double>(v);
  }
  const double norm = std::sqrt(sq);
  const double clip = (cfg_.clip_norm > 0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const T b1 = T(cfg_.beta1), b2 = T(cfg_.beta2);
  const T step_size = T(lr / bc1), inv_bc2 = T(1.0 / bc2), eps = T(cfg_.eps), scale = T(clip);
  for (size_t i = 0; i < params.count(); ++i) {
    Tensor<T>& p = params.at(i);
    LVT_CHECK(grads[i].shape() == p.shape(), ErrorCode::kShapeMismatch, "gradient shape mismatch");
    T* m = m_[i].data();
    T* v = v_[i].data();
    const T* g = grads[i].data();
    for (int64_t k = 0; k < p.size(); ++k) {
      const T gk = g[k] * scale;
      m[k] = b1 * m[k] + (T(1) - b1) * gk;
      v[k] = b2 * v[k] + (T(1) - b2) * gk * gk;
      p[k] -= step_size * m[k] / (std::sqrt(v[k] * inv_bc2) + eps);
    }
  }
  return norm;
}

double psnr_from_mse(double mse) {
  if (!(mse > 0)) return 99.0;
  return std::min(99.0, -10.0 * std::log10(mse));
}

template <typename T>
double image_mse(const Tensor<T>& a, const Tensor<T>& b) {
  LVT_CHECK(a.shape() == b.shape(), ErrorCode::kShapeMismatch, "image shapes differ");
  double s = 0;
  for (int64_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

namespace {

template <typename T>
ad::Var<T> forward_difference(const ad::Var<T>& image, int axis) {
  const int64_t n = image.shape()[axis];
  return ad::sub(ad::slice(image, axis, 1, n), ad::slice(image, axis, 0, n - 1));
}

template <typename T>
ad::Var<T> gradient_difference(const ad::Var<T>& rendered, const ad::Var<T>& target) {
  const ad::Var<T> dx = ad::sub(forward_difference(rendered, 1), forward_difference(target, 1));
  const ad::Var<T> dy = ad::sub(forward_difference(rendered, 0), forward_difference(target, 0));
  return ad::scale(ad::add(ad::mean(ad::abs(dx)), ad::mean(ad::abs(dy))), T(0.5));
}

void check_finite(double v, const char* term) {
  LVT_CHECK(std::isfinite(v), ErrorCode::kNonFiniteLoss, std::string("loss term '") + term + "' is not finite");
}

}  // namespace

template <typename T>
LossTerms<T> reconstruction_loss(std::span<const ad::Var<T>> rendered, std::span<const Tensor<T>> targets,
                                 const ad::Var<T>& opacity_sh, const LossConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  LVT_CHECK(!rendered.empty() && rendered.size() == targets.size(), ErrorCode::kShapeMismatch,
            "one target per rendered image is required");
  ad::Tape<T>& tape = opacity_sh.tape();
  LossTerms<T> out;
  ad::Var<T> image_term;
  for (size_t k = 0; k < rendered.size(); ++k) {
    const Shape& s = rendered[k].shape();
    LVT_CHECK(s.size() == 3 && s[2] == 3 && targets[k].shape() == s, ErrorCode::kShapeMismatch,
              "rendered " + shape_string(s) + " vs target " + shape_string(targets[k].shape()));
    const ad::Var<T> target = tape.constant(targets[k]);
    const ad::Var<T> mse = ad::mse(rendered[k], target);
    out.mse += static_cast<double>(mse.value()[0]);
    ad::Var<T> term = mse;
    if (cfg.perceptual == PerceptualMode::kGradientDifference) {
      LVT_CHECK(s[0] >= 2 && s[1] >= 2, ErrorCode::kShapeMismatch, "gradient difference needs at least 2x2 images");
      const ad::Var<T> perc = gradient_difference(rendered[k], target);
      out.perceptual += static_cast<double>(perc.value()[0]);
      term = ad::add(term, ad::scale(perc, T(cfg.perceptual_weight)));
    }
    image_term = image_term.valid() ? ad::add(image_term, term) : term;
  }
  const double nt = static_cast<double>(rendered.size());
  out.mse /= nt;
  out.perceptual /= nt;
  check_finite(out.mse, "mse");
  check_finite(out.perceptual, "perceptual");

  const OpacityRegularizerMode mode = opacity_sh.shape().back() == 1 ? OpacityRegularizerMode::kScalar
                                                                     : OpacityRegularizerMode::kSphericalHarmonics;
  const ad::Var<T> reg = opacity_regularizer(opacity_sh, mode, rng, cfg.regularizer_samples);
  out.regularizer = static_cast<double>(reg.value()[0]);
  check_finite(out.regularizer, "regularizer");

  out.total = ad::add(ad::scale(image_term, T(1.0 / nt)), ad::scale(reg, T(cfg.regularizer_weight)));
  out.loss = static_cast<double>(out.total.value()[0]);
  check_finite(out.loss, "total");
  return out;
}

template <typename T>
LossTerms<T> reconstruction_loss(std::span<const Tensor<T>> rendered, std::span<const Tensor<T>> targets,
                                 const Tensor<T>& opacity_sh, const LossConfig& cfg, std::mt19937_64& rng) {
  ad::Tape<T> tape;
  std::vector<ad::Var<T>> vars;
  for (const Tensor<T>& r : rendered) vars.push_back(tape.constant(r));
  LossTerms<T> out = reconstruction_loss(std::span<const ad::Var<T>>(vars), targets, tape.constant(opacity_sh),
                                         cfg, rng);
  out.total = {};
  return out;
}

std::string metrics_json(const StepMetrics& m) {
  json j;
  j["step"] = m.step;
  j["loss"] = m.loss;
  j["mse"] = m.mse;
  j["perceptual"] = m.perceptual;
  j["regularizer"] = m.regularizer;
  j["psnr"] = m.psnr;
  j["lr"] = m.lr;
  j["grad_norm"] = m.grad_norm;
  j["key_query_pairs"] = m.key_query_pairs;
  j["seconds"] = m.seconds;
  return j.dump();
}

template <typename T>
Trainer<T>::Trainer(LvtModel<T>& model, LossConfig loss, ScheduleConfig schedule, AdamConfig adam, uint64_t seed)
    : model_(&model), loss_(loss), schedule_(schedule), adam_(model.params(), adam), rng_(seed) {
  loss_.validate();
  schedule_.validate();
}

template <typename T>
StepMetrics Trainer<T>::step(const TrainBatch<T>& batch) {
  const auto start = std::chrono::steady_clock::now();
  LVT_CHECK(batch.targets.size() == batch.target_images.size() && !batch.targets.empty(),
            ErrorCode::kShapeMismatch, "one image per target is required");
  ad::Tape<T> tape;
  const ParamVars<T> vars(tape, model_->params());
  const ForwardResult<T> f = model_->forward(vars, batch.inputs);
  std::vector<ad::Var<T>> rendered;
  rendered.reserve(batch.targets.size());
  for (const RenderTarget& t : batch.targets) {
    rendered.push_back(render(f.splats, model_->config().layout, f.source_rotation, t, model_->config().render));
  }
  const LossTerms<T> terms = reconstruction_loss(std::span<const ad::Var<T>>(rendered),
                                                 std::span<const Tensor<T>>(batch.target_images),
                                                 f.splats.opacity_sh, loss_, rng_);
  tape.backward(terms.total);

  StepMetrics m;
  m.step = step_;
  m.lr = lr_at(std::min(step_ + 1, schedule_.total_steps), schedule_);
  m.grad_norm = adam_.step(model_->params(), vars.gradients(), m.lr);
  m.loss = terms.loss;
  m.mse = terms.mse;
  m.perceptual = terms.perceptual;
  m.regularizer = terms.regularizer;
  m.psnr = psnr_from_mse(terms.mse);
  m.key_query_pairs = f.counters.key_query_pairs;
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ++step_;
  return m;
}

template <typename T>
std::vector<Tensor<T>> render_targets(const GaussianSplatSet<T>& splats, std::span<const RenderTarget> targets,
                                      const RenderSettings& settings) {
  std::vector<Tensor<T>> out;
  out.reserve(targets.size());
  for (const RenderTarget& t : targets) out.push_back(render(splats, t, settings).color);
  return out;
}

namespace {

constexpr char kMagic[8] = {'L', 'V', 'T', 'C', 'K', 'P', 'T', '1'};

}  // namespace

template <typename T>
void save_checkpoint(const std::string& path, const LvtModel<T>& model) {
  const ParamStore<T>& params = model.params();
  json header;
  header["config"] = json::parse(model_config_to_json(model.config()));
  json index = json::array();
  int64_t offset = 0;
  for (size_t i = 0; i < params.count(); ++i) {
    index.push_back({{"name", params.names()[i]}, {"shape", params.at(i).shape()}, {"offset", offset}});
    offset += params.at(i).size();
  }
  header["tensors"] = index;
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  LVT_CHECK(out.good(), ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (size_t i = 0; i < params.count(); ++i) {
    std::vector<float> buf(params.at(i).span().begin(), params.at(i).span().end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  LVT_CHECK(out.good(), ErrorCode::kIo, "failed writing " + path);
}

template <typename T>
LvtModel<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  LVT_CHECK(in.good(), ErrorCode::kIo, "cannot open " + path);
  char magic[8];
  uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  LVT_CHECK(in.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0 && len < (uint64_t{1} << 30),
            ErrorCode::kMalformedManifest, path + " is not a checkpoint");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  ModelConfig cfg;
  ParamStore<T> params;
  try {
    const json header = json::parse(text);
    cfg = model_config_from_json(header.at("config").dump());
    for (const json& t : header.at("tensors")) {
      const Shape shape = t.at("shape").get<Shape>();
      std::vector<float> buf(static_cast<size_t>(shape_numel(shape)));
      in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
      LVT_CHECK(in.good(), ErrorCode::kMalformedManifest, "checkpoint " + path + " is truncated");
      params.add(t.at("name").get<std::string>(), Tensor<T>(shape, std::vector<T>(buf.begin(), buf.end())));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedManifest, "checkpoint header: " + std::string(e.what()));
  }
  return LvtModel<T>(cfg, std::move(params));
}

#define LVT_INSTANTIATE_TRAINING(T)                                                                              \
  template class Adam<T>;                                                                                      \
  template class Trainer<T>;                                                                                   \
  template double image_mse(const Tensor<T>&, const Tensor<T>&);                                               \
  template LossTerms<T> reconstruction_loss(std::span<const ad::Var<T>>, std::span<const Tensor<T>>,           \
                                            const ad::Var<T>&, const LossConfig&, std::mt19937_64&);           \
  template LossTerms<T> reconstruction_loss(std::span<const Tensor<T>>, std::span<const Tensor<T>>,            \
                                            const Tensor<T>&, const LossConfig&, std::mt19937_64&);            \
  template std::vector<Tensor<T>> render_targets(const GaussianSplatSet<T>&, std::span<const RenderTarget>,    \
                                                 const RenderSettings&);                                       \
  template void save_checkpoint(const std::string&, const LvtModel<T>&);                                       \
  template LvtModel<T> load_checkpoint(const std::string&);

LVT_INSTANTIATE_TRAINING(float)
LVT_INSTANTIATE_TRAINING(double)

}  // namespace lvt
