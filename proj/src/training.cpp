// Copyright 2026 The HAT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hat/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "hat/error.hpp"
#include "hat/params_io.hpp"

namespace hat {
namespace {

constexpr std::uint64_t kQuerySeedSalt = 0x5175657279ULL;
constexpr std::uint64_t kShuffleSalt = 0x5368756666ULL;

template <typename Model>
TrainingResult<Model> run_training(std::span<const AlignmentSample> samples, Model model,
                                   const TrainingOptions& options) {
  options.validate();
  if (samples.empty()) throw ContractError("training needs at least one sample");
  const nn::ParameterList params = model.parameters();
  nn::OptimizerState optimizer(nn::AdamOptions{options.learning_rate});
  std::mt19937_64 rng(derive_seed(options.seed, kShuffleSalt));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  LossCurve curve;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_banks) {
      const std::size_t end = std::min(order.size(), begin + options.batch_banks);
      const double share = 1.0 / static_cast<double>(end - begin);
      nn::zero_grad(params);
      for (std::size_t b = begin; b < end; ++b) {
        const AlignmentSample& sample = samples[order[b]];
        const Tensor loss = training_loss(model, sample, options);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw TrainingError("training loss became non-finite in epoch " + std::to_string(epoch),
                              epoch);
        }
        total += value;
        tensor::backward(tensor::scale(loss, share));
      }
      nn::adam_step(params, optimizer);
    }
    curve.epoch_loss.push_back(total / static_cast<double>(samples.size()));
  }
  nn::zero_grad(params);
  return {std::move(model), std::move(curve)};
}

}  // namespace

void TrainingOptions::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (batch_banks == 0) throw ConfigError("batch size must be at least one bank");
  if (!(smooth_l1_beta > 0.0)) throw ConfigError("smooth-L1 beta must be positive");
  if (!(pre_refine_weight >= 0.0) || !std::isfinite(pre_refine_weight)) {
    throw ConfigError("pre-refine loss weight must be finite and nonnegative");
  }
}

bool LossCurve::decreasing_trend() const {
  const std::size_t n = epoch_loss.size();
  if (n < 3) return n < 2 || epoch_loss.back() < epoch_loss.front();
  const std::size_t third = n / 3;
  const double head = std::accumulate(epoch_loss.begin(), epoch_loss.begin() + static_cast<std::ptrdiff_t>(third), 0.0);
  const double tail = std::accumulate(epoch_loss.end() - static_cast<std::ptrdiff_t>(third), epoch_loss.end(), 0.0);
  return tail < head;
}

HatModel HatModel::create(const HatDims& dims, std::uint64_t seed) {
  HatModel m{HatParameters::create(dims, seed), {}};
  nn::Rng rng(derive_seed(seed, kQuerySeedSalt));
  m.query = QueryEncoder::create(dims.channels, rng);
  return m;
}

nn::ParameterList HatModel::parameters() const {
  nn::ParameterList out = hat.parameters();
  query.append_parameters("query_encoder", out);
  return out;
}

nn::ParameterList HatModel::query_parameters() const {
  nn::ParameterList out;
  query.append_parameters("query_encoder", out);
  return out;
}

ImplicitModel ImplicitModel::create(std::size_t channels, std::uint64_t seed) {
  ImplicitModel m{ImplicitParameters::create(channels, seed), {}};
  nn::Rng rng(derive_seed(seed, kQuerySeedSalt));
  m.query = QueryEncoder::create(channels, rng);
  return m;
}

nn::ParameterList ImplicitModel::parameters() const {
  nn::ParameterList out = implicit.parameters();
  query.append_parameters("query_encoder", out);
  return out;
}

nn::ParameterList ImplicitModel::query_parameters() const {
  nn::ParameterList out;
  query.append_parameters("query_encoder", out);
  return out;
}

Tensor alignment_loss(const Tensor& prediction, std::span<const Anchor> targets, double beta) {
  std::vector<double> flat;
  flat.reserve(targets.size() * kAnchorDim);
  for (const auto& a : targets) flat.insert(flat.end(), a.v.begin(), a.v.end());
  return tensor::smooth_l1(prediction, flat, kLossColumnWeights, beta);
}

Tensor forward_anchors(const HatModel& model, const AlignmentSample& sample) {
  return align_trace(make_bank(sample, model.query), sample.dt, sample.ego, model.hat).mixed.anchors;
}

Tensor forward_anchors(const ImplicitModel& model, const AlignmentSample& sample) {
  return implicit_sta_trace(make_bank(sample, model.query), sample.ego, model.implicit);
}

Tensor training_loss(const HatModel& model, const AlignmentSample& sample,
                     const TrainingOptions& options) {
  const AlignTrace t = align_trace(make_bank(sample, model.query), sample.dt, sample.ego, model.hat);
  const Tensor final_loss = alignment_loss(t.mixed.anchors, sample.targets, options.smooth_l1_beta);
  if (options.pre_refine_weight == 0.0) return final_loss;
  return tensor::add(final_loss,
                     tensor::scale(alignment_loss(t.decoded.normalized, sample.targets,
                                                  options.smooth_l1_beta),
                                   options.pre_refine_weight));
}

Tensor training_loss(const ImplicitModel& model, const AlignmentSample& sample,
                     const TrainingOptions& options) {
  return alignment_loss(forward_anchors(model, sample), sample.targets, options.smooth_l1_beta);
}

TrainingResult<HatModel> train_hat(std::span<const AlignmentSample> samples, HatModel init,
                                   const TrainingOptions& options) {
  return run_training(samples, std::move(init), options);
}

TrainingResult<ImplicitModel> train_implicit(std::span<const AlignmentSample> samples,
                                             ImplicitModel init, const TrainingOptions& options) {
  return run_training(samples, std::move(init), options);
}

void save_hat_model(const std::string& path, const HatModel& model, nlohmann::json manifest) {
  manifest["kind"] = "hat";
  save_hat_parameters(path, model.hat, std::move(manifest), model.query_parameters());
}

HatModel load_hat_model(const std::string& path) {
  const ParameterFile file = read_parameter_file(path);
  if (file.manifest.value("kind", std::string()) != "hat") {
    throw ValidationError(path + ": not a HAT parameter file");
  }
  HatModel model{load_hat_parameters(file), {}};
  nn::Rng rng(derive_seed(model.hat.seed, kQuerySeedSalt));
  model.query = QueryEncoder::create(model.hat.dims.channels, rng);
  assign_parameters(file, model.query_parameters(), "query_encoder");
  return model;
}

void save_implicit_model(const std::string& path, const ImplicitModel& model,
                         nlohmann::json manifest) {
  manifest["kind"] = "implicit";
  manifest["channels"] = model.implicit.channels;
  manifest["init_seed"] = model.implicit.seed;
  write_parameter_file(path, std::move(manifest), model.parameters());
}

ImplicitModel load_implicit_model(const std::string& path) {
  const ParameterFile file = read_parameter_file(path);
  if (file.manifest.value("kind", std::string()) != "implicit") {
    throw ValidationError(path + ": not an implicit-aligner parameter file");
  }
  ImplicitModel model;
  try {
    model = ImplicitModel::create(file.manifest.at("channels").get<std::size_t>(),
                                  file.manifest.at("init_seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed manifest: " + e.what());
  }
  assign_parameters(file, model.parameters(), "");
  return model;
}

}  // namespace hat
