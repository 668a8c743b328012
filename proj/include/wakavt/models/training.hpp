// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wakavt/models/loss.hpp"
#include "wakavt/models/model.hpp"

namespace wakavt::models {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adam moments (one pair per parameter, store order) and the step count.
struct TrainState {
  std::vector<Tensor> m, v;
  std::size_t step = 0;

  static TrainState fresh(const numerics::ParameterStore& store);
  /// Throws std::invalid_argument when a moment shape disagrees with the store.
  void check(const numerics::ParameterStore& store) const;
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Batch averages of the per-poem loss terms.
struct StepReport {
  std::size_t step = 0;  // count after the update
  double total = 0, nll = 0, kl = 0, aux = 0;
  double anneal_weight = 0;
  double grad_norm = 0;  // before clipping
  std::size_t tokens = 0;
};

/// "step,nll,kl,aux,anneal_weight"
std::string format_log_line(const StepReport& r);

/// One Adam update on `batch`. Dropout masks and latent noise come from a
/// generator seeded with mix_seed(seed, state.step).
StepReport train_step(Model& model, TrainState& state, std::span<const corpus::Poem> batch,
                      std::uint64_t seed, const AdamSettings& adam = {});

/// Loss terms on a batch without dropout or parameter updates. Latent noise
/// is drawn from Rng(seed).
StepReport evaluate_loss(const Model& model, std::span<const corpus::Poem> batch,
                         numerics::Mode mode, double kl_weight, std::uint64_t seed);

void save_model(const std::string& path, const Model& model, const TrainState* state = nullptr);

struct LoadedModel {
  std::unique_ptr<Model> model;
  TrainState state;  // empty moments when the file holds none
};
LoadedModel load_model(const std::string& path);

}  // namespace wakavt::models
