// SPDX-License-Identifier: Apache-2.0
#include "wakavt/models/training.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace wakavt::models {

namespace ops = numerics;

TrainState TrainState::fresh(const numerics::ParameterStore& store) {
  TrainState s;
  for (const auto& e : store.entries()) {
    s.m.emplace_back(e.var.shape(), 0.0);
    s.v.emplace_back(e.var.shape(), 0.0);
  }
  return s;
}

void TrainState::check(const numerics::ParameterStore& store) const {
  const auto& entries = store.entries();
  if (m.size() != entries.size() || v.size() != entries.size()) {
    throw std::invalid_argument("optimizer state holds " + std::to_string(m.size()) +
                                " moments for " + std::to_string(entries.size()) + " parameters");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (m[i].shape() != entries[i].var.shape() || v[i].shape() != entries[i].var.shape()) {
      throw std::invalid_argument("optimizer moment shape mismatch for '" + entries[i].name + "'");
    }
  }
}

std::string format_log_line(const StepReport& r) {
  std::ostringstream s;
  s.precision(10);
  s << r.step << ',' << r.nll << ',' << r.kl << ',' << r.aux << ',' << r.anneal_weight;
  return s.str();
}

namespace {

struct BatchLoss {
  Var total;
  StepReport report;
};

BatchLoss batch_loss(const Model& model, std::span<const corpus::Poem> batch, numerics::Mode mode,
                     double kl_weight, bool dropout, numerics::Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  ForwardOptions opt;
  opt.mode = mode;
  opt.dropout = dropout;
  opt.rng = &rng;
  std::vector<Var> totals;
  BatchLoss out;
  for (const auto& poem : batch) {
    const ForwardTrace trace = model.forward(poem, opt);
    const LossTerms terms = compute_loss(model, trace, kl_weight);
    totals.push_back(terms.total);
    out.report.nll += terms.nll.value().item();
    out.report.kl += terms.kl.value().item();
    out.report.aux += terms.aux.value().item();
    out.report.tokens += trace.targets.size();
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  Var sum = totals[0];
  for (std::size_t i = 1; i < totals.size(); ++i) sum = ops::add(sum, totals[i]);
  out.total = ops::scale(sum, inv);
  out.report.nll *= inv;
  out.report.kl *= inv;
  out.report.aux *= inv;
  out.report.total = out.total.value().item();
  out.report.anneal_weight = kl_weight;
  return out;
}

}  // namespace

StepReport train_step(Model& model, TrainState& state, std::span<const corpus::Poem> batch,
                      std::uint64_t seed, const AdamSettings& adam) {
  auto& store = model.store();
  if (state.m.empty()) {
    const std::size_t step = state.step;
    state = TrainState::fresh(store);
    state.step = step;
  }
  state.check(store);
  const auto& c = model.config();
  numerics::Rng rng(numerics::mix_seed(seed, state.step));
  const double w = c.has_latent() ? kl_anneal(state.step, c.kl_anneal_steps) : 0.0;

  BatchLoss loss = batch_loss(model, batch, numerics::Mode::Train, w, true, rng);
  if (!std::isfinite(loss.report.total)) {
    throw TrainingError("non-finite loss at step " + std::to_string(state.step) +
                        ": nll=" + std::to_string(loss.report.nll) +
                        " kl=" + std::to_string(loss.report.kl) +
                        " aux=" + std::to_string(loss.report.aux));
  }
  numerics::backward(loss.total, store);
  const double norm = store.grad_norm();
  if (!std::isfinite(norm)) {
    throw TrainingError("non-finite gradient norm at step " + std::to_string(state.step));
  }
  const double clip = norm > c.clip_norm ? c.clip_norm / norm : 1.0;

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  const auto& entries = store.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& node = *entries[i].var.node();
    auto value = node.value.values();
    auto grad = node.grad.values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k] * clip;
      m[k] = adam.beta1 * m[k] + (1.0 - adam.beta1) * g;
      v[k] = adam.beta2 * v[k] + (1.0 - adam.beta2) * g * g;
      value[k] -= c.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + adam.eps);
    }
  }
  loss.report.step = state.step;
  loss.report.grad_norm = norm;
  return loss.report;
}

StepReport evaluate_loss(const Model& model, std::span<const corpus::Poem> batch,
                         numerics::Mode mode, double kl_weight, std::uint64_t seed) {
  numerics::NoGradGuard guard;
  numerics::Rng rng(seed);
  return batch_loss(model, batch, mode, kl_weight, false, rng).report;
}

void save_model(const std::string& path, const Model& model, const TrainState* state) {
  numerics::Checkpoint ckpt;
  ckpt.meta["config"] = to_json(model.config()).dump();
  ckpt.meta["vocab_size"] = std::to_string(model.vocab_size());
  ckpt.meta["step"] = std::to_string(state ? state->step : 0);
  numerics::export_parameters(model.store(), ckpt);
  if (state && !state->m.empty()) {
    state->check(model.store());
    const auto& entries = model.store().entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      ckpt.records.push_back({"adam.m." + entries[i].name, "adam", state->m[i]});
      ckpt.records.push_back({"adam.v." + entries[i].name, "adam", state->v[i]});
    }
  }
  numerics::save_checkpoint(path, ckpt);
}

LoadedModel load_model(const std::string& path) {
  const auto ckpt = numerics::load_checkpoint(path);
  auto meta = [&](const char* key) -> const std::string& {
    auto it = ckpt.meta.find(key);
    if (it == ckpt.meta.end()) throw std::runtime_error(path + ": checkpoint lacks '" + key + "'");
    return it->second;
  };
  LoadedModel out;
  const ModelConfig config = config_from_json(nlohmann::json::parse(meta("config")));
  out.model = std::make_unique<Model>(config, std::stoull(meta("vocab_size")), 0);
  numerics::import_parameters(ckpt, out.model->store());
  out.state.step = std::stoull(meta("step"));
  const auto& entries = out.model->store().entries();
  if (!entries.empty() && ckpt.find("adam.m." + entries[0].name)) {
    for (const auto& e : entries) {
      const auto* m = ckpt.find("adam.m." + e.name);
      const auto* v = ckpt.find("adam.v." + e.name);
      if (!m || !v) throw std::runtime_error(path + ": incomplete optimizer state");
      out.state.m.push_back(m->value);
      out.state.v.push_back(v->value);
    }
    out.state.check(out.model->store());
  }
  return out;
}

}  // namespace wakavt::models
