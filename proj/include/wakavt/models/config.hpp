// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wakavt/attention/layers.hpp"

namespace wakavt::models {

enum class ModelKind { Tlm, Tvae, WakaVT };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Configuration problems, one message per offending field.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/**
 * Architecture and optimisation settings.
 *
 * Layer counts: TLM runs one causal stack of n1 + n2 layers; TVAE has an
 * n1-layer encoder and an n2-layer decoder; WakaVT has two n1-layer stacks
 * before the latent and n2 layers after it.
 */
struct ModelConfig {
  ModelKind kind = ModelKind::WakaVT;
  attention::AttentionKind attention = attention::AttentionKind::Standard;
  std::size_t d_model = 128;
  std::size_t heads = 4;
  std::size_t ff_inner = 512;
  std::size_t n1 = 2;
  std::size_t n2 = 2;
  std::size_t d_latent = 128;
  double alpha = 1.0;
  std::size_t sbow_window = 5;
  double dropout = 0.1;
  std::size_t kl_anneal_steps = 10000;
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  double clip_norm = 5.0;
  double embedding_init = 0.05;

  // Training-loop settings used by the command line.
  std::size_t train_steps = 1000;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  std::size_t log_every = 1;

  /// Reference layer counts: TVAE 4 + 4, the others 2 + 2.
  static ModelConfig defaults(ModelKind kind);

  bool has_latent() const { return kind != ModelKind::Tlm; }
  /// Throws ConfigError listing every invalid field.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& config);
/// Starts from the defaults of the document's "model" kind; unknown keys
/// and wrongly typed values are reported per field.
ModelConfig config_from_json(const nlohmann::json& doc);
ModelConfig load_config(const std::string& path);

}  // namespace wakavt::models
