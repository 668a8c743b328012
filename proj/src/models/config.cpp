// SPDX-License-Identifier: Apache-2.0
#include "wakavt/models/config.hpp"

#include <fstream>
#include <functional>
#include <map>

namespace wakavt::models {

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Tlm: return "tlm";
    case ModelKind::Tvae: return "tvae";
    case ModelKind::WakaVT: return "wakavt";
  }
  return "wakavt";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "tlm") return ModelKind::Tlm;
  if (name == "tvae") return ModelKind::Tvae;
  if (name == "wakavt") return ModelKind::WakaVT;
  throw std::invalid_argument("unknown model kind '" + std::string(name) +
                              "' (expected tlm, tvae or wakavt)");
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string s = "invalid configuration";
  for (const auto& i : items) s += "\n  " + i;
  return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}

ModelConfig ModelConfig::defaults(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  if (kind == ModelKind::Tvae) c.n1 = c.n2 = 4;
  return c;
}

void ModelConfig::validate() const {
  std::vector<std::string> p;
  if (d_model == 0) p.push_back("d_model: must be positive");
  if (heads == 0) p.push_back("heads: must be positive");
  else if (d_model % heads != 0) p.push_back("heads: must divide d_model");
  if (ff_inner == 0) p.push_back("ff_inner: must be positive");
  if (n1 == 0) p.push_back("n1: must be at least 1");
  if (n2 == 0) p.push_back("n2: must be at least 1");
  if (d_latent == 0) p.push_back("d_latent: must be positive");
  if (!(alpha >= 0.0)) p.push_back("alpha: must be non-negative");
  if (sbow_window == 0) p.push_back("sbow_window: must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) p.push_back("dropout: must lie in [0, 1)");
  if (kl_anneal_steps == 0) p.push_back("kl_anneal_steps: must be at least 1");
  if (!(learning_rate > 0.0)) p.push_back("learning_rate: must be positive");
  if (batch_size == 0) p.push_back("batch_size: must be positive");
  if (!(clip_norm > 0.0)) p.push_back("clip_norm: must be positive");
  if (!(embedding_init > 0.0)) p.push_back("embedding_init: must be positive");
  if (log_every == 0) p.push_back("log_every: must be positive");
  if (!p.empty()) throw ConfigError(std::move(p));
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"model", model_kind_name(c.kind)},
          {"attention", attention::attention_kind_name(c.attention)},
          {"d_model", c.d_model},
          {"heads", c.heads},
          {"ff_inner", c.ff_inner},
          {"n1", c.n1},
          {"n2", c.n2},
          {"d_latent", c.d_latent},
          {"alpha", c.alpha},
          {"sbow_window", c.sbow_window},
          {"dropout", c.dropout},
          {"kl_anneal_steps", c.kl_anneal_steps},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"clip_norm", c.clip_norm},
          {"embedding_init", c.embedding_init},
          {"train_steps", c.train_steps},
          {"checkpoint_every", c.checkpoint_every},
          {"log_every", c.log_every}};
}

ModelConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError({"<root>: expected a JSON object"});
  std::vector<std::string> problems;
  ModelConfig c;
  if (doc.contains("model")) {
    try {
      c = ModelConfig::defaults(parse_model_kind(doc.at("model").get<std::string>()));
    } catch (const std::exception& e) {
      problems.push_back(std::string("model: ") + e.what());
    }
  }

  using Setter = std::function<void(const nlohmann::json&)>;
  auto size_field = [](std::size_t& dst) {
    return Setter([&dst](const nlohmann::json& v) {
      if (!v.is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
      dst = v.get<std::size_t>();
    });
  };
  auto real_field = [](double& dst) {
    return Setter([&dst](const nlohmann::json& v) {
      if (!v.is_number()) throw std::invalid_argument("expected a number");
      dst = v.get<double>();
    });
  };
  const std::map<std::string, Setter> fields{
      {"model", [](const nlohmann::json&) {}},
      {"attention",
       [&c](const nlohmann::json& v) {
         c.attention = attention::parse_attention_kind(v.get<std::string>());
       }},
      {"d_model", size_field(c.d_model)},
      {"heads", size_field(c.heads)},
      {"ff_inner", size_field(c.ff_inner)},
      {"n1", size_field(c.n1)},
      {"n2", size_field(c.n2)},
      {"d_latent", size_field(c.d_latent)},
      {"alpha", real_field(c.alpha)},
      {"sbow_window", size_field(c.sbow_window)},
      {"dropout", real_field(c.dropout)},
      {"kl_anneal_steps", size_field(c.kl_anneal_steps)},
      {"learning_rate", real_field(c.learning_rate)},
      {"batch_size", size_field(c.batch_size)},
      {"clip_norm", real_field(c.clip_norm)},
      {"embedding_init", real_field(c.embedding_init)},
      {"train_steps", size_field(c.train_steps)},
      {"checkpoint_every", size_field(c.checkpoint_every)},
      {"log_every", size_field(c.log_every)},
  };
  for (const auto& [key, value] : doc.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) {
      problems.push_back(key + ": unknown field");
      continue;
    }
    try {
      it->second(value);
    } catch (const std::exception& e) {
      problems.push_back(key + ": " + e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  c.validate();
  return c;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  return config_from_json(doc);
}

}  // namespace wakavt::models
