#pragma once

// Experiment configuration documents (JSON, schema version 1).
//
// Keys: name, n, m, rule (max_variance | max_reward | random | none),
// rule_seed, epsilon, learning_rate, optimizer (adam | sgd), adam_beta1,
// adam_beta2, adam_delta, grad_clip, prompts_per_iter, iterations,
// eval_every, seed, content_tokens, max_tokens, init_scale, threads, and a
// nested "cost" object with the CostModelParams fields. n and m are
// required; everything else has a default. Unknown keys are rejected.

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pods/costmodel.hpp"
#include "pods/trainer.hpp"

namespace pods {

inline constexpr int config_schema_version = 1;

/// A malformed or incomplete configuration; key() names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Reads a JSON document from disk. A run manifest is accepted too: its
/// resolved configs are returned in place of the raw document.
std::vector<nlohmann::json> load_config_documents(const std::string& path);

/// Applies "a.b=value" overrides. The value is parsed as JSON when it is
/// valid JSON, else taken as a string.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

TrainConfig train_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const TrainConfig& config);

CostModelParams cost_params_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const CostModelParams& params);

}  // namespace pods
