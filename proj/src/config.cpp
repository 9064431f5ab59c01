#include "pods/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace pods {
namespace {

using nlohmann::json;

const std::set<std::string> kTrainKeys = {
    "schema_version", "name",       "n",          "m",          "rule",         "rule_seed",
    "epsilon",        "learning_rate", "optimizer", "adam_beta1", "adam_beta2", "adam_delta",
    "grad_clip",      "prompts_per_iter", "iterations", "eval_every", "seed",     "content_tokens",
    "max_tokens",     "init_scale", "threads",    "cost"};

const std::set<std::string> kCostKeys = {"t_tok_base",    "sat_batch",        "floor_frac",
                                         "t_update_step", "max_update_batch", "t_accum_overhead"};

std::string qualified(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

double get_real(const json& doc, const std::string& key, double fallback, const std::string& prefix = {}) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_number()) throw ConfigError(qualified(prefix, key), "expected a number");
  return v.get<double>();
}

std::uint64_t get_count(const json& doc, const std::string& key, std::uint64_t fallback,
                        const std::string& prefix = {}) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ConfigError(qualified(prefix, key), "expected a non-negative integer");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(qualified(prefix, key), "expected a non-negative integer");
}

std::string get_string(const json& doc, const std::string& key, const std::string& fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc.at(key);
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  return v.get<std::string>();
}

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) throw ConfigError(qualified(prefix, key), "unknown key");
}

}  // namespace

std::vector<json> load_config_documents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON in ") + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("--config", path + " is not a JSON object");
  if (doc.contains("resolved_config")) return {doc.at("resolved_config")};
  if (doc.contains("resolved_configs")) return doc.at("resolved_configs").get<std::vector<json>>();
  return {doc};
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(ov, "override must look like key=value");
    const std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = raw;

    json* node = &doc;
    std::stringstream path(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(path, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      json& child = (*node)[parts[i]];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) throw ConfigError(key, "cannot descend into non-object '" + parts[i] + "'");
      node = &child;
    }
    (*node)[parts.back()] = value;
  }
}

CostModelParams cost_params_from_json(const json& doc) {
  CostModelParams p;
  if (doc.is_null()) return p;
  if (!doc.is_object()) throw ConfigError("cost", "expected an object");
  reject_unknown(doc, kCostKeys, "cost");
  p.t_tok_base = get_real(doc, "t_tok_base", p.t_tok_base, "cost");
  p.sat_batch = get_real(doc, "sat_batch", p.sat_batch, "cost");
  p.floor_frac = get_real(doc, "floor_frac", p.floor_frac, "cost");
  p.t_update_step = get_real(doc, "t_update_step", p.t_update_step, "cost");
  p.max_update_batch = get_count(doc, "max_update_batch", p.max_update_batch, "cost");
  p.t_accum_overhead = get_real(doc, "t_accum_overhead", p.t_accum_overhead, "cost");
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("cost", e.what());
  }
  return p;
}

json to_json(const CostModelParams& p) {
  return {{"t_tok_base", p.t_tok_base},       {"sat_batch", p.sat_batch},
          {"floor_frac", p.floor_frac},       {"t_update_step", p.t_update_step},
          {"max_update_batch", p.max_update_batch}, {"t_accum_overhead", p.t_accum_overhead}};
}

TrainConfig train_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  reject_unknown(doc, kTrainKeys, "");
  if (doc.contains("schema_version") && get_count(doc, "schema_version", 0) != config_schema_version)
    throw ConfigError("schema_version", "unsupported version (expected " + std::to_string(config_schema_version) + ")");
  for (const char* required : {"n", "m"})
    if (!doc.contains(required)) throw ConfigError(required, "missing required key");

  TrainConfig c;
  c.name = get_string(doc, "name", c.name);
  c.n = get_count(doc, "n", c.n);
  c.m = get_count(doc, "m", c.m);

  const std::string rule = get_string(doc, "rule", std::string(to_string(RuleKind::max_variance)));
  if (rule == "none") {
    c.rule.reset();
  } else {
    try {
      c.rule = DownSampleRule{rule_kind_from_string(rule), std::nullopt};
    } catch (const std::invalid_argument&) {
      throw ConfigError("rule", "unknown rule '" + rule + "'");
    }
    if (doc.contains("rule_seed")) c.rule->seed = get_count(doc, "rule_seed", 0);
  }

  c.epsilon = get_real(doc, "epsilon", c.epsilon);
  c.learning_rate = get_real(doc, "learning_rate", c.learning_rate);
  const std::string opt = get_string(doc, "optimizer", "adam");
  if (opt == "adam")
    c.optimizer = OptimizerKind::adam;
  else if (opt == "sgd")
    c.optimizer = OptimizerKind::sgd;
  else
    throw ConfigError("optimizer", "expected 'adam' or 'sgd'");
  c.adam.beta1 = get_real(doc, "adam_beta1", c.adam.beta1);
  c.adam.beta2 = get_real(doc, "adam_beta2", c.adam.beta2);
  c.adam.delta = get_real(doc, "adam_delta", c.adam.delta);
  c.grad_clip = get_real(doc, "grad_clip", c.grad_clip);
  c.prompts_per_iter = get_count(doc, "prompts_per_iter", c.prompts_per_iter);
  c.iterations = get_count(doc, "iterations", c.iterations);
  c.eval_every = get_count(doc, "eval_every", c.eval_every);
  c.seed = get_count(doc, "seed", c.seed);
  c.content_tokens = static_cast<int>(get_count(doc, "content_tokens", static_cast<std::uint64_t>(c.content_tokens)));
  c.max_tokens = get_count(doc, "max_tokens", c.max_tokens);
  c.init_scale = get_real(doc, "init_scale", c.init_scale);
  c.threads = get_count(doc, "threads", c.threads);
  if (doc.contains("cost")) c.cost = cost_params_from_json(doc.at("cost"));

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("<config>", e.what());
  }
  return c;
}

json to_json(const TrainConfig& c) {
  json j = {{"schema_version", config_schema_version},
            {"name", c.name},
            {"n", c.n},
            {"m", c.m},
            {"rule", c.rule ? std::string(to_string(c.rule->kind)) : std::string("none")},
            {"epsilon", c.epsilon},
            {"learning_rate", c.learning_rate},
            {"optimizer", c.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
            {"adam_beta1", c.adam.beta1},
            {"adam_beta2", c.adam.beta2},
            {"adam_delta", c.adam.delta},
            {"grad_clip", c.grad_clip},
            {"prompts_per_iter", c.prompts_per_iter},
            {"iterations", c.iterations},
            {"eval_every", c.eval_every},
            {"seed", c.seed},
            {"content_tokens", c.content_tokens},
            {"max_tokens", c.max_tokens},
            {"init_scale", c.init_scale},
            {"threads", c.threads},
            {"cost", to_json(c.cost)}};
  if (c.rule && c.rule->seed) j["rule_seed"] = *c.rule->seed;
  return j;
}

}  // namespace pods
