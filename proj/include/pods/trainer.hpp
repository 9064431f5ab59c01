#pragma once

// Down-sampled group-relative policy optimization on the synthetic task:
// per iteration, generate n rollouts per prompt with a frozen snapshot,
// score them, keep m per prompt, and take one ascent step on the clipped
// surrogate averaged over prompts.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pods/costmodel.hpp"
#include "pods/objective.hpp"
#include "pods/policy_env.hpp"
#include "pods/selection.hpp"

namespace pods {

enum class OptimizerKind { sgd, adam };

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double delta = 1e-8;
};

struct TrainConfig {
  std::string name = "run";
  std::size_t n = 64;
  std::size_t m = 16;
  /// nullopt trains on every rollout (vanilla GRPO); requires m == n.
  std::optional<DownSampleRule> rule = DownSampleRule{};
  double epsilon = 0.2;
  double learning_rate = 0.05;
  OptimizerKind optimizer = OptimizerKind::adam;
  AdamConfig adam;
  double grad_clip = 1.0;  // global norm; <= 0 disables
  std::size_t prompts_per_iter = 4;
  std::size_t iterations = 200;
  std::size_t eval_every = 5;
  std::uint64_t seed = 0;
  int content_tokens = 8;
  std::size_t max_tokens = default_max_tokens;
  double init_scale = 0.01;  // std of the initial logits
  std::size_t threads = 0;   // 0: POD_THREADS or hardware concurrency
  CostModelParams cost;

  void validate() const;
};

struct TrainResult {
  TrainingCurve curve;
  BigramPolicy policy;
};

/// Called after each update with the iteration index and the updated policy.
using IterationObserver = std::function<void(std::size_t iter, const BigramPolicy& policy)>;

TrainResult train_with_policy(const TrainConfig& config, const IterationObserver& observer = {});
TrainingCurve train(const TrainConfig& config);

/// Runs every config on the prompt and rollout streams of configs[0].seed.
std::vector<TrainingCurve> run_comparison(std::span<const TrainConfig> configs);

struct SweepCell {
  std::size_t n = 0;
  std::size_t m = 0;
  TrainingCurve curve;
};

/// Cross product of n_values x m_values on top of `base`.
std::vector<SweepCell> sweep(const TrainConfig& base, std::span<const std::size_t> n_values,
                             std::span<const std::size_t> m_values);

BigramPolicy initial_policy(const TrainConfig& config);

/// Accumulates d(objective)/d(params) for one prompt's rollouts, given the
/// gradient with respect to each token's log-probability.
void accumulate_policy_gradient(const BigramPolicy& policy, const Prompt& prompt, std::span<const int> tokens,
                                std::span<const double> dlogp, std::span<double> grad);

/// Number of generation threads: explicit request, else POD_THREADS, else
/// hardware concurrency.
std::size_t generation_threads(std::size_t requested);

}  // namespace pods
