#pragma once

// Clipped group-relative surrogate objective over a selected subset of a
// rollout group, and its exact gradient with respect to the current
// policy's per-token log-probabilities. The objective is maximized.

#include <cstddef>
#include <span>
#include <vector>

namespace pods {

struct ClipConfig {
  double epsilon = 0.2;

  /// Throws std::invalid_argument unless 0 < epsilon < 1.
  void validate() const;
};

/// Per-token log-probabilities of one rollout under the frozen (generating)
/// policy and the current policy.
struct TokenLogProbs {
  std::vector<int> tokens;
  std::vector<double> frozen;
  std::vector<double> current;
};

struct RolloutBatch {
  std::vector<double> rewards;
  std::vector<TokenLogProbs> rollouts;

  std::size_t size() const noexcept { return rollouts.size(); }
  /// Non-empty rollouts, aligned lengths, finite non-positive log-probs.
  void validate() const;
};

/// a_i = (r_i - mean_S) / std_S over the subset, population std. All zeros
/// when std_S == 0. Result is aligned to `subset`.
std::vector<double> normalize_advantages(std::span<const double> rewards, std::span<const std::size_t> subset);

/// min(ratio * a, clip(ratio, 1 - eps, 1 + eps) * a)
double clipped_term(double ratio, double advantage, const ClipConfig& config);

double pods_objective(const RolloutBatch& batch, std::span<const std::size_t> subset,
                      std::span<const double> advantages, const ClipConfig& config);

/// Gradient with respect to each current log-prob, shaped like the batch;
/// rollouts outside the subset get zeros.
std::vector<std::vector<double>> pods_objective_gradient(const RolloutBatch& batch, std::span<const std::size_t> subset,
                                                         std::span<const double> advantages, const ClipConfig& config);

struct ObjectiveWithGradient {
  double value = 0.0;
  std::vector<std::vector<double>> gradient;
};

/// Value and gradient in one pass; the two single-purpose functions above
/// return exactly these numbers.
ObjectiveWithGradient pods_objective_and_gradient(const RolloutBatch& batch, std::span<const std::size_t> subset,
                                                  std::span<const double> advantages, const ClipConfig& config);

/// The objective over every rollout, with advantages normalized over the
/// whole group.
double grpo_objective(const RolloutBatch& batch, const ClipConfig& config);

}  // namespace pods
