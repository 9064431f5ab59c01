#include "pods/objective.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pods/simd/kernels.hpp"

namespace pods {
namespace {

void check_subset(const RolloutBatch& batch, std::span<const std::size_t> subset, std::span<const double> advantages) {
  if (subset.empty()) throw std::invalid_argument("objective: empty subset");
  if (advantages.size() != subset.size())
    throw std::invalid_argument("objective: advantage vector has " + std::to_string(advantages.size()) +
                                " entries for a subset of " + std::to_string(subset.size()));
  if (batch.rewards.size() != batch.rollouts.size())
    throw std::invalid_argument("objective: rewards and rollouts differ in length");
  for (std::size_t i : subset)
    if (i >= batch.size()) throw std::invalid_argument("objective: subset index " + std::to_string(i) + " out of range");
}

// Shared by the value and gradient entry points so both see identical numbers.
double evaluate(const RolloutBatch& batch, std::span<const std::size_t> subset, std::span<const double> advantages,
                const ClipConfig& config, std::vector<std::vector<double>>* gradient) {
  config.validate();
  check_subset(batch, subset, advantages);
  const auto& kernels = simd::active();
  const double m = static_cast<double>(subset.size());

  if (gradient) {
    gradient->assign(batch.size(), {});
    for (std::size_t i = 0; i < batch.size(); ++i) (*gradient)[i].assign(batch.rollouts[i].current.size(), 0.0);
  }

  std::vector<double> ratios;
  std::vector<double> terms;
  std::vector<double> scratch;
  double total = 0.0;
  for (std::size_t j = 0; j < subset.size(); ++j) {
    const TokenLogProbs& rollout = batch.rollouts[subset[j]];
    const std::size_t len = rollout.current.size();
    if (len == 0 || rollout.frozen.size() != len)
      throw std::invalid_argument("objective: rollout " + std::to_string(subset[j]) + " has misaligned log-probs");
    ratios.resize(len);
    terms.resize(len);
    for (std::size_t t = 0; t < len; ++t) ratios[t] = std::exp(rollout.current[t] - rollout.frozen[t]);

    const double length = static_cast<double>(len);
    const double grad_scale = 1.0 / (m * length);
    std::span<double> grad_out;
    if (gradient) {
      grad_out = (*gradient)[subset[j]];
    } else {
      scratch.resize(len);
      grad_out = scratch;
    }
    kernels.clipped_surrogate(ratios, advantages[j], config.epsilon, grad_scale, terms, grad_out);
    total += kernels.sum(terms) / length;
  }
  return total / m;
}

}  // namespace

void ClipConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("clip epsilon must lie in (0, 1), got " + std::to_string(epsilon));
}

void RolloutBatch::validate() const {
  if (rewards.size() != rollouts.size()) throw std::invalid_argument("rollout batch: rewards/rollouts size mismatch");
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const auto& r = rollouts[i];
    if (r.current.empty() || r.current.size() != r.frozen.size() || (!r.tokens.empty() && r.tokens.size() != r.current.size()))
      throw std::invalid_argument("rollout batch: rollout " + std::to_string(i) + " has misaligned arrays");
    for (std::size_t t = 0; t < r.current.size(); ++t)
      if (!std::isfinite(r.current[t]) || !std::isfinite(r.frozen[t]) || r.current[t] > 0.0 || r.frozen[t] > 0.0)
        throw std::invalid_argument("rollout batch: rollout " + std::to_string(i) + " has an invalid log-probability");
  }
}

std::vector<double> normalize_advantages(std::span<const double> rewards, std::span<const std::size_t> subset) {
  if (subset.empty()) throw std::invalid_argument("normalize_advantages: empty subset");
  double s = 0.0;
  for (std::size_t i : subset) {
    if (i >= rewards.size()) throw std::invalid_argument("normalize_advantages: index out of range");
    s += rewards[i];
  }
  const double count = static_cast<double>(subset.size());
  const double mean = s / count;
  double ss = 0.0;
  for (std::size_t i : subset) ss += (rewards[i] - mean) * (rewards[i] - mean);
  const double sd = std::sqrt(ss / count);

  std::vector<double> adv(subset.size(), 0.0);
  if (sd == 0.0) return adv;
  for (std::size_t j = 0; j < subset.size(); ++j) adv[j] = (rewards[subset[j]] - mean) / sd;
  return adv;
}

double clipped_term(double ratio, double advantage, const ClipConfig& config) {
  config.validate();
  if (!(ratio > 0.0)) throw std::invalid_argument("clipped_term: ratio must be positive");
  const double ratios[1] = {ratio};
  double term[1];
  double grad[1];
  simd::scalar_kernels().clipped_surrogate(std::span<const double>(ratios), advantage, config.epsilon, 1.0,
                                           std::span<double>(term), std::span<double>(grad));
  return term[0];
}

double pods_objective(const RolloutBatch& batch, std::span<const std::size_t> subset,
                      std::span<const double> advantages, const ClipConfig& config) {
  return evaluate(batch, subset, advantages, config, nullptr);
}

std::vector<std::vector<double>> pods_objective_gradient(const RolloutBatch& batch, std::span<const std::size_t> subset,
                                                         std::span<const double> advantages, const ClipConfig& config) {
  std::vector<std::vector<double>> grad;
  evaluate(batch, subset, advantages, config, &grad);
  return grad;
}

ObjectiveWithGradient pods_objective_and_gradient(const RolloutBatch& batch, std::span<const std::size_t> subset,
                                                  std::span<const double> advantages, const ClipConfig& config) {
  ObjectiveWithGradient out;
  out.value = evaluate(batch, subset, advantages, config, &out.gradient);
  return out;
}

double grpo_objective(const RolloutBatch& batch, const ClipConfig& config) {
  std::vector<std::size_t> all(batch.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::vector<double> adv = normalize_advantages(batch.rewards, all);
  return pods_objective(batch, all, adv, config);
}

}  // namespace pods
