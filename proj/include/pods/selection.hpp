#pragma once

// Rollout down-sampling rules: pick m of the n rollouts generated for one
// prompt, from their rewards alone.
//
// Indices are 0-based positions into the caller's reward array and are
// always returned sorted ascending.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pods {

/// Per-rollout rewards of one group. Non-empty and finite.
class RewardVector {
 public:
  explicit RewardVector(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

struct SelectionResult {
  std::vector<std::size_t> indices;
  std::size_t m = 0;
  double variance = 0.0;
};

enum class RuleKind { max_variance, max_reward, random };

std::string_view to_string(RuleKind kind) noexcept;
/// Throws std::invalid_argument on an unknown name.
RuleKind rule_kind_from_string(std::string_view name);

struct DownSampleRule {
  RuleKind kind = RuleKind::max_variance;
  std::optional<std::uint64_t> seed;  // random rule only
};

/// Population variance (divisor |indices|) of the selected rewards, clamped at 0.
double subset_variance(std::span<const double> rewards, std::span<const std::size_t> indices);

struct PrefixMoments {
  std::vector<double> sum;     // sum[k] = r[0] + ... + r[k-1]
  std::vector<double> sum_sq;  // same for r^2
};

/// Prefix sums of a sorted reward array; both arrays have length n + 1.
PrefixMoments prefix_moments(std::span<const double> sorted_rewards);

/// Argsort ascending; equal rewards keep original index order.
std::vector<std::size_t> stable_argsort(std::span<const double> rewards);

/// Maximum-variance size-m subset in O(n log n): sort, then sweep the m + 1
/// splits {m-k lowest} + {k highest}, keeping the first (smallest k) strict
/// maximum.
SelectionResult max_variance_select(const RewardVector& rewards, std::size_t m);

/// Split index k chosen by the sweep, exposed for tests of the split shape.
std::size_t max_variance_split(std::span<const double> sorted_rewards, std::size_t m);

/// The m largest rewards, ties toward the smaller original index.
SelectionResult max_reward_select(const RewardVector& rewards, std::size_t m);

/// m distinct indices uniform over all size-m subsets of [0, n). The result's
/// variance is left at 0; use fill_variance() when rewards are at hand.
SelectionResult random_select(std::size_t n, std::size_t m, std::uint64_t seed);

/// Exhaustive search over all C(n, m) subsets; n <= brute_force_max_n.
SelectionResult brute_force_select(const RewardVector& rewards, std::size_t m);
inline constexpr std::size_t brute_force_max_n = 20;

void fill_variance(SelectionResult& result, const RewardVector& rewards);

/// Applies a rule. The random rule requires rule.seed.
SelectionResult down_sample(const DownSampleRule& rule, const RewardVector& rewards, std::size_t m);

}  // namespace pods
