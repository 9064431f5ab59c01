#include "pods/selection.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "pods/rng.hpp"
#include "pods/simd/kernels.hpp"

namespace pods {
namespace {

void check_m(std::size_t n, std::size_t m) {
  if (m == 0 || m > n)
    throw std::invalid_argument("update size m=" + std::to_string(m) + " must be in [1, " + std::to_string(n) + "]");
}

SelectionResult make_result(std::vector<std::size_t> indices, const RewardVector& rewards) {
  std::sort(indices.begin(), indices.end());
  SelectionResult out;
  out.m = indices.size();
  out.indices = std::move(indices);
  out.variance = subset_variance(rewards.values(), out.indices);
  return out;
}

using Keyed = std::pair<double, std::size_t>;

constexpr std::size_t kBucketMinN = 4096;
constexpr std::size_t kBucketTarget = 256;  // mean bucket size, small enough for L1

// (value, index) pairs in ascending order; the index component makes the
// order stable. Large inputs are first scattered into value-range buckets
// (bucket id is monotone in value), so each bucket sorts in cache. Clustered
// rewards degrade to one big bucket, i.e. a plain comparison sort.
std::vector<Keyed> sorted_pairs(std::span<const double> rewards) {
  const std::size_t n = rewards.size();
  std::vector<Keyed> keyed(n);
  // -0.0 and 0.0 compare equal; store one of them so ties stay index-ordered.
  for (std::size_t i = 0; i < n; ++i) keyed[i] = {rewards[i] == 0.0 ? 0.0 : rewards[i], i};
  if (n < kBucketMinN) {
    std::sort(keyed.begin(), keyed.end());
    return keyed;
  }

  const auto [lo_it, hi_it] = std::minmax_element(rewards.begin(), rewards.end());
  const double lo = *lo_it, hi = *hi_it;
  const std::size_t buckets = n / kBucketTarget;
  const double scale = static_cast<double>(buckets) / (hi - lo);
  if (!(hi > lo) || !std::isfinite(scale)) {
    std::sort(keyed.begin(), keyed.end());
    return keyed;
  }
  auto bucket_of = [&](double v) {
    const double b = (v - lo) * scale;
    return std::min(buckets - 1, static_cast<std::size_t>(b));
  };

  std::vector<std::size_t> start(buckets + 1, 0);
  for (const Keyed& kv : keyed) ++start[bucket_of(kv.first) + 1];
  for (std::size_t b = 0; b < buckets; ++b) start[b + 1] += start[b];
  std::vector<Keyed> out(n);
  std::vector<std::size_t> fill(start.begin(), start.end() - 1);
  for (const Keyed& kv : keyed) out[fill[bucket_of(kv.first)]++] = kv;
  for (std::size_t b = 0; b < buckets; ++b)
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(start[b]), out.begin() + static_cast<std::ptrdiff_t>(start[b + 1]));
  return out;
}

}  // namespace

RewardVector::RewardVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("reward vector must be non-empty");
  for (double v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("reward vector contains a non-finite value");
}

std::string_view to_string(RuleKind kind) noexcept {
  switch (kind) {
    case RuleKind::max_variance:
      return "max_variance";
    case RuleKind::max_reward:
      return "max_reward";
    case RuleKind::random:
      return "random";
  }
  return "unknown";
}

RuleKind rule_kind_from_string(std::string_view name) {
  for (RuleKind k : {RuleKind::max_variance, RuleKind::max_reward, RuleKind::random})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown down-sampling rule: " + std::string(name));
}

double subset_variance(std::span<const double> rewards, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("subset_variance: empty index set");
  double s = 0.0;
  double q = 0.0;
  for (std::size_t i : indices) {
    if (i >= rewards.size())
      throw std::invalid_argument("subset_variance: index " + std::to_string(i) + " out of range");
    s += rewards[i];
    q += rewards[i] * rewards[i];
  }
  const double count = static_cast<double>(indices.size());
  const double mean = s / count;
  return std::max(0.0, q / count - mean * mean);
}

PrefixMoments prefix_moments(std::span<const double> sorted_rewards) {
  assert(std::is_sorted(sorted_rewards.begin(), sorted_rewards.end()));
  PrefixMoments p;
  p.sum.resize(sorted_rewards.size() + 1);
  p.sum_sq.resize(sorted_rewards.size() + 1);
  p.sum[0] = 0.0;
  p.sum_sq[0] = 0.0;
  for (std::size_t i = 0; i < sorted_rewards.size(); ++i) {
    p.sum[i + 1] = p.sum[i] + sorted_rewards[i];
    p.sum_sq[i + 1] = p.sum_sq[i] + sorted_rewards[i] * sorted_rewards[i];
  }
  return p;
}

std::vector<std::size_t> stable_argsort(std::span<const double> rewards) {
  const auto keyed = sorted_pairs(rewards);
  std::vector<std::size_t> order(rewards.size());
  for (std::size_t i = 0; i < keyed.size(); ++i) order[i] = keyed[i].second;
  return order;
}

std::size_t max_variance_split(std::span<const double> sorted_rewards, std::size_t m) {
  check_m(sorted_rewards.size(), m);
  const PrefixMoments p = prefix_moments(sorted_rewards);
  std::vector<double> split_var(m + 1);
  simd::active().split_variances(p.sum, p.sum_sq, m, split_var);
  std::size_t best = 0;
  for (std::size_t k = 1; k <= m; ++k)
    if (split_var[k] > split_var[best]) best = k;
  return best;
}

SelectionResult max_variance_select(const RewardVector& rewards, std::size_t m) {
  const std::size_t n = rewards.size();
  check_m(n, m);
  const auto keyed = sorted_pairs(rewards.values());
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = keyed[i].first;
  const std::size_t k = max_variance_split(sorted, m);

  // Mark and scan instead of sorting the chosen indices.
  std::vector<unsigned char> chosen(n, 0);
  for (std::size_t i = 0; i < m - k; ++i) chosen[keyed[i].second] = 1;
  for (std::size_t i = n - k; i < n; ++i) chosen[keyed[i].second] = 1;
  SelectionResult out;
  out.m = m;
  out.indices.reserve(m);
  for (std::size_t i = 0; i < n; ++i)
    if (chosen[i]) out.indices.push_back(i);
  out.variance = subset_variance(rewards.values(), out.indices);
  return out;
}

SelectionResult max_reward_select(const RewardVector& rewards, std::size_t m) {
  const std::size_t n = rewards.size();
  check_m(n, m);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rewards[a] > rewards[b]; });
  order.resize(m);
  return make_result(std::move(order), rewards);
}

SelectionResult random_select(std::size_t n, std::size_t m, std::uint64_t seed) {
  check_m(n, m);
  // Partial Fisher-Yates: the first m slots are a uniform size-m subset.
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Engine rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  SelectionResult out;
  out.m = m;
  out.indices = std::move(pool);
  return out;
}

SelectionResult brute_force_select(const RewardVector& rewards, std::size_t m) {
  const std::size_t n = rewards.size();
  if (n > brute_force_max_n)
    throw std::invalid_argument("brute_force_select: n=" + std::to_string(n) + " exceeds enumeration guard");
  check_m(n, m);
  std::vector<std::size_t> current(m);
  std::iota(current.begin(), current.end(), std::size_t{0});
  std::vector<std::size_t> best = current;
  double best_var = subset_variance(rewards.values(), current);
  for (;;) {
    // Next combination in lexicographic order.
    std::size_t i = m;
    while (i > 0 && current[i - 1] == n - m + (i - 1)) --i;
    if (i == 0) break;
    ++current[i - 1];
    for (std::size_t j = i; j < m; ++j) current[j] = current[j - 1] + 1;
    const double v = subset_variance(rewards.values(), current);
    if (v > best_var) {
      best_var = v;
      best = current;
    }
  }
  SelectionResult out;
  out.m = m;
  out.indices = std::move(best);
  out.variance = best_var;
  return out;
}

void fill_variance(SelectionResult& result, const RewardVector& rewards) {
  result.variance = subset_variance(rewards.values(), result.indices);
}

SelectionResult down_sample(const DownSampleRule& rule, const RewardVector& rewards, std::size_t m) {
  switch (rule.kind) {
    case RuleKind::max_variance:
      return max_variance_select(rewards, m);
    case RuleKind::max_reward:
      return max_reward_select(rewards, m);
    case RuleKind::random: {
      if (!rule.seed) throw std::invalid_argument("random down-sampling requires a seed");
      SelectionResult out = random_select(rewards.size(), m, *rule.seed);
      fill_variance(out, rewards);
      return out;
    }
  }
  throw std::invalid_argument("unknown down-sampling rule");
}

}  // namespace pods
