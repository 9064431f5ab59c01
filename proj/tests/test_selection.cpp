#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pods/curve_io.hpp"
#include "pods/rng.hpp"
#include "pods/selection.hpp"

using namespace pods;
using Indices = std::vector<std::size_t>;

TEST_CASE("reward vectors reject empty and non-finite input") {
  CHECK_THROWS_AS(RewardVector({}), std::invalid_argument);
  CHECK_THROWS_AS(RewardVector({1.0, NAN}), std::invalid_argument);
  CHECK_THROWS_AS(RewardVector({INFINITY}), std::invalid_argument);
  CHECK(RewardVector({0.5}).size() == 1);
}

TEST_CASE("subset_variance is the population variance") {
  const std::vector<double> r = {0.0, 0.2, 0.5, 0.9, 1.0};
  // mean 0.6333..., squares (0.4011 + 0.0711 + 0.1344) / 3
  CHECK(subset_variance(r, Indices{0, 3, 4}) == doctest::Approx(0.2022222222222222).epsilon(1e-12));
  CHECK(subset_variance(r, Indices{2}) == 0.0);
  CHECK(subset_variance(std::vector<double>{1.0, 1.0, 1.0}, Indices{0, 1, 2}) == 0.0);
  CHECK_THROWS_AS(subset_variance(r, Indices{}), std::invalid_argument);
  CHECK_THROWS_AS(subset_variance(r, Indices{5}), std::invalid_argument);
}

TEST_CASE("prefix moments") {
  const PrefixMoments p = prefix_moments(std::vector<double>{1.0, 2.0, 3.0});
  CHECK(p.sum == std::vector<double>{0.0, 1.0, 3.0, 6.0});
  CHECK(p.sum_sq == std::vector<double>{0.0, 1.0, 5.0, 14.0});
}

TEST_CASE("stable argsort keeps equal rewards in index order") {
  CHECK(stable_argsort(std::vector<double>{0.5, 0.1, 0.5, 0.1}) == Indices{1, 3, 0, 2});
  CHECK(stable_argsort(std::vector<double>{-0.0, 0.0}) == Indices{0, 1});
}

TEST_CASE("max variance picks extremes") {
  const RewardVector r({0.0, 0.2, 0.5, 0.9, 1.0});
  SUBCASE("m = 2 takes min and max") {
    const auto s = max_variance_select(r, 2);
    CHECK(s.indices == Indices{0, 4});
    CHECK(s.variance == doctest::Approx(0.25));
    CHECK(s.m == 2);
  }
  SUBCASE("m = 3") {
    const auto s = max_variance_select(r, 3);
    CHECK(s.indices == Indices{0, 3, 4});
    CHECK(s.variance == doctest::Approx(0.2022222222222222).epsilon(1e-12));
  }
  SUBCASE("m = n returns everything in order") {
    const auto s = max_variance_select(r, 5);
    CHECK(s.indices == Indices{0, 1, 2, 3, 4});
  }
  SUBCASE("m = 1 has zero variance") {
    const auto s = max_variance_select(r, 1);
    CHECK(s.indices.size() == 1);
    CHECK(s.variance == 0.0);
  }
  CHECK_THROWS_AS(max_variance_select(r, 0), std::invalid_argument);
  CHECK_THROWS_AS(max_variance_select(r, 6), std::invalid_argument);
}

TEST_CASE("exactly tied splits resolve to the smallest k") {
  // k = 1 and k = 2 both give variance 2/9.
  const RewardVector r({0.0, 0.0, 0.0, 1.0, 1.0, 1.0});
  std::vector<double> sorted(r.values().begin(), r.values().end());
  CHECK(max_variance_split(sorted, 3) == 1);
  const auto s = max_variance_select(r, 3);
  CHECK(s.indices == Indices{0, 1, 5});
  CHECK(s.variance == doctest::Approx(2.0 / 9.0));
}

TEST_CASE("numerically near-tied splits still attain the optimum") {
  // Splits k = 1 ({0.1,0.2,1.0}) and k = 2 ({0.1,0.9,1.0}) have equal exact variance.
  const RewardVector r({0.1, 0.2, 0.5, 0.9, 1.0});
  const auto s = max_variance_select(r, 3);
  CHECK(s.variance == doctest::Approx(0.16222222222222222).epsilon(1e-12));
  const bool one_of_two = s.indices == Indices{0, 1, 4} || s.indices == Indices{0, 3, 4};
  CHECK(one_of_two);
}

TEST_CASE("binary rewards select a balanced half") {
  // 3 ones, 5 zeros, m = 4: two of each.
  const RewardVector r({1, 0, 0, 1, 0, 1, 0, 0});
  const auto s = max_variance_select(r, 4);
  int ones = 0;
  for (auto i : s.indices) ones += r[i] == 1.0;
  CHECK(ones == 2);
  CHECK(s.variance == doctest::Approx(0.25));

  // Only one 1: it must be included.
  const RewardVector lone({0, 0, 1, 0, 0, 0});
  const auto t = max_variance_select(lone, 4);
  CHECK(std::find(t.indices.begin(), t.indices.end(), 2) != t.indices.end());
  CHECK(t.variance == doctest::Approx(3.0 / 16.0));
}

TEST_CASE("max reward keeps the top m with index tie-break") {
  const RewardVector r({0.5, 1.0, 0.5, 0.2, 1.0});
  CHECK(max_reward_select(r, 2).indices == Indices{1, 4});
  CHECK(max_reward_select(r, 3).indices == Indices{0, 1, 4});
  CHECK(max_reward_select(r, 3).variance == doctest::Approx(subset_variance(r.values(), Indices{0, 1, 4})));
}

TEST_CASE("random selection is deterministic and uniform over subsets") {
  CHECK(random_select(10, 4, 7).indices == random_select(10, 4, 7).indices);
  const auto s = random_select(10, 4, 7);
  CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
  CHECK(std::adjacent_find(s.indices.begin(), s.indices.end()) == s.indices.end());
  CHECK(random_select(5, 5, 1).indices == Indices{0, 1, 2, 3, 4});

  std::map<Indices, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[random_select(4, 2, derive_seed(11, {std::uint64_t(i)})).indices]++;
  CHECK(counts.size() == 6);
  for (const auto& [subset, c] : counts) CHECK(std::abs(c / double(draws) - 1.0 / 6.0) <= 0.01);
}

TEST_CASE("down_sample dispatches by rule") {
  const RewardVector r({0.0, 0.2, 0.5, 0.9, 1.0});
  CHECK(down_sample({RuleKind::max_variance, {}}, r, 2).indices == Indices{0, 4});
  CHECK(down_sample({RuleKind::max_reward, {}}, r, 2).indices == Indices{3, 4});
  CHECK_THROWS_AS(down_sample({RuleKind::random, {}}, r, 2), std::invalid_argument);
  const auto s = down_sample({RuleKind::random, 3}, r, 3);
  CHECK(s.variance == doctest::Approx(subset_variance(r.values(), s.indices)));
  CHECK(rule_kind_from_string("max_reward") == RuleKind::max_reward);
  CHECK(to_string(RuleKind::random) == "random");
  CHECK_THROWS_AS(rule_kind_from_string("median"), std::invalid_argument);
}

TEST_CASE("fast selection matches the exhaustive oracle") {
  Engine rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + uniform_below(rng, 10);
    std::vector<double> v(n);
    const bool grid = trial % 2 == 0;
    for (double& x : v) x = grid ? 0.25 * double(uniform_below(rng, 13)) : uniform01(rng) * 3.0;
    const RewardVector r(v);
    for (std::size_t m = 1; m <= n; ++m) {
      const auto fast = max_variance_select(r, m);
      const auto slow = brute_force_select(r, m);
      CHECK(fast.variance == doctest::Approx(slow.variance).epsilon(1e-12).scale(1.0));
      CHECK(subset_variance(r.values(), fast.indices) == doctest::Approx(fast.variance).epsilon(1e-12).scale(1.0));
    }
  }
  CHECK_THROWS_AS(brute_force_select(RewardVector(std::vector<double>(21, 0.0)), 3), std::invalid_argument);
}

TEST_CASE("selection serializes with 0-based indices") {
  const auto j = to_json(max_variance_select(RewardVector({3.0, 1.0, 2.0}), 2));
  CHECK(j["indices"] == nlohmann::json::array({0, 1}));
  CHECK(j["m"] == 2);
  CHECK(j["variance"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("argsort on large inputs matches a reference stable sort") {
  Engine rng(404);
  auto reference = [](const std::vector<double>& v) {
    Indices order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    return order;
  };
  for (std::size_t n : {4095, 4096, 20000}) {
    std::vector<double> spread(n), grid(n), clustered(n);
    for (std::size_t i = 0; i < n; ++i) {
      spread[i] = -5.0 + 10.0 * uniform01(rng);
      grid[i] = 0.25 * double(uniform_below(rng, 13)) - 1.0;  // heavy ties, with -0.0 below
      clustered[i] = uniform01(rng) < 0.99 ? 1.0 + 1e-12 * uniform01(rng) : 1e9 * uniform01(rng);
    }
    grid[0] = -0.0;
    grid[1] = 0.0;
    for (const auto* v : {&spread, &grid, &clustered}) CHECK(stable_argsort(*v) == reference(*v));
  }
  const std::vector<double> constant(5000, 0.5);
  CHECK(stable_argsort(constant) == reference(constant));
}

TEST_CASE("large selections agree with a direct split search") {
  Engine rng(405);
  std::vector<double> v(10000);
  for (double& x : v) x = 0.25 * double(uniform_below(rng, 13));
  const RewardVector r(v);
  for (std::size_t m : {1, 2, 999, 2500, 9999, 10000}) {
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    double best = -1.0;
    for (std::size_t k = 0; k <= m; ++k) {
      Indices split(m);
      std::iota(split.begin(), split.begin() + static_cast<std::ptrdiff_t>(m - k), std::size_t{0});
      std::iota(split.begin() + static_cast<std::ptrdiff_t>(m - k), split.end(), v.size() - k);
      best = std::max(best, subset_variance(sorted, split));
    }
    const auto s = max_variance_select(r, m);
    CHECK(s.indices.size() == m);
    CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
    CHECK(s.variance == doctest::Approx(best).epsilon(1e-12).scale(1.0));
  }
}
