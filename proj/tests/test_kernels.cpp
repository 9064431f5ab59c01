#include <stdexcept>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "pods/rng.hpp"
#include "pods/selection.hpp"
#include "pods/simd/kernels.hpp"

using namespace pods;
using simd::Level;

namespace {

std::vector<double> random_vector(Engine& rng, std::size_t len, double lo, double hi) {
  std::vector<double> v(len);
  for (double& x : v) x = lo + (hi - lo) * uniform01(rng);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

bool bitwise_equal(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

// Restores the dispatch level on scope exit.
struct LevelGuard {
  Level saved = simd::active_level();
  ~LevelGuard() { simd::set_active_level(saved); }
};

}  // namespace

TEST_CASE("scalar level is always available and listed first") {
  const auto levels = simd::available_levels();
  REQUIRE(!levels.empty());
  CHECK(levels.front() == Level::scalar);
  CHECK(&simd::kernels_for(Level::scalar) == &simd::scalar_kernels());
}

TEST_CASE("striped sum follows the documented lane order") {
  const std::vector<double> x = {1e16, 1.0, -1e16, 1.0, 3.0};
  // lanes: 1e16, 1, -1e16, 1 -> (1e16 + 1) + (-1e16 + 1) = 0 (1 is absorbed), then + 3
  CHECK(simd::scalar_kernels().sum(x) == 3.0);
  CHECK(simd::scalar_kernels().sum_squares(std::vector<double>{1.0, 2.0, 3.0}) == 14.0);
}

TEST_CASE("every SIMD level is bitwise identical to the scalar reference") {
  const auto& ref = simd::scalar_kernels();
  Engine rng(1234);
  for (Level level : simd::available_levels()) {
    if (level == Level::scalar) continue;
    CAPTURE(simd::to_string(level));
    const auto& k = simd::kernels_for(level);

    for (std::size_t len = 0; len < 41; ++len) {
      CAPTURE(len);
      const auto x = random_vector(rng, len, -3.0, 3.0);
      CHECK(bitwise_equal(ref.sum(x), k.sum(x)));
      CHECK(bitwise_equal(ref.sum_squares(x), k.sum_squares(x)));

      auto a = x, b = x;
      ref.scale(a, 0.37);
      k.scale(b, 0.37);
      CHECK(bitwise_equal(a, b));

      const auto y = random_vector(rng, len, -1.0, 1.0);
      a = y;
      b = y;
      ref.axpy(a, x, -1.7);
      k.axpy(b, x, -1.7);
      CHECK(bitwise_equal(a, b));

      // Ratios straddling both clip edges, both advantage signs.
      const auto ratios = random_vector(rng, len, 0.5, 1.5);
      for (double adv : {1.3, -0.8, 0.0}) {
        std::vector<double> t1(len), g1(len), t2(len), g2(len);
        ref.clipped_surrogate(ratios, adv, 0.2, 0.01, t1, g1);
        k.clipped_surrogate(ratios, adv, 0.2, 0.01, t2, g2);
        CHECK(bitwise_equal(t1, t2));
        CHECK(bitwise_equal(g1, g2));
      }

      auto p1 = random_vector(rng, len, -1.0, 1.0), p2 = p1;
      auto m1a = random_vector(rng, len, -0.1, 0.1), m1b = m1a;
      auto m2a = random_vector(rng, len, 0.0, 0.1), m2b = m2a;
      const simd::AdamStep step{0.05, 0.9, 0.999, 1e-8, 1.0 - 0.9 * 0.9 * 0.9, 1.0 - 0.999 * 0.999 * 0.999};
      ref.adam_ascent(p1, y, m1a, m2a, step);
      k.adam_ascent(p2, y, m1b, m2b, step);
      CHECK(bitwise_equal(p1, p2));
      CHECK(bitwise_equal(m1a, m1b));
      CHECK(bitwise_equal(m2a, m2b));
    }

    // Split sweep over many (n, m) shapes including m = n and tiny m.
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + uniform_below(rng, 60);
      const std::size_t m = 1 + uniform_below(rng, n);
      auto r = random_vector(rng, n, 0.0, 3.0);
      std::sort(r.begin(), r.end());
      const PrefixMoments p = prefix_moments(r);
      std::vector<double> o1(m + 1), o2(m + 1);
      ref.split_variances(p.sum, p.sum_sq, m, o1);
      k.split_variances(p.sum, p.sum_sq, m, o2);
      CHECK(bitwise_equal(o1, o2));
    }
  }
}

TEST_CASE("selection results do not depend on the dispatch level") {
  LevelGuard guard;
  Engine rng(99);
  std::vector<double> values(1000);
  for (double& v : values) v = std::floor(uniform01(rng) * 13.0) * 0.25;  // many ties
  const RewardVector rewards(values);
  simd::set_active_level(Level::scalar);
  const SelectionResult ref = max_variance_select(rewards, 257);
  for (Level level : simd::available_levels()) {
    simd::set_active_level(level);
    const SelectionResult got = max_variance_select(rewards, 257);
    CHECK(got.indices == ref.indices);
    CHECK(bitwise_equal(got.variance, ref.variance));
  }
}

TEST_CASE("unavailable levels are rejected") {
  for (Level level : {Level::avx2, Level::neon}) {
    bool listed = false;
    for (Level l : simd::available_levels()) listed |= (l == level);
    if (!listed) CHECK_THROWS_AS(simd::set_active_level(level), std::invalid_argument);
  }
}
