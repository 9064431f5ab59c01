#pragma once

// `pods` command-line entry point.
//
//   pods train         --config PATH [--out DIR] [--seed U64] [--set k=v]...
//   pods compare       --config BASE --config CAND... [--fraction F]
//   pods sweep         --config PATH --n-grid 16,32 --m-grid 16,8
//   pods bench-select  [--sizes 1000,10000,...] [--reps R]
//   pods simulate-cost [--config PATH] [--batches 1,2,4,...] [--avg-tokens T]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime invariant
// violation, 1 anything else (I/O).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace pods {

inline constexpr int exit_ok = 0;
inline constexpr int exit_other = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_invariant = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct BenchRow {
  std::size_t n = 0;
  double median_ns = 0.0;
};

/// Median wall time of max_variance_select on uniform random rewards with
/// m = n / 4, over `reps` repetitions per size; each call sees a fresh input.
std::vector<BenchRow> bench_select(std::span<const std::size_t> sizes, std::size_t reps, std::uint64_t seed);

/// Growth bound for the selection benchmark: the largest size may take at
/// most slack * (n_ratio * log(n_max) / log(n_min)) times the smallest.
struct ComplexityCheck {
  double time_ratio = 0.0;
  double bound = 0.0;
  bool pass = false;
};
ComplexityCheck check_nlogn(const std::vector<BenchRow>& rows, double slack = 1.25);

}  // namespace pods
