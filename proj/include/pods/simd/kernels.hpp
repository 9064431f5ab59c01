#pragma once

// Data-parallel inner loops shared by selection, objective and trainer.
//
// Every kernel has a scalar reference and optional AVX2 / NEON variants. The
// variants are selected once at runtime and must produce bitwise-identical
// results to the scalar reference:
//   - elementwise kernels use the same IEEE operation sequence (no FMA);
//   - reductions use a fixed 4-lane striped order: element i goes to lane
//     i % 4 for the first 4*floor(len/4) elements, the lanes combine as
//     (l0 + l1) + (l2 + l3), and the remaining tail is added sequentially.

#include <cstddef>
#include <span>
#include <string_view>

namespace pods::simd {

enum class Level { scalar, avx2, neon };

std::string_view to_string(Level level) noexcept;

struct AdamStep {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  /// out[k] = population variance of the split {first m-k} + {last k} of a
  /// sorted array, from its prefix sums; k = 0..m, out.size() == m + 1.
  void (*split_variances)(std::span<const double> prefix, std::span<const double> prefix_sq, std::size_t m,
                          std::span<double> out);
  /// Per-token clipped surrogate min(r*a, clip(r, 1-eps, 1+eps)*a) into terms;
  /// grad[t] = r*a*grad_scale where the unclipped branch is active, else 0.
  void (*clipped_surrogate)(std::span<const double> ratios, double advantage, double epsilon, double grad_scale,
                            std::span<double> terms, std::span<double> grad);
  double (*sum)(std::span<const double> x);
  double (*sum_squares)(std::span<const double> x);
  void (*scale)(std::span<double> x, double factor);
  /// y += alpha * x
  void (*axpy)(std::span<double> y, std::span<const double> x, double alpha);
  /// Ascent step: p += lr * (m1 / bc1) / (sqrt(m2 / bc2) + eps).
  void (*adam_ascent)(std::span<double> params, std::span<const double> grad, std::span<double> m1,
                      std::span<double> m2, const AdamStep& step);
};

const KernelTable& scalar_kernels() noexcept;
#if defined(PODS_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif
#if defined(PODS_HAVE_NEON)
const KernelTable& neon_kernels() noexcept;
#endif

/// Levels compiled in and supported by this CPU, scalar first.
std::span<const Level> available_levels() noexcept;

/// Best supported level, unless overridden by POD_SIMD=scalar|avx2|neon.
Level detected_level() noexcept;

const KernelTable& kernels_for(Level level);

/// The table currently in use (starts at detected_level()).
const KernelTable& active() noexcept;
Level active_level() noexcept;

/// Switches the active table; throws std::invalid_argument if unavailable.
void set_active_level(Level level);

}  // namespace pods::simd
