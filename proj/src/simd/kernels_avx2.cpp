#include "pods/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace pods::simd {
namespace {

// Reverses the four lanes: (a, b, c, d) -> (d, c, b, a).
inline __m256d reverse(__m256d v) { return _mm256_permute4x64_pd(v, 0x1B); }

void split_variances(std::span<const double> prefix, std::span<const double> prefix_sq, std::size_t m,
                     std::span<double> out) {
  const std::size_t n = prefix.size() - 1;
  const double total = prefix[n];
  const double total_sq = prefix_sq[n];
  const double count = static_cast<double>(m);
  const __m256d vtotal = _mm256_set1_pd(total);
  const __m256d vtotal_sq = _mm256_set1_pd(total_sq);
  const __m256d vcount = _mm256_set1_pd(count);

  // Lanes k0..k0+3 read prefix[m-k] and prefix[n-k] backwards.
  std::size_t k = 0;
  for (; k + 3 <= m; k += 4) {
    const __m256d head = reverse(_mm256_loadu_pd(prefix.data() + (m - k - 3)));
    const __m256d tail = reverse(_mm256_loadu_pd(prefix.data() + (n - k - 3)));
    const __m256d head_sq = reverse(_mm256_loadu_pd(prefix_sq.data() + (m - k - 3)));
    const __m256d tail_sq = reverse(_mm256_loadu_pd(prefix_sq.data() + (n - k - 3)));
    const __m256d s = _mm256_add_pd(head, _mm256_sub_pd(vtotal, tail));
    const __m256d q = _mm256_add_pd(head_sq, _mm256_sub_pd(vtotal_sq, tail_sq));
    const __m256d mean = _mm256_div_pd(s, vcount);
    const __m256d var = _mm256_sub_pd(_mm256_div_pd(q, vcount), _mm256_mul_pd(mean, mean));
    _mm256_storeu_pd(out.data() + k, var);
  }
  for (; k <= m; ++k) {
    const double s = prefix[m - k] + (total - prefix[n - k]);
    const double q = prefix_sq[m - k] + (total_sq - prefix_sq[n - k]);
    const double mean = s / count;
    out[k] = q / count - mean * mean;
  }
}

void clipped_surrogate(std::span<const double> ratios, double advantage, double epsilon, double grad_scale,
                       std::span<double> terms, std::span<double> grad) {
  const double lo = 1.0 - epsilon;
  const double hi = 1.0 + epsilon;
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  const __m256d va = _mm256_set1_pd(advantage);
  const __m256d vscale = _mm256_set1_pd(grad_scale);
  const std::size_t len = ratios.size();
  std::size_t t = 0;
  for (; t + 4 <= len; t += 4) {
    const __m256d r = _mm256_loadu_pd(ratios.data() + t);
    // max_pd(a, b) = a > b ? a : b and min_pd(a, b) = a < b ? a : b, which
    // mirror the scalar ternaries exactly.
    const __m256d c = _mm256_min_pd(_mm256_max_pd(r, vlo), vhi);
    const __m256d unclipped = _mm256_mul_pd(r, va);
    const __m256d clipped = _mm256_mul_pd(c, va);
    _mm256_storeu_pd(terms.data() + t, _mm256_min_pd(unclipped, clipped));
    const __m256d active = _mm256_cmp_pd(unclipped, clipped, _CMP_LE_OQ);
    _mm256_storeu_pd(grad.data() + t, _mm256_and_pd(active, _mm256_mul_pd(unclipped, vscale)));
  }
  for (; t < len; ++t) {
    const double r = ratios[t];
    double c = r > lo ? r : lo;
    c = c < hi ? c : hi;
    const double unclipped = r * advantage;
    const double clipped = c * advantage;
    terms[t] = unclipped < clipped ? unclipped : clipped;
    grad[t] = unclipped <= clipped ? unclipped * grad_scale : 0.0;
  }
}

inline double combine_lanes(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double striped_sum(std::span<const double> x) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t body = x.size() & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
  double s = combine_lanes(acc);
  for (std::size_t i = body; i < x.size(); ++i) s += x[i];
  return s;
}

double striped_sum_squares(std::span<const double> x) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t body = x.size() & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d v = _mm256_loadu_pd(x.data() + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = combine_lanes(acc);
  for (std::size_t i = body; i < x.size(); ++i) s += x[i] * x[i];
  return s;
}

void scale(std::span<double> x, double factor) {
  const __m256d f = _mm256_set1_pd(factor);
  std::size_t i = 0;
  for (; i + 4 <= x.size(); i += 4) _mm256_storeu_pd(x.data() + i, _mm256_mul_pd(_mm256_loadu_pd(x.data() + i), f));
  for (; i < x.size(); ++i) x[i] *= factor;
}

void axpy(std::span<double> y, std::span<const double> x, double alpha) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= y.size(); i += 4) {
    const __m256d prod = _mm256_mul_pd(a, _mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(y.data() + i, _mm256_add_pd(_mm256_loadu_pd(y.data() + i), prod));
  }
  for (; i < y.size(); ++i) y[i] += alpha * x[i];
}

void adam_ascent(std::span<double> params, std::span<const double> grad, std::span<double> m1, std::span<double> m2,
                 const AdamStep& step) {
  const double one_minus_b1 = 1.0 - step.beta1;
  const double one_minus_b2 = 1.0 - step.beta2;
  const __m256d b1 = _mm256_set1_pd(step.beta1);
  const __m256d b2 = _mm256_set1_pd(step.beta2);
  const __m256d c1 = _mm256_set1_pd(one_minus_b1);
  const __m256d c2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bc1 = _mm256_set1_pd(step.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(step.bias_correction2);
  const __m256d lr = _mm256_set1_pd(step.learning_rate);
  const __m256d eps = _mm256_set1_pd(step.epsilon);
  const std::size_t len = params.size();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad.data() + i);
    const __m256d mm = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m1.data() + i)), _mm256_mul_pd(c1, g));
    const __m256d vv =
        _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(m2.data() + i)), _mm256_mul_pd(c2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m1.data() + i, mm);
    _mm256_storeu_pd(m2.data() + i, vv);
    const __m256d m_hat = _mm256_div_pd(mm, bc1);
    const __m256d v_hat = _mm256_div_pd(vv, bc2);
    const __m256d upd = _mm256_mul_pd(lr, _mm256_div_pd(m_hat, _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps)));
    _mm256_storeu_pd(params.data() + i, _mm256_add_pd(_mm256_loadu_pd(params.data() + i), upd));
  }
  for (; i < len; ++i) {
    const double g = grad[i];
    m1[i] = step.beta1 * m1[i] + one_minus_b1 * g;
    m2[i] = step.beta2 * m2[i] + one_minus_b2 * (g * g);
    const double m_hat = m1[i] / step.bias_correction1;
    const double v_hat = m2[i] / step.bias_correction2;
    params[i] += step.learning_rate * (m_hat / (std::sqrt(v_hat) + step.epsilon));
  }
}

}  // namespace

const KernelTable& avx2_kernels() noexcept {
  static const KernelTable table{split_variances, clipped_surrogate, striped_sum, striped_sum_squares,
                                 scale,           axpy,              adam_ascent};
  return table;
}

}  // namespace pods::simd
