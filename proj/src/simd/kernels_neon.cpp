#include "pods/simd/kernels.hpp"

#include <arm_neon.h>

#include <cmath>

namespace pods::simd {
namespace {

// (a, b) -> (b, a)
inline float64x2_t swap(float64x2_t v) { return vextq_f64(v, v, 1); }

// a < b ? a : b, lane-wise; vminq_f64 orders signed zeros differently.
inline float64x2_t select_lt(float64x2_t a, float64x2_t b) { return vbslq_f64(vcltq_f64(a, b), a, b); }
inline float64x2_t select_gt(float64x2_t a, float64x2_t b) { return vbslq_f64(vcgtq_f64(a, b), a, b); }

void split_variances(std::span<const double> prefix, std::span<const double> prefix_sq, std::size_t m,
                     std::span<double> out) {
  const std::size_t n = prefix.size() - 1;
  const double total = prefix[n];
  const double total_sq = prefix_sq[n];
  const double count = static_cast<double>(m);
  const float64x2_t vtotal = vdupq_n_f64(total);
  const float64x2_t vtotal_sq = vdupq_n_f64(total_sq);
  const float64x2_t vcount = vdupq_n_f64(count);

  std::size_t k = 0;
  for (; k + 1 <= m; k += 2) {
    const float64x2_t head = swap(vld1q_f64(prefix.data() + (m - k - 1)));
    const float64x2_t tail = swap(vld1q_f64(prefix.data() + (n - k - 1)));
    const float64x2_t head_sq = swap(vld1q_f64(prefix_sq.data() + (m - k - 1)));
    const float64x2_t tail_sq = swap(vld1q_f64(prefix_sq.data() + (n - k - 1)));
    const float64x2_t s = vaddq_f64(head, vsubq_f64(vtotal, tail));
    const float64x2_t q = vaddq_f64(head_sq, vsubq_f64(vtotal_sq, tail_sq));
    const float64x2_t mean = vdivq_f64(s, vcount);
    vst1q_f64(out.data() + k, vsubq_f64(vdivq_f64(q, vcount), vmulq_f64(mean, mean)));
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
  const float64x2_t vlo = vdupq_n_f64(lo);
  const float64x2_t vhi = vdupq_n_f64(hi);
  const float64x2_t va = vdupq_n_f64(advantage);
  const float64x2_t vscale = vdupq_n_f64(grad_scale);
  const std::size_t len = ratios.size();
  std::size_t t = 0;
  for (; t + 2 <= len; t += 2) {
    const float64x2_t r = vld1q_f64(ratios.data() + t);
    const float64x2_t c = select_lt(select_gt(r, vlo), vhi);
    const float64x2_t unclipped = vmulq_f64(r, va);
    const float64x2_t clipped = vmulq_f64(c, va);
    vst1q_f64(terms.data() + t, select_lt(unclipped, clipped));
    const uint64x2_t active = vcleq_f64(unclipped, clipped);
    const float64x2_t g = vmulq_f64(unclipped, vscale);
    vst1q_f64(grad.data() + t, vreinterpretq_f64_u64(vandq_u64(active, vreinterpretq_u64_f64(g))));
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

// Two q-registers hold the four striped lanes (0,1) and (2,3).
double striped_sum(std::span<const double> x) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  const std::size_t body = x.size() & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    acc01 = vaddq_f64(acc01, vld1q_f64(x.data() + i));
    acc23 = vaddq_f64(acc23, vld1q_f64(x.data() + i + 2));
  }
  double s = (vgetq_lane_f64(acc01, 0) + vgetq_lane_f64(acc01, 1)) +
             (vgetq_lane_f64(acc23, 0) + vgetq_lane_f64(acc23, 1));
  for (std::size_t i = body; i < x.size(); ++i) s += x[i];
  return s;
}

double striped_sum_squares(std::span<const double> x) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  const std::size_t body = x.size() & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    const float64x2_t a = vld1q_f64(x.data() + i);
    const float64x2_t b = vld1q_f64(x.data() + i + 2);
    acc01 = vaddq_f64(acc01, vmulq_f64(a, a));
    acc23 = vaddq_f64(acc23, vmulq_f64(b, b));
  }
  double s = (vgetq_lane_f64(acc01, 0) + vgetq_lane_f64(acc01, 1)) +
             (vgetq_lane_f64(acc23, 0) + vgetq_lane_f64(acc23, 1));
  for (std::size_t i = body; i < x.size(); ++i) s += x[i] * x[i];
  return s;
}

void scale(std::span<double> x, double factor) {
  const float64x2_t f = vdupq_n_f64(factor);
  std::size_t i = 0;
  for (; i + 2 <= x.size(); i += 2) vst1q_f64(x.data() + i, vmulq_f64(vld1q_f64(x.data() + i), f));
  for (; i < x.size(); ++i) x[i] *= factor;
}

void axpy(std::span<double> y, std::span<const double> x, double alpha) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= y.size(); i += 2)
    vst1q_f64(y.data() + i, vaddq_f64(vld1q_f64(y.data() + i), vmulq_f64(a, vld1q_f64(x.data() + i))));
  for (; i < y.size(); ++i) y[i] += alpha * x[i];
}

void adam_ascent(std::span<double> params, std::span<const double> grad, std::span<double> m1, std::span<double> m2,
                 const AdamStep& step) {
  const double one_minus_b1 = 1.0 - step.beta1;
  const double one_minus_b2 = 1.0 - step.beta2;
  const float64x2_t b1 = vdupq_n_f64(step.beta1);
  const float64x2_t b2 = vdupq_n_f64(step.beta2);
  const float64x2_t c1 = vdupq_n_f64(one_minus_b1);
  const float64x2_t c2 = vdupq_n_f64(one_minus_b2);
  const float64x2_t bc1 = vdupq_n_f64(step.bias_correction1);
  const float64x2_t bc2 = vdupq_n_f64(step.bias_correction2);
  const float64x2_t lr = vdupq_n_f64(step.learning_rate);
  const float64x2_t eps = vdupq_n_f64(step.epsilon);
  const std::size_t len = params.size();
  std::size_t i = 0;
  for (; i + 2 <= len; i += 2) {
    const float64x2_t g = vld1q_f64(grad.data() + i);
    const float64x2_t mm = vaddq_f64(vmulq_f64(b1, vld1q_f64(m1.data() + i)), vmulq_f64(c1, g));
    const float64x2_t vv = vaddq_f64(vmulq_f64(b2, vld1q_f64(m2.data() + i)), vmulq_f64(c2, vmulq_f64(g, g)));
    vst1q_f64(m1.data() + i, mm);
    vst1q_f64(m2.data() + i, vv);
    const float64x2_t m_hat = vdivq_f64(mm, bc1);
    const float64x2_t v_hat = vdivq_f64(vv, bc2);
    const float64x2_t upd = vmulq_f64(lr, vdivq_f64(m_hat, vaddq_f64(vsqrtq_f64(v_hat), eps)));
    vst1q_f64(params.data() + i, vaddq_f64(vld1q_f64(params.data() + i), upd));
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

const KernelTable& neon_kernels() noexcept {
  static const KernelTable table{split_variances, clipped_surrogate, striped_sum, striped_sum_squares,
                                 scale,           axpy,              adam_ascent};
  return table;
}

}  // namespace pods::simd
