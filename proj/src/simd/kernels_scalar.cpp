#include "pods/simd/kernels.hpp"

#include <cmath>

namespace pods::simd {
namespace {

void split_variances(std::span<const double> prefix, std::span<const double> prefix_sq, std::size_t m,
                     std::span<double> out) {
  const std::size_t n = prefix.size() - 1;
  const double total = prefix[n];
  const double total_sq = prefix_sq[n];
  const double count = static_cast<double>(m);
  for (std::size_t k = 0; k <= m; ++k) {
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
  for (std::size_t t = 0; t < ratios.size(); ++t) {
    const double r = ratios[t];
    double c = r > lo ? r : lo;
    c = c < hi ? c : hi;
    const double unclipped = r * advantage;
    const double clipped = c * advantage;
    terms[t] = unclipped < clipped ? unclipped : clipped;
    grad[t] = unclipped <= clipped ? unclipped * grad_scale : 0.0;
  }
}

double striped_sum(std::span<const double> x) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t body = x.size() & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    lane[0] += x[i];
    lane[1] += x[i + 1];
    lane[2] += x[i + 2];
    lane[3] += x[i + 3];
  }
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = body; i < x.size(); ++i) s += x[i];
  return s;
}

double striped_sum_squares(std::span<const double> x) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t body = x.size() & ~std::size_t{3};
  for (std::size_t i = 0; i < body; i += 4) {
    lane[0] += x[i] * x[i];
    lane[1] += x[i + 1] * x[i + 1];
    lane[2] += x[i + 2] * x[i + 2];
    lane[3] += x[i + 3] * x[i + 3];
  }
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = body; i < x.size(); ++i) s += x[i] * x[i];
  return s;
}

void scale(std::span<double> x, double factor) {
  for (double& v : x) v *= factor;
}

void axpy(std::span<double> y, std::span<const double> x, double alpha) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void adam_ascent(std::span<double> params, std::span<const double> grad, std::span<double> m1, std::span<double> m2,
                 const AdamStep& step) {
  const double one_minus_b1 = 1.0 - step.beta1;
  const double one_minus_b2 = 1.0 - step.beta2;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m1[i] = step.beta1 * m1[i] + one_minus_b1 * g;
    m2[i] = step.beta2 * m2[i] + one_minus_b2 * (g * g);
    const double m_hat = m1[i] / step.bias_correction1;
    const double v_hat = m2[i] / step.bias_correction2;
    params[i] += step.learning_rate * (m_hat / (std::sqrt(v_hat) + step.epsilon));
  }
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{split_variances, clipped_surrogate, striped_sum, striped_sum_squares,
                                 scale,           axpy,              adam_ascent};
  return table;
}

}  // namespace pods::simd
