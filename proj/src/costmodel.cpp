#include "pods/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pods {

void CostModelParams::validate() const {
  if (!(t_tok_base > 0.0) || !(t_update_step > 0.0) || !(t_accum_overhead > 0.0))
    throw std::invalid_argument("cost model times must be positive");
  if (!(floor_frac > 0.0 && floor_frac <= 1.0)) throw std::invalid_argument("cost model floor_frac must be in (0, 1]");
  if (!(sat_batch >= 1.0)) throw std::invalid_argument("cost model sat_batch must be >= 1");
  if (max_update_batch == 0) throw std::invalid_argument("cost model max_update_batch must be positive");
}

double per_token_time(std::size_t batch, const CostModelParams& p) {
  if (batch == 0) throw std::invalid_argument("per_token_time: batch must be >= 1");
  const double b = static_cast<double>(batch);
  if (b >= p.sat_batch) return p.t_tok_base * p.floor_frac;
  // Power law through (1, 1) and (sat_batch, floor_frac); exponent 1 when
  // floor_frac == 1 / sat_batch.
  const double exponent = std::log(1.0 / p.floor_frac) / std::log(p.sat_batch);
  if (exponent == 1.0) return p.t_tok_base / b;
  return p.t_tok_base * std::pow(b, -exponent);
}

double inference_time(std::size_t n_rollouts, double avg_tokens, const CostModelParams& p) {
  if (n_rollouts == 0) throw std::invalid_argument("inference_time: need at least one rollout");
  if (!(avg_tokens > 0.0)) throw std::invalid_argument("inference_time: avg_tokens must be positive");
  return static_cast<double>(n_rollouts) * avg_tokens * per_token_time(n_rollouts, p);
}

double update_time(std::size_t m, const CostModelParams& p) {
  if (m == 0) throw std::invalid_argument("update_time: m must be >= 1");
  const std::size_t steps = (m + p.max_update_batch - 1) / p.max_update_batch;
  return static_cast<double>(steps) * p.t_update_step + static_cast<double>(steps - 1) * p.t_accum_overhead;
}

double iteration_time(std::size_t n, std::size_t m, double avg_tokens, const CostModelParams& p) {
  return inference_time(n, avg_tokens, p) + update_time(m, p);
}

std::optional<double> time_to_reach(const TrainingCurve& curve, double target) {
  for (const CurvePoint& pt : curve)
    if (pt.accuracy >= target) return pt.sim_seconds;
  return std::nullopt;
}

double peak_accuracy(const TrainingCurve& curve) {
  double best = 0.0;
  for (const CurvePoint& pt : curve) best = std::max(best, pt.accuracy);
  return best;
}

std::optional<double> speedup_ratio(const TrainingCurve& baseline, const TrainingCurve& candidate, double fraction) {
  if (baseline.empty() || candidate.empty()) throw std::invalid_argument("speedup_ratio: curves must be non-empty");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("speedup_ratio: fraction must be in (0, 1]");
  const double target = fraction * peak_accuracy(baseline);
  const auto t_base = time_to_reach(baseline, target);
  if (!t_base) throw std::invalid_argument("speedup_ratio: baseline never reaches its own target");
  const auto t_cand = time_to_reach(candidate, target);
  if (!t_cand) return std::nullopt;
  return *t_base / *t_cand;
}

}  // namespace pods
