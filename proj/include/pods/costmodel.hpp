#pragma once

// Parametric wall-clock model of one training iteration: batched inference
// whose per-token cost falls with batch size until it saturates, and a
// policy update whose cost grows in steps once the update batch no longer
// fits in memory and must be accumulated.

#include <cstddef>
#include <optional>
#include <vector>

namespace pods {

struct CostModelParams {
  double t_tok_base = 1.0;         // seconds per token at batch 1
  double sat_batch = 512.0;        // batch size where per-token time bottoms out
  double floor_frac = 1.0 / 21.0;  // per-token time at saturation, relative to batch 1
  double t_update_step = 5.0;      // seconds per optimizer step at max_update_batch
  std::size_t max_update_batch = 32;
  double t_accum_overhead = 2.0;  // extra seconds per additional accumulation step

  void validate() const;
};

/// t_tok_base * batch^-alpha below sat_batch, t_tok_base * floor_frac at and
/// beyond it, with alpha = log(1 / floor_frac) / log(sat_batch).
double per_token_time(std::size_t batch, const CostModelParams& p);
double inference_time(std::size_t n_rollouts, double avg_tokens, const CostModelParams& p);
double update_time(std::size_t m, const CostModelParams& p);
double iteration_time(std::size_t n, std::size_t m, double avg_tokens, const CostModelParams& p);

struct CurvePoint {
  double sim_seconds = 0.0;
  double accuracy = 0.0;
  double mean_len = 0.0;
  double mean_reward = 0.0;
  std::size_t iter = 0;
};

using TrainingCurve = std::vector<CurvePoint>;

/// First simulated time at which the curve reaches `target` (step semantics).
std::optional<double> time_to_reach(const TrainingCurve& curve, double target);

double peak_accuracy(const TrainingCurve& curve);

/// Baseline time over candidate time to reach fraction * baseline peak.
/// nullopt when the candidate never reaches the target.
std::optional<double> speedup_ratio(const TrainingCurve& baseline, const TrainingCurve& candidate,
                                    double fraction = 0.99);

}  // namespace pods
