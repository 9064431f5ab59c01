#include "pods/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "pods/rng.hpp"
#include "pods/simd/kernels.hpp"

namespace pods {
namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kPromptStream = 2;
constexpr std::uint64_t kRolloutStream = 3;
constexpr std::uint64_t kSelectStream = 4;

double standard_normal(Engine& rng) {
  // Box-Muller on the portable uniform, so initial policies match across
  // standard libraries.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

struct Group {
  Prompt prompt;
  std::vector<Rollout> rollouts;
  std::vector<double> rewards;
};

void generate(const BigramPolicy& policy, const TrainConfig& cfg, std::size_t iter, std::vector<Group>& groups,
              std::size_t threads) {
  const std::size_t total = groups.size() * cfg.n;
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t p = k / cfg.n;
      const std::size_t i = k % cfg.n;
      Group& g = groups[p];
      g.rollouts[i] = sample_rollout(policy, g.prompt, derive_seed(cfg.seed, {kRolloutStream, iter, p, i}),
                                     cfg.max_tokens);
      g.rewards[i] = reward(g.rollouts[i].tokens, g.prompt, policy.vocab());
    }
  };
  threads = std::min(threads, total);
  if (threads <= 1) {
    work(0, total);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (total + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(total, begin + chunk);
    if (begin < end) pool.emplace_back(work, begin, end);
  }
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t size) : cfg_(cfg), m1_(size, 0.0), m2_(size, 0.0) {}

  void ascend(std::span<double> params, std::span<const double> grad) {
    const auto& k = simd::active();
    if (cfg_.optimizer == OptimizerKind::sgd) {
      k.axpy(params, grad, cfg_.learning_rate);
      return;
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const simd::AdamStep s{cfg_.learning_rate,
                           cfg_.adam.beta1,
                           cfg_.adam.beta2,
                           cfg_.adam.delta,
                           1.0 - std::pow(cfg_.adam.beta1, t),
                           1.0 - std::pow(cfg_.adam.beta2, t)};
    k.adam_ascent(params, grad, m1_, m2_, s);
  }

 private:
  const TrainConfig& cfg_;
  std::vector<double> m1_;
  std::vector<double> m2_;
  std::size_t step_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (n == 0) fail("n must be >= 1");
  if (m == 0 || m > n) fail("m must be in [1, n]");
  if (!rule && m != n) fail("training without a down-sampling rule requires m == n");
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must be in (0, 1)");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    fail("adam betas must be in [0, 1)");
  if (!(adam.delta > 0.0)) fail("adam delta must be positive");
  if (prompts_per_iter == 0) fail("prompts_per_iter must be >= 1");
  if (iterations == 0) fail("iterations must be >= 1");
  if (eval_every == 0) fail("eval_every must be >= 1");
  if (content_tokens < 1) fail("content_tokens must be >= 1");
  if (max_tokens == 0) fail("max_tokens must be >= 1");
  if (!(init_scale >= 0.0)) fail("init_scale must be >= 0");
  cost.validate();
}

std::size_t generation_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("POD_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

BigramPolicy initial_policy(const TrainConfig& config) {
  BigramPolicy policy(Vocab{config.content_tokens});
  if (config.init_scale > 0.0) {
    Engine rng(derive_seed(config.seed, {kInitStream}));
    for (double& x : policy.params()) x = config.init_scale * standard_normal(rng);
  }
  return policy;
}

void accumulate_policy_gradient(const BigramPolicy& policy, const Prompt& prompt, std::span<const int> tokens,
                                std::span<const double> dlogp, std::span<double> grad) {
  const int v = policy.vocab_size();
  std::vector<double> logp(static_cast<std::size_t>(v));
  const std::size_t bias = policy.bias_offset(prompt.target);
  int prev = Vocab::bos;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const double g = dlogp[t];
    if (g != 0.0) {
      // d log softmax(z)_tok / d z_w = [w == tok] - p_w
      policy.row_log_probs(prompt, prev, logp);
      const std::size_t trans = policy.transition_offset(prev);
      for (int w = 0; w < v; ++w) {
        const double d = g * ((w == tokens[t] ? 1.0 : 0.0) - std::exp(logp[w]));
        grad[trans + w] += d;
        grad[bias + w] += d;
      }
    }
    prev = tokens[t];
  }
}

TrainResult train_with_policy(const TrainConfig& cfg, const IterationObserver& observer) {
  cfg.validate();
  TrainResult result{{}, initial_policy(cfg)};
  BigramPolicy& policy = result.policy;
  const Vocab vocab = policy.vocab();
  const std::vector<Prompt> eval_prompts = all_prompts(vocab);
  const std::size_t threads = generation_threads(cfg.threads);
  const ClipConfig clip{cfg.epsilon};
  const auto& kernels = simd::active();

  Optimizer optimizer(cfg, policy.params().size());
  std::vector<double> grad(policy.params().size());
  std::vector<Group> groups(cfg.prompts_per_iter);
  double sim_seconds = 0.0;

  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    Engine prompt_rng(derive_seed(cfg.seed, {kPromptStream, iter}));
    for (Group& g : groups) {
      g.prompt = Prompt{vocab.content(static_cast<int>(uniform_below(prompt_rng, vocab.content_tokens)))};
      g.rollouts.assign(cfg.n, {});
      g.rewards.assign(cfg.n, 0.0);
    }

    // Generation: `policy` is the frozen snapshot until the update below.
    generate(policy, cfg, iter, groups, threads);

    std::fill(grad.begin(), grad.end(), 0.0);
    double token_count = 0.0;
    double reward_sum = 0.0;
    for (std::size_t p = 0; p < groups.size(); ++p) {
      const Group& g = groups[p];
      for (std::size_t i = 0; i < cfg.n; ++i) {
        token_count += static_cast<double>(g.rollouts[i].tokens.size());
        reward_sum += g.rewards[i];
      }

      std::vector<std::size_t> subset;
      if (cfg.rule) {
        DownSampleRule rule = *cfg.rule;
        rule.seed = derive_seed(rule.seed.value_or(cfg.seed), {kSelectStream, iter, p});
        subset = down_sample(rule, RewardVector(g.rewards), cfg.m).indices;
      } else {
        subset.resize(cfg.n);
        std::iota(subset.begin(), subset.end(), std::size_t{0});
      }
      const std::vector<double> advantages = normalize_advantages(g.rewards, subset);

      RolloutBatch batch;
      batch.rewards = g.rewards;
      batch.rollouts.resize(cfg.n);
      for (std::size_t i : subset) {
        auto& r = batch.rollouts[i];
        r.tokens = g.rollouts[i].tokens;
        r.frozen = g.rollouts[i].logprobs;
        r.current = logprob_sequence(policy, r.tokens, g.prompt);
      }
      const ObjectiveWithGradient og = pods_objective_and_gradient(batch, subset, advantages, clip);
      for (std::size_t i : subset)
        accumulate_policy_gradient(policy, g.prompt, batch.rollouts[i].tokens, og.gradient[i], grad);
    }

    // Prompts contribute equally to the iteration objective.
    kernels.scale(grad, 1.0 / static_cast<double>(groups.size()));
    if (cfg.grad_clip > 0.0) {
      const double norm = std::sqrt(kernels.sum_squares(grad));
      if (norm > cfg.grad_clip) kernels.scale(grad, cfg.grad_clip / norm);
    }
    optimizer.ascend(policy.params(), grad);

    const double generated = static_cast<double>(cfg.n * groups.size());
    const double mean_len = token_count / generated;
    sim_seconds += iteration_time(cfg.n * groups.size(), cfg.m * groups.size(), mean_len, cfg.cost);

    if (observer) observer(iter, policy);
    if ((iter + 1) % cfg.eval_every == 0 || iter + 1 == cfg.iterations) {
      result.curve.push_back(CurvePoint{sim_seconds, evaluate(policy, eval_prompts, cfg.max_tokens), mean_len,
                                        reward_sum / generated, iter + 1});
    }
  }
  return result;
}

TrainingCurve train(const TrainConfig& config) { return train_with_policy(config).curve; }

std::vector<TrainingCurve> run_comparison(std::span<const TrainConfig> configs) {
  if (configs.size() < 2) throw std::invalid_argument("run_comparison needs at least two configs");
  std::vector<TrainingCurve> curves;
  curves.reserve(configs.size());
  for (const TrainConfig& c : configs) {
    TrainConfig shared = c;
    shared.seed = configs.front().seed;
    curves.push_back(train(shared));
  }
  return curves;
}

std::vector<SweepCell> sweep(const TrainConfig& base, std::span<const std::size_t> n_values,
                             std::span<const std::size_t> m_values) {
  if (n_values.empty() || m_values.empty()) throw std::invalid_argument("sweep grids must be non-empty");
  std::vector<SweepCell> cells;
  for (std::size_t n : n_values) {
    for (std::size_t m : m_values) {
      TrainConfig cfg = base;
      cfg.n = n;
      cfg.m = m;
      cfg.name = base.name + "_n" + std::to_string(n) + "_m" + std::to_string(m);
      cells.push_back(SweepCell{n, m, train(cfg)});
    }
  }
  return cells;
}

}  // namespace pods
