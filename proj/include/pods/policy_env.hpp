#pragma once

// Desk-scale verifiable-reward environment.
//
// A prompt asks for one content token t*. The policy emits a delimited
// response token by token; the ideal response is
//
//   THINK_OPEN content* THINK_CLOSE ANS_OPEN t* ANS_CLOSE EOS
//
// and a rule-based reward scores correctness, format and delimiter usage.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace pods {

struct Vocab {
  static constexpr int bos = 0;
  static constexpr int eos = 1;
  static constexpr int think_open = 2;
  static constexpr int think_close = 3;
  static constexpr int ans_open = 4;
  static constexpr int ans_close = 5;
  static constexpr int first_content = 6;

  int content_tokens = 8;

  int size() const noexcept { return first_content + content_tokens; }
  bool is_content(int token) const noexcept { return token >= first_content && token < size(); }
  int content(int i) const noexcept { return first_content + i; }
  std::string token_name(int token) const;
};

struct Prompt {
  int target = Vocab::first_content;  // token id of t*
};

/// Prompt-conditioned bigram policy. The next-token logits after `prev` for a
/// prompt with target t* are
///
///   transition[prev][.] + prompt_bias[t* - first_content][.]
///
/// Generation starts from prev = BOS.
class BigramPolicy {
 public:
  explicit BigramPolicy(Vocab vocab = {});

  const Vocab& vocab() const noexcept { return vocab_; }
  int vocab_size() const noexcept { return vocab_.size(); }

  /// All parameters: V*V transition logits, then A*V prompt biases.
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t transition_offset(int prev) const noexcept { return static_cast<std::size_t>(prev) * vocab_size(); }
  std::size_t bias_offset(int target) const noexcept {
    return static_cast<std::size_t>(vocab_size()) * vocab_size() +
           static_cast<std::size_t>(target - Vocab::first_content) * vocab_size();
  }

  double& transition(int prev, int next) noexcept { return params_[transition_offset(prev) + next]; }
  double& bias(int target, int next) noexcept { return params_[bias_offset(target) + next]; }

  void row_logits(const Prompt& prompt, int prev, std::span<double> out) const;
  /// Log-softmax of row_logits with max subtraction.
  void row_log_probs(const Prompt& prompt, int prev, std::span<double> out) const;

  nlohmann::json to_json() const;
  static BigramPolicy from_json(const nlohmann::json& j);

 private:
  Vocab vocab_;
  std::vector<double> params_;
};

struct Rollout {
  std::vector<int> tokens;
  std::vector<double> logprobs;  // under the generating policy
};

inline constexpr std::size_t default_max_tokens = 16;

/// Ancestral sampling until EOS or max_tokens; deterministic given seed.
Rollout sample_rollout(const BigramPolicy& policy, const Prompt& prompt, std::uint64_t seed,
                       std::size_t max_tokens = default_max_tokens);

/// Conditional log-probs of rollout tokens under `policy`; throws
/// std::invalid_argument on a token outside the vocabulary.
std::vector<double> logprob_sequence(const BigramPolicy& policy, std::span<const int> tokens, const Prompt& prompt);

struct RewardBreakdown {
  double correctness = 0.0;
  double format = 0.0;
  double tag_count = 0.0;
  double total() const noexcept { return correctness + format + tag_count; }
};

RewardBreakdown reward_breakdown(std::span<const int> tokens, const Prompt& prompt, const Vocab& vocab = {});
/// Sum of the three components, in [0, 3] on a 0.25 grid.
double reward(std::span<const int> tokens, const Prompt& prompt, const Vocab& vocab = {});

/// Argmax decoding, ties to the smallest token id.
Rollout greedy_decode(const BigramPolicy& policy, const Prompt& prompt, std::size_t max_tokens = default_max_tokens);

/// Fraction of prompts whose greedy answer token equals the target.
double evaluate(const BigramPolicy& policy, std::span<const Prompt> prompts,
                std::size_t max_tokens = default_max_tokens);

/// One prompt per content token.
std::vector<Prompt> all_prompts(const Vocab& vocab);

}  // namespace pods
