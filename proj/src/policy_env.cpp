#include "pods/policy_env.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "pods/rng.hpp"

namespace pods {
namespace {

constexpr std::array<int, 4> kDelimiters = {Vocab::think_open, Vocab::think_close, Vocab::ans_open, Vocab::ans_close};

constexpr int kSnapshotVersion = 1;

void check_prompt(const Vocab& vocab, const Prompt& prompt) {
  if (!vocab.is_content(prompt.target)) throw std::invalid_argument("prompt target is not a content token");
}

bool well_formatted(std::span<const int> tokens, const Vocab& vocab) {
  std::size_t i = 0;
  auto expect = [&](int tok) { return i < tokens.size() && tokens[i++] == tok; };
  if (!expect(Vocab::think_open)) return false;
  while (i < tokens.size() && vocab.is_content(tokens[i])) ++i;
  if (!expect(Vocab::think_close) || !expect(Vocab::ans_open)) return false;
  if (i >= tokens.size() || !vocab.is_content(tokens[i++])) return false;
  if (!expect(Vocab::ans_close) || !expect(Vocab::eos)) return false;
  return i == tokens.size();
}

}  // namespace

std::string Vocab::token_name(int token) const {
  switch (token) {
    case bos:
      return "<bos>";
    case eos:
      return "<eos>";
    case think_open:
      return "<think>";
    case think_close:
      return "</think>";
    case ans_open:
      return "<answer>";
    case ans_close:
      return "</answer>";
    default:
      break;
  }
  if (is_content(token)) return "c" + std::to_string(token - first_content);
  throw std::invalid_argument("token id out of range: " + std::to_string(token));
}

BigramPolicy::BigramPolicy(Vocab vocab) : vocab_(vocab) {
  if (vocab_.content_tokens < 1) throw std::invalid_argument("vocabulary needs at least one content token");
  const auto v = static_cast<std::size_t>(vocab_.size());
  params_.assign(v * v + static_cast<std::size_t>(vocab_.content_tokens) * v, 0.0);
}

void BigramPolicy::row_logits(const Prompt& prompt, int prev, std::span<double> out) const {
  const int v = vocab_size();
  const double* trans = params_.data() + transition_offset(prev);
  const double* bias = params_.data() + bias_offset(prompt.target);
  for (int w = 0; w < v; ++w) out[w] = trans[w] + bias[w];
}

void BigramPolicy::row_log_probs(const Prompt& prompt, int prev, std::span<double> out) const {
  row_logits(prompt, prev, out);
  const double mx = *std::max_element(out.begin(), out.end());
  double z = 0.0;
  for (double x : out) z += std::exp(x - mx);
  const double lse = mx + std::log(z);
  for (double& x : out) x -= lse;
}

nlohmann::json BigramPolicy::to_json() const {
  nlohmann::json names = nlohmann::json::array();
  for (int t = 0; t < vocab_size(); ++t) names.push_back(vocab_.token_name(t));
  const std::size_t split = static_cast<std::size_t>(vocab_size()) * vocab_size();
  return {
      {"format", "pods-bigram-policy"},
      {"version", kSnapshotVersion},
      {"content_tokens", vocab_.content_tokens},
      {"vocab_size", vocab_size()},
      {"tokens", names},
      {"transition", std::vector<double>(params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(split))},
      {"prompt_bias", std::vector<double>(params_.begin() + static_cast<std::ptrdiff_t>(split), params_.end())},
  };
}

BigramPolicy BigramPolicy::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "pods-bigram-policy" || j.value("version", 0) != kSnapshotVersion)
    throw std::invalid_argument("not a version-1 policy snapshot");
  BigramPolicy p(Vocab{j.at("content_tokens").get<int>()});
  const auto trans = j.at("transition").get<std::vector<double>>();
  const auto bias = j.at("prompt_bias").get<std::vector<double>>();
  if (trans.size() + bias.size() != p.params_.size() ||
      trans.size() != static_cast<std::size_t>(p.vocab_size()) * p.vocab_size())
    throw std::invalid_argument("policy snapshot has the wrong parameter count");
  std::copy(trans.begin(), trans.end(), p.params_.begin());
  std::copy(bias.begin(), bias.end(), p.params_.begin() + static_cast<std::ptrdiff_t>(trans.size()));
  for (double x : p.params_)
    if (!std::isfinite(x)) throw std::invalid_argument("policy snapshot contains a non-finite logit");
  return p;
}

Rollout sample_rollout(const BigramPolicy& policy, const Prompt& prompt, std::uint64_t seed, std::size_t max_tokens) {
  check_prompt(policy.vocab(), prompt);
  if (max_tokens == 0) throw std::invalid_argument("max_tokens must be at least 1");
  Engine rng(seed);
  std::vector<double> logp(static_cast<std::size_t>(policy.vocab_size()));
  Rollout out;
  int prev = Vocab::bos;
  while (out.tokens.size() < max_tokens) {
    policy.row_log_probs(prompt, prev, logp);
    const double u = uniform01(rng);
    double cumulative = 0.0;
    int next = policy.vocab_size() - 1;
    for (int w = 0; w < policy.vocab_size(); ++w) {
      cumulative += std::exp(logp[w]);
      if (u < cumulative) {
        next = w;
        break;
      }
    }
    // Rounding can leave u above the last cumulative value; fall back to the
    // last token that has non-negligible mass.
    if (cumulative <= u)
      while (next > 0 && std::exp(logp[next]) == 0.0) --next;
    out.tokens.push_back(next);
    out.logprobs.push_back(logp[next]);
    if (next == Vocab::eos) break;
    prev = next;
  }
  return out;
}

std::vector<double> logprob_sequence(const BigramPolicy& policy, std::span<const int> tokens, const Prompt& prompt) {
  check_prompt(policy.vocab(), prompt);
  std::vector<double> logp(static_cast<std::size_t>(policy.vocab_size()));
  std::vector<double> out;
  out.reserve(tokens.size());
  int prev = Vocab::bos;
  for (int tok : tokens) {
    if (tok < 0 || tok >= policy.vocab_size())
      throw std::invalid_argument("logprob_sequence: invalid token id " + std::to_string(tok));
    policy.row_log_probs(prompt, prev, logp);
    out.push_back(logp[tok]);
    prev = tok;
  }
  return out;
}

RewardBreakdown reward_breakdown(std::span<const int> tokens, const Prompt& prompt, const Vocab& vocab) {
  RewardBreakdown r;
  auto ans = std::find(tokens.begin(), tokens.end(), Vocab::ans_open);
  if (ans != tokens.end() && std::next(ans) != tokens.end() && *std::next(ans) == prompt.target) r.correctness = 1.0;
  if (well_formatted(tokens, vocab)) r.format = 1.0;
  // Greedy in-order matching of the four delimiters.
  auto from = tokens.begin();
  for (int d : kDelimiters) {
    auto hit = std::find(from, tokens.end(), d);
    if (hit != tokens.end()) {
      r.tag_count += 0.25;
      from = std::next(hit);
    }
  }
  return r;
}

double reward(std::span<const int> tokens, const Prompt& prompt, const Vocab& vocab) {
  return reward_breakdown(tokens, prompt, vocab).total();
}

Rollout greedy_decode(const BigramPolicy& policy, const Prompt& prompt, std::size_t max_tokens) {
  check_prompt(policy.vocab(), prompt);
  std::vector<double> logp(static_cast<std::size_t>(policy.vocab_size()));
  Rollout out;
  int prev = Vocab::bos;
  while (out.tokens.size() < max_tokens) {
    policy.row_log_probs(prompt, prev, logp);
    const int next = static_cast<int>(std::max_element(logp.begin(), logp.end()) - logp.begin());
    out.tokens.push_back(next);
    out.logprobs.push_back(logp[next]);
    if (next == Vocab::eos) break;
    prev = next;
  }
  return out;
}

double evaluate(const BigramPolicy& policy, std::span<const Prompt> prompts, std::size_t max_tokens) {
  if (prompts.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Prompt& p : prompts) {
    const Rollout r = greedy_decode(policy, p, max_tokens);
    if (reward_breakdown(r.tokens, p, policy.vocab()).correctness > 0.0) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(prompts.size());
}

std::vector<Prompt> all_prompts(const Vocab& vocab) {
  std::vector<Prompt> out;
  for (int i = 0; i < vocab.content_tokens; ++i) out.push_back(Prompt{vocab.content(i)});
  return out;
}

}  // namespace pods
