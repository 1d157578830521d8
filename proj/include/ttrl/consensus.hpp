#pragma once

// Majority-vote label estimation and binary rule-based rewards.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ttrl/answer_norm.hpp"
#include "ttrl/rng.hpp"

namespace ttrl {

/// One question's batch of sampled outputs. Output order is generation order
/// and decides ties.
struct Rollout {
  std::string question_id;
  std::vector<std::string> outputs;
  std::optional<CanonicalAnswer> ground_truth;
  double temperature = 0.0;  // metadata only
};

/// Per-output binary rewards, index-aligned with the outputs they score.
using RewardVector = std::vector<int>;

struct VoteCount {
  CanonicalAnswer answer;
  std::size_t count = 0;
  std::size_t first_index = 0;
};

struct ConsensusResult {
  std::optional<CanonicalAnswer> label;
  /// Distinct parseable answers in order of first occurrence.
  std::vector<VoteCount> counts;
  /// Canonical answer of every output, in output order.
  std::vector<CanonicalAnswer> answers;
  double majority_ratio = 0.0;
  bool tie = false;
  bool degenerate = true;

  std::size_t count_of(const CanonicalAnswer& answer) const {
    for (const auto& vc : counts) {
      if (answers_equal(vc.answer, answer)) return vc.count;
    }
    return 0;
  }

  std::size_t unparseable_count() const {
    std::size_t n = answers.size();
    for (const auto& vc : counts) n -= vc.count;
    return n;
  }
};

inline std::vector<CanonicalAnswer> extract_all(std::span<const std::string> outputs) {
  std::vector<CanonicalAnswer> answers;
  answers.reserve(outputs.size());
  for (const auto& output : outputs) answers.push_back(extract_answer(output));
  return answers;
}

/// Majority vote over already-canonicalized answers.
inline ConsensusResult estimate_label(std::vector<CanonicalAnswer> answers) {
  if (answers.empty()) throw std::invalid_argument("rollout has no outputs");
  ConsensusResult result;
  std::unordered_map<std::string, std::size_t> slot_of;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const auto& answer = answers[i];
    if (!answer.parseable()) continue;
    auto [it, inserted] = slot_of.try_emplace(answer.key(), result.counts.size());
    if (inserted) result.counts.push_back({answer, 0, i});
    ++result.counts[it->second].count;
  }
  result.answers = std::move(answers);
  if (result.counts.empty()) return result;

  // Strict comparison keeps the earliest first occurrence among equal counts.
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.counts.size(); ++i) {
    if (result.counts[i].count > result.counts[best].count) best = i;
  }
  const std::size_t top = result.counts[best].count;
  std::size_t at_top = 0;
  for (const auto& vc : result.counts) at_top += vc.count == top ? 1 : 0;

  result.label = result.counts[best].answer.with_span({});
  result.majority_ratio = static_cast<double>(top) / static_cast<double>(result.answers.size());
  result.tie = at_top > 1;
  result.degenerate = false;
  return result;
}

inline ConsensusResult estimate_label(const Rollout& rollout) {
  return estimate_label(extract_all(rollout.outputs));
}

/// rewards[i] = 1 iff answers[i] equals `label`; all zero without a label.
inline RewardVector rewards_against(std::span<const CanonicalAnswer> answers,
                                    const std::optional<CanonicalAnswer>& label) {
  RewardVector rewards(answers.size(), 0);
  if (!label) return rewards;
  for (std::size_t i = 0; i < answers.size(); ++i) rewards[i] = answers_equal(answers[i], *label) ? 1 : 0;
  return rewards;
}

struct VotedRewards {
  ConsensusResult consensus;
  RewardVector rewards;
};

inline VotedRewards majority_voting_rewards(const Rollout& rollout) {
  VotedRewards out{estimate_label(rollout), {}};
  out.rewards = rewards_against(out.consensus.answers, out.consensus.label);
  return out;
}

inline RewardVector ground_truth_rewards(const Rollout& rollout) {
  if (!rollout.ground_truth) throw std::invalid_argument("ground truth required");
  return rewards_against(extract_all(rollout.outputs), rollout.ground_truth);
}

struct SubsampledRewards {
  ConsensusResult consensus;  // over the full rollout
  Rollout sub_rollout;
  std::vector<std::size_t> selected_indices;  // ascending
  RewardVector rewards;                       // aligned with sub_rollout
};

/// Votes over every output, then rewards a uniform subset of n_train of them.
inline SubsampledRewards vote_then_sample(const Rollout& rollout, std::size_t n_train, std::uint64_t rng_seed) {
  const std::size_t n = rollout.outputs.size();
  if (n_train > n) throw std::invalid_argument("subsample larger than rollout");
  if (n_train == 0) throw std::invalid_argument("subsample must be non-empty");

  SubsampledRewards out;
  out.consensus = estimate_label(rollout);
  out.selected_indices = sample_indices(n, n_train, rng_seed);
  out.sub_rollout.question_id = rollout.question_id;
  out.sub_rollout.ground_truth = rollout.ground_truth;
  out.sub_rollout.temperature = rollout.temperature;
  out.sub_rollout.outputs.reserve(n_train);
  std::vector<CanonicalAnswer> sub_answers;
  sub_answers.reserve(n_train);
  for (std::size_t i : out.selected_indices) {
    out.sub_rollout.outputs.push_back(rollout.outputs[i]);
    sub_answers.push_back(out.consensus.answers[i]);
  }
  out.rewards = rewards_against(sub_answers, out.consensus.label);
  return out;
}

}  // namespace ttrl
