#pragma once

// Training-time and ground-truth metrics, plus pass@1 / avg@n / maj@n.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ttrl/answer_norm.hpp"
#include "ttrl/consensus.hpp"

namespace ttrl {

inline constexpr double kDistributionTolerance = 1e-9;

inline void check_distribution(std::span<const double> probabilities) {
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("invalid distribution");
    total += p;
  }
  if (probabilities.empty() || std::abs(total - 1.0) > kDistributionTolerance) {
    throw std::invalid_argument("invalid distribution");
  }
}

/// Shannon entropy in nats, with 0 ln 0 = 0.
inline double distribution_entropy(std::span<const double> probabilities) {
  check_distribution(probabilities);
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

/// A degenerate consensus never counts as accurate.
inline bool label_accuracy(const ConsensusResult& consensus, const CanonicalAnswer& truth) {
  return consensus.label && answers_equal(*consensus.label, truth);
}

inline double reward_accuracy(std::span<const int> estimated, std::span<const int> true_rewards) {
  if (estimated.size() != true_rewards.size()) {
    throw std::invalid_argument("reward vectors differ in length");
  }
  if (estimated.empty()) throw std::invalid_argument("reward vectors are empty");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < estimated.size(); ++i) agree += estimated[i] == true_rewards[i] ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(estimated.size());
}

inline double ground_truth_ratio(std::span<const CanonicalAnswer> answers, const CanonicalAnswer& truth) {
  if (answers.empty()) throw std::invalid_argument("rollout has no outputs");
  std::size_t hits = 0;
  for (const auto& a : answers) hits += answers_equal(a, truth) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(answers.size());
}

inline double ground_truth_ratio(const Rollout& rollout) {
  if (!rollout.ground_truth) throw std::invalid_argument("ground truth required");
  return ground_truth_ratio(extract_all(rollout.outputs), *rollout.ground_truth);
}

/// pass@1 = (1/k) sum of correctness indicators. Accepts any sized range of
/// values convertible to bool, std::vector<bool> included.
template <std::ranges::sized_range R>
double pass_at_1(const R& correct) {
  if (std::ranges::empty(correct)) throw std::invalid_argument("pass@1 needs at least one response");
  std::size_t hits = 0;
  for (const auto& c : correct) hits += static_cast<bool>(c) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(std::ranges::size(correct));
}

inline bool maj_at_n(const Rollout& rollout) {
  if (!rollout.ground_truth) throw std::invalid_argument("ground truth required");
  return label_accuracy(estimate_label(rollout), *rollout.ground_truth);
}

using AnswerDistribution = std::vector<std::pair<CanonicalAnswer, double>>;

inline double probability_of(const AnswerDistribution& dist, const CanonicalAnswer& answer) {
  double p = 0.0;
  for (const auto& [a, q] : dist) {
    if (answers_equal(a, answer)) p += q;
  }
  return p;
}

/// Expected per-sample agreement between rewards computed against
/// `estimated_label` and rewards computed against `truth` when answers are
/// drawn from `dist`. Samples equal to neither label are scored 0 by both.
inline double analytic_reward_accuracy(const AnswerDistribution& dist, const CanonicalAnswer& estimated_label,
                                       const CanonicalAnswer& truth) {
  std::vector<double> probs;
  probs.reserve(dist.size());
  for (const auto& entry : dist) probs.push_back(entry.second);
  check_distribution(probs);
  if (answers_equal(estimated_label, truth)) return 1.0;
  return 1.0 - probability_of(dist, estimated_label) - probability_of(dist, truth);
}

struct MetricRecord {
  std::int64_t step = 0;
  double entropy = 0.0;
  double majority_ratio = 0.0;
  double mean_reward = 0.0;
  std::optional<double> label_accuracy;
  std::optional<double> reward_accuracy;
  std::optional<double> ground_truth_ratio;
  std::optional<double> avg_at_n;
  std::optional<double> maj_at_n;
};

inline constexpr std::string_view kMetricCsvHeader =
    "step,entropy,majority_ratio,mean_reward,label_accuracy,reward_accuracy,ground_truth_ratio,avg_at_n,maj_at_n";

/// Shortest text that round-trips the double.
inline std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::string format_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

inline std::string to_csv_row(const MetricRecord& r) {
  std::string row = std::to_string(r.step);
  for (const std::string& field :
       {format_real(r.entropy), format_real(r.majority_ratio), format_real(r.mean_reward), format_real(r.label_accuracy),
        format_real(r.reward_accuracy), format_real(r.ground_truth_ratio), format_real(r.avg_at_n),
        format_real(r.maj_at_n)}) {
    row += ',';
    row += field;
  }
  return row;
}

inline void write_metrics_csv(std::ostream& out, std::span<const MetricRecord> records) {
  out << kMetricCsvHeader << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

/// Mean of a sample; zero for an empty one.
inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Per-question scores over one labeled rollout.
struct RolloutScores {
  ConsensusResult consensus;
  RewardVector estimated_rewards;
  RewardVector true_rewards;
  double avg_at_n = 0.0;  // pass@1 over the rollout
  bool maj_at_n = false;
  double reward_accuracy = 0.0;
  double ground_truth_ratio = 0.0;
};

inline RolloutScores score_labeled(std::vector<CanonicalAnswer> answers, const CanonicalAnswer& truth) {
  RolloutScores s;
  s.consensus = estimate_label(std::move(answers));
  const auto& all = s.consensus.answers;
  s.estimated_rewards = rewards_against(all, s.consensus.label);
  s.true_rewards = rewards_against(all, truth);
  s.avg_at_n = pass_at_1(s.true_rewards);
  s.maj_at_n = label_accuracy(s.consensus, truth);
  s.reward_accuracy = reward_accuracy(s.estimated_rewards, s.true_rewards);
  s.ground_truth_ratio = ground_truth_ratio(all, truth);
  return s;
}

/// Unweighted means over questions.
struct DatasetSummary {
  std::size_t questions = 0;
  double avg_at_n = 0.0;
  double maj_at_n = 0.0;
  double label_accuracy = 0.0;
  double reward_accuracy = 0.0;
  double ground_truth_ratio = 0.0;
  double majority_ratio = 0.0;
};

class DatasetAccumulator {
 public:
  void add(const RolloutScores& s) {
    ++n_;
    avg_ += s.avg_at_n;
    maj_ += s.maj_at_n ? 1.0 : 0.0;
    reward_acc_ += s.reward_accuracy;
    gt_ratio_ += s.ground_truth_ratio;
    majority_ += s.consensus.majority_ratio;
  }

  DatasetSummary summary() const {
    DatasetSummary out;
    out.questions = n_;
    if (n_ == 0) return out;
    const double n = static_cast<double>(n_);
    out.avg_at_n = avg_ / n;
    out.maj_at_n = maj_ / n;
    out.label_accuracy = out.maj_at_n;
    out.reward_accuracy = reward_acc_ / n;
    out.ground_truth_ratio = gt_ratio_ / n;
    out.majority_ratio = majority_ / n;
    return out;
  }

 private:
  std::size_t n_ = 0;
  double avg_ = 0.0;
  double maj_ = 0.0;
  double reward_acc_ = 0.0;
  double gt_ratio_ = 0.0;
  double majority_ = 0.0;
};

}  // namespace ttrl
