#pragma once

// Desk-scale replay of the label-free RL loop: sample a rollout from a
// categorical policy, vote, reward, and take one group-normalized policy
// gradient step. Answers are rendered as text and go back through
// extract_answer, so the reward path is the same one external callers use.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttrl/answer_norm.hpp"
#include "ttrl/consensus.hpp"
#include "ttrl/metrics.hpp"
#include "ttrl/rng.hpp"

namespace ttrl::sim {

/// Logit bonus given to the true slot of every generated question.
inline constexpr double kDefaultTruthMargin = 1.0;
/// Below this temperature sampling is greedy.
inline constexpr double kGreedyTemperature = 1e-6;

struct Question {
  std::string id;
  std::size_t index = 0;
  std::size_t skill = 0;
  /// slot -> rendered answer identity; a permutation of [0, V).
  std::vector<std::size_t> slot_permutation;
  std::size_t true_slot = 0;
  /// Fixed per-question logit perturbation, never trained.
  std::vector<double> bias;

  std::size_t vocab_size() const noexcept { return bias.size(); }

  /// Raw model-style output for an answer slot.
  std::string render(std::size_t slot) const {
    return "The answer is \\boxed{" + std::to_string(slot_permutation.at(slot)) + "}";
  }

  CanonicalAnswer truth() const {
    return CanonicalAnswer::rational(static_cast<std::int64_t>(slot_permutation.at(true_slot)), 1);
  }
};

struct SyntheticTask {
  std::vector<Question> questions;
  std::size_t vocab_size = 0;
  std::size_t skills = 0;
};

/// Biases are bias_scale * N(0, 1) per slot, plus truth_margin on the true
/// slot (slot 0). Question i belongs to skill i mod K.
inline SyntheticTask generate_task(std::size_t vocab_size, std::size_t skills, std::size_t n_questions,
                                   double bias_scale, std::uint64_t seed,
                                   double truth_margin = kDefaultTruthMargin) {
  if (vocab_size < 2) throw std::invalid_argument("vocab_size must be at least 2");
  if (skills < 1) throw std::invalid_argument("skills must be at least 1");
  if (n_questions < 1) throw std::invalid_argument("n_questions must be at least 1");
  if (!std::isfinite(bias_scale) || bias_scale < 0.0) throw std::invalid_argument("bias_scale must be finite and >= 0");
  if (!std::isfinite(truth_margin)) throw std::invalid_argument("truth_margin must be finite");

  SyntheticTask task;
  task.vocab_size = vocab_size;
  task.skills = skills;
  task.questions.reserve(n_questions);
  Rng rng(seed);
  for (std::size_t i = 0; i < n_questions; ++i) {
    Question q;
    q.id = "q" + std::to_string(i);
    q.index = i;
    q.skill = i % skills;
    q.slot_permutation.resize(vocab_size);
    for (std::size_t s = 0; s < vocab_size; ++s) q.slot_permutation[s] = s;
    rng.shuffle(q.slot_permutation);
    q.true_slot = 0;
    q.bias.resize(vocab_size);
    for (std::size_t s = 0; s < vocab_size; ++s) q.bias[s] = bias_scale * rng.normal();
    q.bias[q.true_slot] += truth_margin;
    task.questions.push_back(std::move(q));
  }
  return task;
}

enum class PolicyMode { tabular, shared };

inline std::string_view to_string(PolicyMode mode) { return mode == PolicyMode::tabular ? "tabular" : "shared"; }

/// softmax(logits / temperature); one-hot on the first maximum when greedy.
inline std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> p(logits.size(), 0.0);
  if (logits.empty()) return p;
  const auto top = std::max_element(logits.begin(), logits.end());
  if (temperature < kGreedyTemperature) {
    p[static_cast<std::size_t>(top - logits.begin())] = 1.0;
    return p;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - *top) / temperature);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

struct PolicyState {
  PolicyMode mode = PolicyMode::shared;
  double temperature = 1.0;
  /// One row per question (tabular) or per skill (shared).
  std::vector<std::vector<double>> logits;

  static PolicyState uniform(const SyntheticTask& task, PolicyMode mode, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw std::invalid_argument("temperature must be positive");
    PolicyState p;
    p.mode = mode;
    p.temperature = temperature;
    const std::size_t rows = mode == PolicyMode::tabular ? task.questions.size() : task.skills;
    p.logits.assign(rows, std::vector<double>(task.vocab_size, 0.0));
    return p;
  }

  std::size_t row_of(const Question& q) const { return mode == PolicyMode::tabular ? q.index : q.skill; }

  /// Effective logits of a question: trainable row plus its fixed bias.
  std::vector<double> question_logits(const Question& q) const {
    const auto& row = logits.at(row_of(q));
    std::vector<double> out(row.size());
    for (std::size_t s = 0; s < row.size(); ++s) out[s] = row[s] + q.bias.at(s);
    return out;
  }

  std::vector<double> probabilities(const Question& q) const { return softmax(question_logits(q), temperature); }

  friend bool operator==(const PolicyState&, const PolicyState&) = default;
};

inline std::vector<std::size_t> sample_slots(std::span<const double> probabilities, std::size_t n, std::uint64_t rng_seed) {
  std::vector<double> cumulative(probabilities.size());
  std::partial_sum(probabilities.begin(), probabilities.end(), cumulative.begin());
  Rng rng(rng_seed);
  std::vector<std::size_t> slots(n);
  for (auto& s : slots) s = rng.categorical(cumulative);
  return slots;
}

inline Rollout render_rollout(const Question& q, std::span<const std::size_t> slots, double temperature) {
  Rollout r;
  r.question_id = q.id;
  r.ground_truth = q.truth();
  r.temperature = temperature;
  r.outputs.reserve(slots.size());
  for (std::size_t s : slots) r.outputs.push_back(q.render(s));
  return r;
}

inline Rollout sample_answers(const PolicyState& policy, const Question& question, std::size_t n, std::uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("n must be at least 1");
  const auto slots = sample_slots(policy.probabilities(question), n, rng_seed);
  return render_rollout(question, slots, policy.temperature);
}

/// Group-normalized advantages (r - mean) / (population std + epsilon);
/// exactly zero when every reward is equal.
inline std::vector<double> grpo_advantages(std::span<const int> rewards, double epsilon) {
  if (rewards.empty()) throw std::invalid_argument("rewards must be non-empty");
  std::vector<double> adv(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(), [&](int r) { return r == rewards.front(); })) return adv;
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (int r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (int r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / n);
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / (std_dev + epsilon);
  return adv;
}

/// Gradient ascent on sum_i A_i log pi(s_i): each sample adds
/// lr * A * (e_s - p) / temperature, with p the pre-update probabilities.
inline void reinforce_update(std::vector<double>& logits, std::span<const double> probabilities,
                             std::span<const std::size_t> slots, std::span<const double> advantages, double lr,
                             double temperature) {
  if (slots.size() != advantages.size()) throw std::invalid_argument("slots and advantages differ in length");
  std::vector<double> grad(logits.size(), 0.0);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double a = advantages[i];
    if (a == 0.0) continue;
    for (std::size_t v = 0; v < logits.size(); ++v) {
      const double indicator = v == slots[i] ? 1.0 : 0.0;
      grad[v] += a * (indicator - probabilities[v]) / temperature;
    }
  }
  for (std::size_t v = 0; v < logits.size(); ++v) logits[v] += lr * grad[v];
}

/// Cosine decay from peak to floor across [0, total_steps), no warmup.
inline double lr_schedule(std::int64_t step, std::int64_t total_steps, double peak, double floor) {
  if (total_steps < 1 || step < 0 || step >= total_steps) throw std::out_of_range("step outside schedule");
  if (total_steps == 1) return peak;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  return floor + 0.5 * (peak - floor) * (1.0 + std::cos(std::numbers::pi * t));
}

struct TrainConfig {
  std::size_t n_vote = 64;
  std::size_t n_train = 32;
  std::size_t episodes = 1;
  double peak_lr = 0.05;
  double lr_floor = 0.0;
  std::uint64_t seed = 0;
  double advantage_epsilon = 1e-6;

  void validate() const {
    if (n_vote < 1) throw std::invalid_argument("n_vote must be at least 1");
    if (n_train < 1 || n_train > n_vote) throw std::invalid_argument("n_train must be in [1, n_vote]");
    if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
    if (!(peak_lr >= 0.0) || !std::isfinite(peak_lr)) throw std::invalid_argument("peak_lr must be finite and >= 0");
    if (!(lr_floor >= 0.0) || lr_floor > peak_lr) throw std::invalid_argument("lr_floor must be in [0, peak_lr]");
    if (!(advantage_epsilon >= 0.0)) throw std::invalid_argument("advantage_epsilon must be >= 0");
  }
};

struct StepResult {
  PolicyState policy;
  MetricRecord record;
  ConsensusResult consensus;  // over all n_vote samples
  std::vector<std::size_t> slots;
  std::vector<std::size_t> train_indices;
  RewardVector rewards;  // on the training subset
  std::vector<double> advantages;
};

/// One vote -> reward -> update cycle on a single question.
inline StepResult train_step(const PolicyState& policy, const Question& question, const TrainConfig& config,
                             std::int64_t step, std::int64_t total_steps, std::uint64_t rng_seed) {
  config.validate();
  StepResult out{policy, {}, {}, {}, {}, {}, {}};
  const auto logits = policy.question_logits(question);
  const auto probs = softmax(logits, policy.temperature);
  out.slots = sample_slots(probs, config.n_vote, derive_seed(rng_seed, 0));
  const Rollout rollout = render_rollout(question, out.slots, policy.temperature);

  auto voted = vote_then_sample(rollout, config.n_train, derive_seed(rng_seed, 1));
  out.train_indices = std::move(voted.selected_indices);
  out.rewards = std::move(voted.rewards);
  out.consensus = std::move(voted.consensus);
  out.advantages = grpo_advantages(out.rewards, config.advantage_epsilon);

  std::vector<std::size_t> train_slots;
  train_slots.reserve(out.train_indices.size());
  for (std::size_t i : out.train_indices) train_slots.push_back(out.slots[i]);
  const double lr = lr_schedule(step, total_steps, config.peak_lr, config.lr_floor);
  auto& row = out.policy.logits.at(policy.row_of(question));
  reinforce_update(row, probs, train_slots, out.advantages, lr, policy.temperature);

  const CanonicalAnswer truth = question.truth();
  const auto& answers = out.consensus.answers;
  std::vector<CanonicalAnswer> train_answers;
  train_answers.reserve(out.train_indices.size());
  for (std::size_t i : out.train_indices) train_answers.push_back(answers[i]);
  const auto true_train_rewards = rewards_against(train_answers, truth);
  const auto true_all_rewards = rewards_against(answers, truth);

  MetricRecord& rec = out.record;
  rec.step = step;
  rec.entropy = distribution_entropy(probs);
  rec.majority_ratio = out.consensus.majority_ratio;
  rec.mean_reward = pass_at_1(out.rewards);
  rec.label_accuracy = label_accuracy(out.consensus, truth) ? 1.0 : 0.0;
  rec.reward_accuracy = reward_accuracy(out.rewards, true_train_rewards);
  rec.ground_truth_ratio = ground_truth_ratio(answers, truth);
  rec.avg_at_n = pass_at_1(true_all_rewards);
  rec.maj_at_n = rec.label_accuracy;
  return out;
}

/// Dataset-level scores of a policy on fresh draws.
struct EvalSnapshot {
  std::size_t episode = 0;
  std::int64_t step = 0;  // training steps completed
  double entropy = 0.0;   // mean over questions
  double avg_at_n = 0.0;
  double maj_at_n = 0.0;
};

inline constexpr std::string_view kEvalCsvHeader = "episode,step,entropy,avg_at_n,maj_at_n";

inline void write_eval_csv(std::ostream& out, std::span<const EvalSnapshot> evals) {
  out << kEvalCsvHeader << '\n';
  for (const auto& e : evals) {
    out << e.episode << ',' << e.step << ',' << format_real(e.entropy) << ',' << format_real(e.avg_at_n) << ','
        << format_real(e.maj_at_n) << '\n';
  }
}

inline EvalSnapshot evaluate(const PolicyState& policy, const SyntheticTask& task, std::size_t n_samples,
                             std::uint64_t eval_seed) {
  EvalSnapshot snap;
  std::vector<double> entropy, avg, maj;
  for (const auto& q : task.questions) {
    const auto probs = policy.probabilities(q);
    const auto slots = sample_slots(probs, n_samples, derive_seed(eval_seed, q.index));
    const Rollout rollout = render_rollout(q, slots, policy.temperature);
    const auto scores = score_labeled(extract_all(rollout.outputs), q.truth());
    entropy.push_back(distribution_entropy(probs));
    avg.push_back(scores.avg_at_n);
    maj.push_back(scores.maj_at_n ? 1.0 : 0.0);
  }
  snap.entropy = mean_of(entropy);
  snap.avg_at_n = mean_of(avg);
  snap.maj_at_n = mean_of(maj);
  return snap;
}

struct TrainingRun {
  std::vector<MetricRecord> steps;
  /// evals[0] is the initial policy; evals[e] follows episode e.
  std::vector<EvalSnapshot> evals;
  PolicyState final_policy;
};

/// `episodes` passes over the task, each in a seed-determined order, with an
/// eval snapshot before training and after every episode. Eval draws use a
/// seed stream disjoint from training.
inline TrainingRun run_training(const SyntheticTask& task, const PolicyState& policy, const TrainConfig& config) {
  config.validate();
  const std::size_t expected_rows = policy.mode == PolicyMode::tabular ? task.questions.size() : task.skills;
  if (policy.logits.size() != expected_rows) throw std::invalid_argument("policy does not match task");

  TrainingRun run;
  run.final_policy = policy;
  const auto total_steps = static_cast<std::int64_t>(config.episodes * task.questions.size());
  run.steps.reserve(static_cast<std::size_t>(total_steps));
  const std::uint64_t eval_seed = derive_seed(config.seed, 3);

  auto snapshot = [&](std::size_t episode, std::int64_t step) {
    auto snap = evaluate(run.final_policy, task, config.n_vote, derive_seed(eval_seed, episode));
    snap.episode = episode;
    snap.step = step;
    run.evals.push_back(snap);
  };
  snapshot(0, 0);

  std::int64_t step = 0;
  std::vector<std::size_t> order(task.questions.size());
  for (std::size_t episode = 1; episode <= config.episodes; ++episode) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffler(derive_seed(config.seed, 1, episode));
    shuffler.shuffle(order);
    for (std::size_t qi : order) {
      auto result = train_step(run.final_policy, task.questions[qi], config, step, total_steps,
                               derive_seed(config.seed, 2, static_cast<std::uint64_t>(step)));
      run.final_policy = std::move(result.policy);
      run.steps.push_back(result.record);
      ++step;
    }
    snapshot(episode, step);
  }
  return run;
}

/// Plain-text policy table: header lines, then one row per owner.
inline void write_policy(std::ostream& out, const PolicyState& policy) {
  out << "# ttrl policy\n";
  out << "mode " << to_string(policy.mode) << '\n';
  out << "temperature " << format_real(policy.temperature) << '\n';
  out << "rows " << policy.logits.size() << '\n';
  const char* owner = policy.mode == PolicyMode::tabular ? "question" : "skill";
  for (std::size_t i = 0; i < policy.logits.size(); ++i) {
    out << owner << ' ' << i;
    for (double v : policy.logits[i]) out << ' ' << format_real(v);
    out << '\n';
  }
}

struct ScatterReport {
  std::size_t trials = 0;
  std::size_t samples = 0;
  double label_accuracy = 0.0;
  double reward_accuracy = 0.0;  // per sample
  double analytic_reward_accuracy = 0.0;
  double mean_majority_ratio = 0.0;
};

/// Fixed answer distribution: answer 0 carries modal_prob, answer 1 carries
/// truth_prob (unless the modal answer is the truth), the rest is spread
/// evenly over the remaining answers.
inline AnswerDistribution scattered_distribution(double modal_prob, double truth_prob, std::size_t vocab_size,
                                                 bool modal_is_truth = false) {
  auto bad = [](const char* what) { throw std::invalid_argument(what); };
  if (vocab_size < 2) bad("vocab_size must be at least 2");
  if (!(modal_prob >= 0.0 && modal_prob <= 1.0)) bad("modal_prob must be in [0, 1]");
  if (modal_is_truth) truth_prob = 0.0;
  if (!(truth_prob >= 0.0 && truth_prob <= 1.0)) bad("truth_prob must be in [0, 1]");
  if (modal_prob + truth_prob > 1.0 + kDistributionTolerance) bad("modal_prob + truth_prob exceeds 1");
  const std::size_t fixed = modal_is_truth ? 1 : 2;
  const double rest = std::max(0.0, 1.0 - modal_prob - truth_prob);
  if (vocab_size == fixed && rest > kDistributionTolerance) bad("no answers left for the remaining mass");

  AnswerDistribution dist;
  dist.emplace_back(CanonicalAnswer::rational(0, 1), modal_prob);
  if (!modal_is_truth) dist.emplace_back(CanonicalAnswer::rational(1, 1), truth_prob);
  for (std::size_t a = fixed; a < vocab_size; ++a) {
    dist.emplace_back(CanonicalAnswer::rational(static_cast<std::int64_t>(a), 1),
                      rest / static_cast<double>(vocab_size - fixed));
  }
  return dist;
}

/// Labeled rollouts drawn i.i.d. from scattered_distribution.
inline std::vector<Rollout> scattered_rollouts(double modal_prob, double truth_prob, std::size_t vocab_size,
                                               std::size_t n_vote, std::size_t trials, std::uint64_t seed,
                                               bool modal_is_truth = false) {
  if (n_vote < 1 || trials < 1) throw std::invalid_argument("n_vote and trials must be at least 1");
  const auto dist = scattered_distribution(modal_prob, truth_prob, vocab_size, modal_is_truth);
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& entry : dist) cumulative.push_back(acc += entry.second);
  const std::string truth = modal_is_truth ? "0" : "1";

  std::vector<Rollout> rollouts;
  rollouts.reserve(trials);
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    Rollout r;
    r.question_id = "scatter-" + std::to_string(t);
    r.ground_truth = parse_label(truth);
    r.outputs.reserve(n_vote);
    for (std::size_t i = 0; i < n_vote; ++i) {
      r.outputs.push_back("The answer is \\boxed{" + dist[rng.categorical(cumulative)].first.serialize() + "}");
    }
    rollouts.push_back(std::move(r));
  }
  return rollouts;
}

inline ScatterReport scattered_policy_experiment(double modal_prob, double truth_prob, std::size_t vocab_size,
                                                 std::size_t n_vote, std::size_t trials, std::uint64_t seed,
                                                 bool modal_is_truth = false) {
  const auto dist = scattered_distribution(modal_prob, truth_prob, vocab_size, modal_is_truth);
  const auto rollouts = scattered_rollouts(modal_prob, truth_prob, vocab_size, n_vote, trials, seed, modal_is_truth);
  ScatterReport report;
  report.trials = trials;
  report.samples = trials * n_vote;
  DatasetAccumulator acc;
  for (const auto& r : rollouts) acc.add(score_labeled(extract_all(r.outputs), *r.ground_truth));
  const auto summary = acc.summary();
  report.label_accuracy = summary.label_accuracy;
  report.reward_accuracy = summary.reward_accuracy;
  report.mean_majority_ratio = summary.majority_ratio;
  report.analytic_reward_accuracy = analytic_reward_accuracy(dist, dist.front().first, *rollouts.front().ground_truth);
  return report;
}

}  // namespace ttrl::sim
