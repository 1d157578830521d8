#pragma once

// JSON wire format shared by the `reward` command and the HTTP service.
//
// Input item:  {"question_id": str, "outputs": [str, ...], "ground_truth"?: str,
//               "n_train"?: uint, "subsample_seed"?: uint}
// Result item: {"question_id", "estimated_label" (str or null), "degenerate",
//               "rewards", "majority_ratio", "tie", "selected_indices"?,
//               "label_accuracy"?, "reward_accuracy"?, "ground_truth_ratio"?}

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttrl/answer_norm.hpp"
#include "ttrl/consensus.hpp"
#include "ttrl/metrics.hpp"

namespace ttrl {

using Json = nlohmann::ordered_json;

/// Invalid record; `status` is the HTTP status the service answers with.
class RecordError : public std::runtime_error {
 public:
  RecordError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct RolloutItem {
  std::string question_id;
  std::vector<std::string> outputs;
  std::optional<std::string> ground_truth;
  std::optional<std::size_t> n_train;
  std::uint64_t subsample_seed = 0;

  Rollout to_rollout() const {
    Rollout r;
    r.question_id = question_id;
    r.outputs = outputs;
    if (ground_truth) r.ground_truth = parse_label(*ground_truth);
    return r;
  }
};

/// Validates one item; `where` prefixes field-level messages.
inline RolloutItem parse_rollout_item(const Json& j, const std::string& where) {
  auto fail = [&](const std::string& field, const std::string& msg) -> RecordError {
    return RecordError(400, where + (field.empty() ? "" : "." + field) + ": " + msg);
  };
  if (!j.is_object()) throw fail("", "must be an object");
  RolloutItem item;

  const auto qid = j.find("question_id");
  if (qid == j.end() || !qid->is_string()) throw fail("question_id", "required string");
  item.question_id = qid->get<std::string>();

  const auto outputs = j.find("outputs");
  if (outputs == j.end() || !outputs->is_array()) throw fail("outputs", "required array of strings");
  if (outputs->empty()) throw fail("outputs", "must be non-empty");
  item.outputs.reserve(outputs->size());
  for (std::size_t i = 0; i < outputs->size(); ++i) {
    const auto& o = (*outputs)[i];
    if (!o.is_string()) throw fail("outputs[" + std::to_string(i) + "]", "must be a string");
    item.outputs.push_back(o.get<std::string>());
  }

  if (const auto gt = j.find("ground_truth"); gt != j.end() && !gt->is_null()) {
    if (!gt->is_string()) throw fail("ground_truth", "must be a string");
    item.ground_truth = gt->get<std::string>();
  }
  if (const auto n = j.find("n_train"); n != j.end() && !n->is_null()) {
    if (!n->is_number_unsigned() || n->get<std::uint64_t>() == 0) throw fail("n_train", "must be a positive integer");
    item.n_train = n->get<std::size_t>();
    if (*item.n_train > item.outputs.size()) {
      throw RecordError(422, where + ".n_train: subsample larger than rollout");
    }
  }
  if (const auto s = j.find("subsample_seed"); s != j.end() && !s->is_null()) {
    if (!s->is_number_unsigned()) throw fail("subsample_seed", "must be a non-negative integer");
    item.subsample_seed = s->get<std::uint64_t>();
  }
  return item;
}

struct ScoredItem {
  Json json;
  bool degenerate = false;
};

/// Scores one item exactly as majority_voting_rewards / vote_then_sample do.
inline ScoredItem score_rollout_item(const RolloutItem& item) {
  const Rollout rollout = item.to_rollout();
  ConsensusResult consensus;
  RewardVector rewards;
  std::optional<std::vector<std::size_t>> selected;
  if (item.n_train) {
    auto sub = vote_then_sample(rollout, *item.n_train, item.subsample_seed);
    consensus = std::move(sub.consensus);
    rewards = std::move(sub.rewards);
    selected = std::move(sub.selected_indices);
  } else {
    auto voted = majority_voting_rewards(rollout);
    consensus = std::move(voted.consensus);
    rewards = std::move(voted.rewards);
  }

  ScoredItem out;
  out.degenerate = consensus.degenerate;
  Json& j = out.json;
  j["question_id"] = item.question_id;
  j["estimated_label"] = consensus.label ? Json(consensus.label->serialize()) : Json(nullptr);
  j["degenerate"] = consensus.degenerate;
  j["rewards"] = rewards;
  j["majority_ratio"] = consensus.majority_ratio;
  j["tie"] = consensus.tie;
  if (selected) j["selected_indices"] = *selected;
  if (rollout.ground_truth) {
    const auto& truth = *rollout.ground_truth;
    std::vector<CanonicalAnswer> scored;
    if (selected) {
      for (std::size_t i : *selected) scored.push_back(consensus.answers[i]);
    } else {
      scored = consensus.answers;
    }
    j["label_accuracy"] = label_accuracy(consensus, truth);
    j["reward_accuracy"] = reward_accuracy(rewards, rewards_against(scored, truth));
    j["ground_truth_ratio"] = ground_truth_ratio(consensus.answers, truth);
  }
  return out;
}

}  // namespace ttrl
