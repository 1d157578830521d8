#pragma once

// Test-only reference implementations. None of these call into the code they
// check beyond building inputs.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ttrl::oracle {

/// A rollout over a small integer alphabet; nullopt marks an output with no
/// extractable answer. Outputs are rendered in assorted surface formats.
struct TokenRollout {
  std::vector<std::optional<int>> tokens;
  std::vector<std::string> outputs;
};

inline std::string render_token(int value, std::mt19937_64& gen) {
  const std::string v = std::to_string(value);
  switch (gen() % 6) {
    case 0: return "so the answer is \\boxed{" + v + "}.";
    case 1: return "Reasoning...\nAnswer: " + v;
    case 2: return "I tried 1000 cases and got " + v + " in the end";
    case 3: return "\\boxed{\\frac{" + std::to_string(2 * value) + "}{2}}";
    case 4: return "\\boxed{" + v + ".0}";
    default: return "$" + v + "$";
  }
}

inline std::string render_garbage(std::mt19937_64& gen) {
  static const char* kGarbage[] = {"no idea", "", "\\boxed{}", "I cannot solve this", "\\boxed{\\frac{1}{0}}"};
  return kGarbage[gen() % 5];
}

inline TokenRollout random_token_rollout(std::mt19937_64& gen, int alphabet, int n, double garbage_rate) {
  TokenRollout r;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    if (u(gen) < garbage_rate) {
      r.tokens.push_back(std::nullopt);
      r.outputs.push_back(render_garbage(gen));
    } else {
      const int t = static_cast<int>(gen() % static_cast<std::uint64_t>(alphabet));
      r.tokens.push_back(t);
      r.outputs.push_back(render_token(t, gen));
    }
  }
  return r;
}

/// Listing-1 semantics by direct counting: most frequent token, ties to the
/// token seen first, missing answers never vote or match.
inline std::vector<int> brute_force_rewards(const std::vector<std::optional<int>>& tokens,
                                            std::optional<int>* label_out = nullptr) {
  std::map<int, int> counts;
  std::vector<int> order;
  for (const auto& t : tokens) {
    if (!t) continue;
    if (counts[*t]++ == 0) order.push_back(*t);
  }
  std::optional<int> label;
  int best = 0;
  for (int t : order) {
    if (counts[t] > best) {
      best = counts[t];
      label = t;
    }
  }
  if (label_out) *label_out = label;
  std::vector<int> rewards;
  for (const auto& t : tokens) rewards.push_back(label && t && *t == *label ? 1 : 0);
  return rewards;
}

/// Reward accuracy by enumerating answers: an answer a contributes p(a) when
/// [a == est] == [a == truth].
inline double enumerated_reward_accuracy(const std::vector<std::pair<int, double>>& dist, int est, int truth) {
  double acc = 0.0;
  for (const auto& [a, p] : dist) {
    const int r_est = a == est ? 1 : 0;
    const int r_true = a == truth ? 1 : 0;
    if (r_est == r_true) acc += p;
  }
  return acc;
}

/// d/dtheta of sum_i A_i log softmax(theta / tau)[s_i] by central differences.
inline std::vector<double> finite_difference_pg(std::vector<double> theta, const std::vector<std::size_t>& slots,
                                                const std::vector<double>& adv, double tau, double h = 1e-6) {
  auto objective = [&](const std::vector<double>& th) {
    double mx = th[0];
    for (double x : th) mx = std::max(mx, x);
    double z = 0.0;
    for (double x : th) z += std::exp((x - mx) / tau);
    double total = 0.0;
    for (std::size_t i = 0; i < slots.size(); ++i) total += adv[i] * ((th[slots[i]] - mx) / tau - std::log(z));
    return total;
  };
  std::vector<double> grad(theta.size());
  for (std::size_t v = 0; v < theta.size(); ++v) {
    const double keep = theta[v];
    theta[v] = keep + h;
    const double up = objective(theta);
    theta[v] = keep - h;
    const double down = objective(theta);
    theta[v] = keep;
    grad[v] = (up - down) / (2 * h);
  }
  return grad;
}

}  // namespace ttrl::oracle
