#pragma once

// Subcommands behind the `ttrl` executable. Each returns a process exit code:
// 0 success, 2 config/IO, 3 parse, 4 missing ground truth, 5 bind failure.

#include <pthread.h>
#include <signal.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "ttrl/config.hpp"
#include "ttrl/records.hpp"
#include "ttrl/service.hpp"
#include "ttrl/sim.hpp"
#include "ttrl/version.hpp"

namespace ttrl::cli {

enum ExitCode : int { kOk = 0, kConfigOrIo = 2, kParse = 3, kMissingTruth = 4, kBind = 5 };

namespace detail {

inline std::optional<Json> parse_json_line(const std::string& line, std::size_t lineno, std::ostream& err) {
  try {
    return Json::parse(line);
  } catch (const Json::parse_error& e) {
    err << "line " << lineno << ": malformed record: " << e.what() << '\n';
    return std::nullopt;
  }
}

inline std::string line_tag(std::size_t lineno) { return "line " + std::to_string(lineno); }

inline spdlog::level::level_enum to_spdlog(LogLevel level) {
  switch (level) {
    case LogLevel::trace: return spdlog::level::trace;
    case LogLevel::debug: return spdlog::level::debug;
    case LogLevel::info: return spdlog::level::info;
    case LogLevel::warn: return spdlog::level::warn;
    case LogLevel::error: return spdlog::level::err;
    case LogLevel::off: break;
  }
  return spdlog::level::off;
}

}  // namespace detail

/// Scores a rollout dump, one result line per input line. With n_train, each
/// line is subsampled using a seed derived from `seed` and its line number.
inline int cmd_reward(const std::string& input_path, const std::string& output_path, std::optional<std::size_t> n_train,
                      std::uint64_t seed, std::ostream& err) {
  std::ifstream in(input_path);
  if (!in) {
    err << "cannot read " << input_path << '\n';
    return kConfigOrIo;
  }
  std::ofstream file;
  if (output_path != "-") {
    file.open(output_path, std::ios::binary | std::ios::trunc);
    if (!file) {
      err << "cannot write " << output_path << '\n';
      return kConfigOrIo;
    }
  }
  std::ostream& out = output_path == "-" ? std::cout : file;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto json = detail::parse_json_line(line, lineno, err);
    if (!json) return kParse;
    try {
      RolloutItem item = parse_rollout_item(*json, detail::line_tag(lineno));
      if (n_train) {
        if (*n_train > item.outputs.size()) throw RecordError(422, detail::line_tag(lineno) + ": subsample larger than rollout");
        item.n_train = n_train;
        item.subsample_seed = derive_seed(seed, lineno);
      }
      out << score_rollout_item(item).json.dump() << '\n';
    } catch (const RecordError& e) {
      err << e.what() << '\n';
      return kParse;
    }
  }
  out.flush();
  if (!out) {
    err << "write failed: " << output_path << '\n';
    return kConfigOrIo;
  }
  return kOk;
}

/// Runs a simulation described by a key-value config and writes metrics.csv,
/// eval.csv and policy.txt into out_dir.
inline int cmd_simulate(const std::string& config_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  std::ifstream in(config_path);
  if (!in) {
    err << "cannot read " << config_path << '\n';
    return kConfigOrIo;
  }
  SimulationConfig config;
  try {
    config = parse_simulation_config(parse_key_values(in));
  } catch (const ConfigError& e) {
    err << "config key '" << e.key() << "': " << e.what() << '\n';
    return kConfigOrIo;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    err << "cannot create " << out_dir << ": " << ec.message() << '\n';
    return kConfigOrIo;
  }

  const auto task = sim::generate_task(config.vocab_size, config.skills, config.questions, config.bias_scale,
                                       config.task_seed, config.truth_margin);
  const auto policy = sim::PolicyState::uniform(task, config.mode, config.temperature);
  const auto run = sim::run_training(task, policy, config.train);

  const std::filesystem::path dir(out_dir);
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary | std::ios::trunc);
  std::ofstream evals(dir / "eval.csv", std::ios::binary | std::ios::trunc);
  std::ofstream dump(dir / "policy.txt", std::ios::binary | std::ios::trunc);
  write_metrics_csv(metrics, run.steps);
  sim::write_eval_csv(evals, run.evals);
  sim::write_policy(dump, run.final_policy);
  if (!metrics || !evals || !dump) {
    err << "write failed in " << out_dir << '\n';
    return kConfigOrIo;
  }

  const auto n = config.train.n_vote;
  const auto& first = run.evals.front();
  const auto& last = run.evals.back();
  out << "initial avg@" << n << ": " << format_real(first.avg_at_n) << '\n'
      << "initial maj@" << n << ": " << format_real(first.maj_at_n) << '\n'
      << "final avg@" << n << ": " << format_real(last.avg_at_n) << '\n'
      << "final maj@" << n << ": " << format_real(last.maj_at_n) << '\n';
  return kOk;
}

/// Dataset-level metrics over a labeled rollout dump.
inline int cmd_analyze(const std::string& input_path, std::ostream& out, std::ostream& err) {
  std::ifstream in(input_path);
  if (!in) {
    err << "cannot read " << input_path << '\n';
    return kConfigOrIo;
  }
  DatasetAccumulator acc;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto json = detail::parse_json_line(line, lineno, err);
    if (!json) return kParse;
    RolloutItem item;
    try {
      item = parse_rollout_item(*json, detail::line_tag(lineno));
    } catch (const RecordError& e) {
      err << e.what() << '\n';
      return kParse;
    }
    if (!item.ground_truth) {
      err << detail::line_tag(lineno) << " (question_id '" << item.question_id << "'): missing ground_truth\n";
      return kMissingTruth;
    }
    acc.add(score_labeled(extract_all(item.outputs), parse_label(*item.ground_truth)));
  }
  const auto s = acc.summary();
  out << "questions: " << s.questions << '\n'
      << "avg@n: " << format_real(s.avg_at_n) << '\n'
      << "maj@n: " << format_real(s.maj_at_n) << '\n'
      << "label_accuracy: " << format_real(s.label_accuracy) << '\n'
      << "reward_accuracy: " << format_real(s.reward_accuracy) << '\n'
      << "ground_truth_ratio: " << format_real(s.ground_truth_ratio) << '\n'
      << "majority_ratio: " << format_real(s.majority_ratio) << '\n';
  return kOk;
}

/// Serves /v1 until SIGINT or SIGTERM. An empty config path uses defaults
/// plus environment overrides.
/// An explicit --log-level (log_override) beats the config file and environment.
inline int cmd_serve(const std::string& config_path, std::ostream& err, bool log_override = false) {
  KeyValues file;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      err << "cannot read " << config_path << '\n';
      return kConfigOrIo;
    }
    try {
      file = parse_key_values(in);
    } catch (const ConfigError& e) {
      err << e.what() << '\n';
      return kConfigOrIo;
    }
  }
  ServiceConfig config;
  try {
    config = resolve_service_config(file, service_environment());
  } catch (const ConfigError& e) {
    err << "config key '" << e.key() << "': " << e.what() << '\n';
    return kConfigOrIo;
  }
  if (config.log_level && !log_override) spdlog::set_level(detail::to_spdlog(*config.log_level));

  // Block the shutdown signals before any server thread exists so that only
  // the waiter below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  httplib::Server server;
  RewardService service(config.max_batch_outputs);
  service.mount(server);
  // The library default also sets SO_REUSEPORT, which lets a second server
  // share an occupied port. Keep only SO_REUSEADDR so that bind fails.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (!server.bind_to_port(config.host, config.port)) {
    err << "cannot bind " << config.host << ':' << config.port << '\n';
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
    return kBind;
  }
  spdlog::info("listening on {}:{}", config.host, config.port);

  std::atomic<bool> finished{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    if (!finished.load()) {
      spdlog::info("signal {} received, shutting down", sig);
      server.stop();
    }
  });
  const bool clean = server.listen_after_bind();
  finished.store(true);
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return clean ? kOk : kBind;
}

inline int run(int argc, char** argv) {
  CLI::App app{"Label-free RL reward toolkit: majority-vote rewards, metrics, simulation and a reward service", "ttrl"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  std::string log_level = "info";
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
  auto* log_flag = app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();
  app.fallthrough();

  std::string input, output, config, out_dir;
  std::optional<std::size_t> n_train;

  auto* reward = app.add_subcommand("reward", "Score a rollout dump with majority-vote rewards");
  reward->add_option("input", input, "Rollout dump, one JSON object per line")->required();
  reward->add_option("output", output, "Result file ('-' for stdout)")->required();
  reward->add_option("--n-train", n_train, "Reward a seeded subsample of this many outputs per line");

  auto* simulate = app.add_subcommand("simulate", "Run the policy-gradient simulator");
  simulate->add_option("config", config, "Key-value simulation config")->required();
  simulate->add_option("out_dir", out_dir, "Directory for metrics.csv, eval.csv and policy.txt")->required();

  auto* analyze = app.add_subcommand("analyze", "Dataset metrics for a labeled rollout dump");
  analyze->add_option("input", input, "Rollout dump with ground_truth on every line")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP reward service");
  serve->add_option("config", config, "Key-value service config (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigOrIo;
  }
  try {
    spdlog::set_level(detail::to_spdlog(parse_log_level("--log-level", log_level)));
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigOrIo;
  }

  if (*reward) return cmd_reward(input, output, n_train, seed, std::cerr);
  if (*simulate) return cmd_simulate(config, out_dir, std::cout, std::cerr);
  if (*analyze) return cmd_analyze(input, std::cout, std::cerr);
  return cmd_serve(config, std::cerr, log_flag->count() > 0);
}

}  // namespace ttrl::cli
