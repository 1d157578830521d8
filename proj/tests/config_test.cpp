#include "ttrl/config.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace ttrl {
namespace {

KeyValues Parse(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in);
}

TEST(KeyValues, CommentsAndWhitespace) {
  const auto kv = Parse("# header\n\n  episodes = 3 \nmode=tabular\n");
  EXPECT_EQ(kv.at("episodes"), "3");
  EXPECT_EQ(kv.at("mode"), "tabular");
}

TEST(KeyValues, MissingEquals) { EXPECT_THROW(Parse("episodes 3\n"), ConfigError); }

TEST(SimulationConfig, ParsesAllKeys) {
  const auto c = parse_simulation_config(Parse(
      "vocab_size=5\nskills=3\nquestions=12\nbias_scale=1.5\ntruth_margin=0.5\ntask_seed=4\nmode=tabular\n"
      "temperature=0.6\nn_vote=16\nn_train=8\nepisodes=2\npeak_lr=0.1\nlr_floor=0.01\nseed=9\nadvantage_epsilon=0\n"));
  EXPECT_EQ(c.vocab_size, 5u);
  EXPECT_EQ(c.skills, 3u);
  EXPECT_EQ(c.questions, 12u);
  EXPECT_EQ(c.bias_scale, 1.5);
  EXPECT_EQ(c.truth_margin, 0.5);
  EXPECT_EQ(c.task_seed, 4u);
  EXPECT_EQ(c.mode, sim::PolicyMode::tabular);
  EXPECT_EQ(c.temperature, 0.6);
  EXPECT_EQ(c.train.n_vote, 16u);
  EXPECT_EQ(c.train.n_train, 8u);
  EXPECT_EQ(c.train.episodes, 2u);
  EXPECT_EQ(c.train.peak_lr, 0.1);
  EXPECT_EQ(c.train.lr_floor, 0.01);
  EXPECT_EQ(c.train.seed, 9u);
  EXPECT_EQ(c.train.advantage_epsilon, 0.0);
}

TEST(SimulationConfig, Defaults) {
  const auto c = parse_simulation_config({});
  EXPECT_EQ(c.train.n_vote, 64u);
  EXPECT_EQ(c.train.n_train, 32u);
  EXPECT_EQ(c.train.peak_lr, 0.05);
}

TEST(SimulationConfig, ErrorsNameTheKey) {
  auto key_of = [](const std::string& text) {
    try {
      parse_simulation_config(Parse(text));
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of("learning_rate=0.1\n"), "learning_rate");
  EXPECT_EQ(key_of("episodes=three\n"), "episodes");
  EXPECT_EQ(key_of("episodes=0\n"), "episodes");
  EXPECT_EQ(key_of("n_train=100\n"), "n_train");
  EXPECT_EQ(key_of("mode=neural\n"), "mode");
  EXPECT_EQ(key_of("temperature=0\n"), "temperature");
}

TEST(ServiceConfig, PrecedenceEnvOverFileOverDefault) {
  const auto defaults = resolve_service_config({}, {});
  EXPECT_EQ(defaults.host, "127.0.0.1");
  EXPECT_EQ(defaults.port, 8080);
  EXPECT_EQ(defaults.max_batch_outputs, kDefaultMaxBatchOutputs);
  EXPECT_FALSE(defaults.log_level);

  const KeyValues file{{"listen", "0.0.0.0:9000"}, {"max_batch_outputs", "100"}, {"log_level", "warn"}};
  const auto from_file = resolve_service_config(file, {});
  EXPECT_EQ(from_file.host, "0.0.0.0");
  EXPECT_EQ(from_file.port, 9000);
  EXPECT_EQ(from_file.max_batch_outputs, 100u);
  EXPECT_EQ(from_file.log_level, LogLevel::warn);

  const KeyValues env{{"TTRL_LISTEN", "127.0.0.1:9100"}, {"TTRL_LOG_LEVEL", "debug"}};
  const auto merged = resolve_service_config(file, env);
  EXPECT_EQ(merged.port, 9100);
  EXPECT_EQ(merged.max_batch_outputs, 100u);
  EXPECT_EQ(merged.log_level, LogLevel::debug);
}

TEST(ServiceConfig, InvalidValues) {
  EXPECT_THROW(resolve_service_config({{"listen", "nowhere"}}, {}), ConfigError);
  EXPECT_THROW(resolve_service_config({{"listen", "h:70000"}}, {}), ConfigError);
  EXPECT_THROW(resolve_service_config({{"max_batch_outputs", "0"}}, {}), ConfigError);
  EXPECT_THROW(resolve_service_config({{"colour", "red"}}, {}), ConfigError);
  EXPECT_THROW(resolve_service_config({}, {{"TTRL_LOG_LEVEL", "loud"}}), ConfigError);
}

}  // namespace
}  // namespace ttrl
