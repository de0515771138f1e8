#include <gtest/gtest.h>

#include <cstdlib>

#include "fixtures.hpp"
#include "sciner/config.hpp"

using namespace sciner;
using fixtures::TempDir;

namespace {

struct EnvGuard {
  EnvGuard() { ::unsetenv(kRunDirEnv); }
  ~EnvGuard() { ::unsetenv(kRunDirEnv); }
};

}  // namespace

TEST(KeyValues, CommentsBlanksAndWhitespace) {
  auto kv = parse_key_values("# comment\n\n gamma = 0.9 \nseed=4\r\n");
  EXPECT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("gamma"), "0.9");
  EXPECT_EQ(kv.at("seed"), "4");
}

TEST(KeyValues, Errors) {
  EXPECT_THROW(parse_key_values("gamma 0.9\n"), FormatError);
  EXPECT_THROW(parse_key_values("= 3\n"), FormatError);
  try {
    parse_key_values("seed = 1\nseed = 2\n", "run.conf");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("run.conf:2"), std::string::npos);
  }
}

TEST(Settings, AppliesEveryKnob) {
  RunConfig c;
  apply_setting(c, "iterations", "3");
  apply_setting(c, "step1_epochs", "7");
  apply_setting(c, "step1_lr", "0.5");
  apply_setting(c, "step3_batch_size", "4");
  apply_setting(c, "gamma", "0.95");
  apply_setting(c, "amb_policy", "drop_paragraph");
  apply_setting(c, "seed", "11");
  apply_setting(c, "carry_forward", "true");
  apply_setting(c, "draws", "20");
  apply_setting(c, "draw_size", "40");
  apply_setting(c, "manual", "data/manual.tsv", "/cfg");
  apply_setting(c, "test", "/abs/test.tsv", "/cfg");
  EXPECT_EQ(c.loop.iterations, 3);
  EXPECT_EQ(c.loop.step1.epochs, 7);
  EXPECT_DOUBLE_EQ(c.loop.step1.learning_rate, 0.5);
  EXPECT_EQ(c.loop.step3.batch_size, 4u);
  EXPECT_DOUBLE_EQ(c.loop.gate.gamma, 0.95);
  EXPECT_EQ(c.loop.amb_policy, AmbPolicy::drop_paragraph);
  EXPECT_EQ(c.loop.seed, 11u);
  EXPECT_EQ(c.bootstrap.seed, 11u);
  EXPECT_TRUE(c.loop.carry_forward);
  EXPECT_EQ(c.bootstrap.draws, 20u);
  EXPECT_EQ(c.bootstrap.draw_size, 40u);
  EXPECT_EQ(*c.manual, fs::path("/cfg/data/manual.tsv"));
  EXPECT_EQ(*c.test, fs::path("/abs/test.tsv"));
}

TEST(Settings, RejectsUnknownAndMalformed) {
  RunConfig c;
  EXPECT_THROW(apply_setting(c, "gama", "0.9"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "gamma", "high"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "iterations", "2.5"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "carry_forward", "maybe"), ArgumentError);
  EXPECT_THROW(apply_setting(c, "amb_policy", "keep"), ArgumentError);
}

TEST(Load, DefaultsWithoutFile) {
  EnvGuard g;
  auto c = load_run_config(std::nullopt);
  EXPECT_FALSE(c.run_dir);
  EXPECT_EQ(c.held_out, 2u);
  EXPECT_EQ(c.bootstrap.draws, 12u);
  EXPECT_EQ(c.bootstrap.draw_size, 50u);
  EXPECT_EQ(c.fetch_attempts, 3);
}

TEST(Load, EnvironmentThenFile) {
  EnvGuard g;
  TempDir tmp("config");
  ::setenv(kRunDirEnv, "/from/env", 1);
  EXPECT_EQ(*load_run_config(std::nullopt).run_dir, fs::path("/from/env"));
  auto file = tmp.path / "run.conf";
  atomic_write_text(file, "gamma = 0.9\n");
  EXPECT_EQ(*load_run_config(file).run_dir, fs::path("/from/env"));
  atomic_write_text(file, "run_dir = runs\n");
  EXPECT_EQ(*load_run_config(file).run_dir, tmp.path / "runs");
}

TEST(Load, MissingFile) {
  EnvGuard g;
  EXPECT_THROW(load_run_config(fs::path("/nonexistent/run.conf")), IoError);
}
