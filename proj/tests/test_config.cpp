// Copyright 2026 The lcvbandit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lcvbandit/config.hpp"
#include "lcvbandit/output.hpp"

namespace {

using lcv::ConfigError;
using lcv::ExperimentConfig;

const char* kMinimal = R"(instance:
  name: instance1
policies:
  - kind: ucb_lcv
)";

// Parses `text` expecting a ConfigError at `key` and `line`.
void expect_error(const std::string& text, const std::string& key, int line) {
  try {
    lcv::parse_config_text(text);
    FAIL() << "expected ConfigError at " << key;
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key_path(), key) << e.what();
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_NE(std::string(e.what()).find(key), std::string::npos);
  }
}

TEST(Config, MinimalUsesDefaults) {
  const ExperimentConfig c = lcv::parse_config_text(kMinimal);
  EXPECT_EQ(c.instance_name, "instance1");
  EXPECT_EQ(c.q, 1u);
  EXPECT_EQ(c.horizon, 10000u);
  EXPECT_EQ(c.n_runs, 100u);
  EXPECT_EQ(c.base_seed, 1u);
  ASSERT_EQ(c.policies.size(), 1u);
  EXPECT_EQ(c.policies[0].alpha, 2.0);
  EXPECT_EQ(c.policies[0].estimator_variant, lcv::EstimatorVariant::kGaussian);
  EXPECT_EQ(c.policies[0].routing, lcv::Routing::kAlways);
  EXPECT_EQ(c.policies[0].label(), "ucb_lcv");
  EXPECT_EQ(c.overrides.epsilon, 0.5);
  EXPECT_EQ(c.overrides.arms, 10u);
  EXPECT_EQ(c.overrides.cv_mean_error, 0.0);
  EXPECT_FALSE(c.sweep);
}

TEST(Config, FullDocument) {
  const ExperimentConfig c = lcv::parse_config_text(R"(name: eps
instance:
  name: instance3
  epsilon: 0.3
  arms: 5
q: 1
horizon: 500
runs: 4
seed: 99
record_stride: 10
write_runs: true
policies:
  - kind: ucb_lcv
    name: LCV-J
    estimator: jackknife
  - kind: ucb_v
    ucb_v_range: 0.5
sweep:
  parameter: epsilon
  values: [0.1, 0.9]
)");
  EXPECT_EQ(c.label, "eps");
  EXPECT_EQ(c.instance().num_arms(), 5u);
  EXPECT_EQ(c.instance().availability.epsilon, 0.3);
  EXPECT_EQ(c.record_stride, 10u);
  EXPECT_TRUE(c.write_runs);
  EXPECT_EQ(c.policies[0].label(), "LCV-J");
  EXPECT_EQ(c.policies[1].ucb_v_range, 0.5);
  ASSERT_TRUE(c.sweep);
  EXPECT_EQ(c.sweep->values, (std::vector<double>{0.1, 0.9}));
}

TEST(Config, UnknownKeys) {
  expect_error("instance:\n  name: instance1\nhorizn: 5\npolicies:\n  - kind: ucb1\n", "horizn", 3);
  expect_error("instance:\n  name: instance1\npolicies:\n  - kind: ucb1\n    alhpa: 3\n", "policies[0].alhpa", 5);
  expect_error("instance:\n  name: instance1\n  eps: 0.2\npolicies:\n  - kind: ucb1\n", "instance.eps", 3);
}

TEST(Config, TypeErrors) {
  expect_error("instance:\n  name: instance1\nhorizon: lots\npolicies:\n  - kind: ucb1\n", "horizon", 3);
  expect_error("instance:\n  name: instance1\nhorizon: -5\npolicies:\n  - kind: ucb1\n", "horizon", 3);
  expect_error("instance:\n  name: instance1\npolicies:\n  - kind: ucb1\n    alpha: [1]\n", "policies[0].alpha", 5);
  expect_error("instance:\n  name: instance1\npolicies:\n  - kind: ucb1\n    alpha: 0.5\n", "policies[0].alpha", 5);
  expect_error("instance:\n  name: instance1\nwrite_runs: maybe\npolicies:\n  - kind: ucb1\n", "write_runs", 3);
  expect_error("instance:\n  name: instance1\npolicies:\n  - kind: magic\n", "policies[0].kind", 4);
  expect_error("instance:\n  name: nowhere\npolicies:\n  - kind: ucb1\n", "instance.name", 2);
  expect_error("instance:\n  name: instance1\n  epsilon: 1.5\npolicies:\n  - kind: ucb1\n", "instance.epsilon", 3);
  expect_error("instance:\n  name: instance1\npolicies: []\n", "policies", 3);
}

TEST(Config, DuplicatePolicyNames) {
  expect_error("instance:\n  name: instance1\npolicies:\n  - kind: ucb1\n  - kind: ucb1\n", "policies[1].name", 5);
  EXPECT_NO_THROW(lcv::parse_config_text(
      "instance:\n  name: instance1\npolicies:\n  - kind: ucb1\n  - kind: ucb1\n    name: other\n"));
}

TEST(Config, WarmStartLongerThanHorizon) {
  expect_error("instance:\n  name: instance1\nhorizon: 40\npolicies:\n  - kind: ucb_lcv\n", "horizon", 3);
}

TEST(Config, SweepFamily) {
  expect_error("instance:\n  name: instance1\npolicies:\n  - kind: ucb1\nsweep:\n  parameter: epsilon\n  values: [0.1]\n",
               "sweep.parameter", 6);
  expect_error(
      "instance:\n  name: instance3\npolicies:\n  - kind: ucb1\nsweep:\n  parameter: epsilon\n  values: [0.1, 2]\n",
      "sweep.values[1]", 7);
}

TEST(Config, MalformedYaml) {
  try {
    lcv::parse_config_text("instance: [\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_GT(e.line(), 0);
  }
}

TEST(Config, RoundTrip) {
  const ExperimentConfig c = lcv::parse_config_text(R"(name: "a \"quoted\" label"
instance:
  name: instance4
  cv_mean_error: 0.1
q: 2
horizon: 200
runs: 3
policies:
  - kind: ucb_lcv
    alpha: 2.5
    estimator: batching
    batch_count: 4
    routing: gated
  - kind: ucb_v
    ucb_v_range: 0.3333333333333333
sweep:
  parameter: cv_mean_error
  values: [0.1, -0.2, 0.30000000000000004]
)");
  const std::string text = lcv::serialize_config(c);
  const ExperimentConfig back = lcv::parse_config_text(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(lcv::serialize_config(back), text);
}

TEST(Overrides, SetExistingKeys) {
  const ExperimentConfig c =
      lcv::parse_config_text(kMinimal, {"instance.epsilon=0.25", "horizon=2000", "policies[0].alpha=3"});
  EXPECT_EQ(c.overrides.epsilon, 0.25);
  EXPECT_EQ(c.horizon, 2000u);
  EXPECT_EQ(c.policies[0].alpha, 3.0);
  EXPECT_EQ(lcv::parse_config_text(kMinimal, {"policies.0.alpha=4"}).policies[0].alpha, 4.0);
}

TEST(Overrides, RejectedValuesAndKeys) {
  try {
    lcv::parse_config_text(kMinimal, {"instance.epsilon=2.0"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key_path(), "instance.epsilon");
  }
  EXPECT_THROW(lcv::parse_config_text(kMinimal, {"instance.nope=1"}), ConfigError);
  EXPECT_THROW(lcv::parse_config_text(kMinimal, {"policies[3].alpha=3"}), ConfigError);
  EXPECT_THROW(lcv::parse_config_text(kMinimal, {"horizon"}), ConfigError);
}

TEST(Output, Sha256KnownValues) {
  EXPECT_EQ(lcv::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(lcv::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Output, FormatDouble) {
  EXPECT_EQ(lcv::format_double(0.1), "0.1");
  EXPECT_EQ(lcv::format_double(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(lcv::format_double(2.0 / 3.0, 6), "0.666667");
  EXPECT_EQ(lcv::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(lcv::csv_field("plain"), "plain");
}

TEST(Output, RegretCsvShape) {
  ExperimentConfig c = lcv::parse_config_text(kMinimal, {"horizon=100", "runs=2"});
  c.policies.push_back(c.policies[0]);
  c.policies[1].kind = lcv::PolicyKind::kUcb1;
  c.policies[1].name = "ucb1";
  const auto summary = lcv::run_batch(c, {1, true});
  const std::string csv = lcv::regret_csv(summary);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "policy,round,mean_regret,ci_low,ci_high");
  std::size_t rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 201u);
  std::istringstream runs(lcv::runs_csv(summary));
  rows = 0;
  while (std::getline(runs, line)) ++rows;
  EXPECT_EQ(rows, 1u + 2 * 2 * 100);
  std::istringstream fin(lcv::final_csv(summary));
  rows = 0;
  while (std::getline(fin, line)) ++rows;
  EXPECT_EQ(rows, 3u);
}

TEST(Output, FigureData) {
  const std::string fig1 = lcv::fig1_ratio_csv(100);
  EXPECT_EQ(fig1.substr(0, 8), "S,ratio\n");
  EXPECT_NE(fig1.find("\n100,1\n"), std::string::npos);
  const auto grid = lcv::log_grid(2, 20000);
  EXPECT_EQ(grid.front(), 2);
  EXPECT_EQ(grid.back(), 20000);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_GT(grid[i], grid[i - 1]);
  const std::string fig2 = lcv::fig2_quantile_csv(1000, 1);
  EXPECT_EQ(fig2.substr(0, 31), "T,squared_critical_value,bound\n");
  EXPECT_EQ(fig2.substr(31, 2), "4,");
}

}  // namespace
