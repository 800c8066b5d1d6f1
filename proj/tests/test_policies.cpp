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

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "lcvbandit/environment.hpp"
#include "lcvbandit/policies.hpp"
#include "lcvbandit/simulator.hpp"
#include "oracles.hpp"
#include "reference.hpp"

namespace {

using lcv::Observation;
using lcv::PolicyConfig;
using lcv::PolicyKind;

PolicyConfig config(PolicyKind kind) {
  PolicyConfig c;
  c.kind = kind;
  return c;
}

Observation plain(double r) { return {r, std::nullopt}; }
Observation with_cv(double r, double w) { return {r, std::vector<double>{w}}; }

std::vector<std::vector<double>> omega(std::size_t arms, double w = 0.5) {
  return std::vector<std::vector<double>>(arms, std::vector<double>{w});
}

std::vector<std::uint32_t> sequence(const lcv::InstanceSpec& inst, const PolicyConfig& pc, std::size_t horizon,
                                    std::uint64_t seed) {
  auto policy = lcv::make_policy(pc, inst, lcv::RngStream(seed, 1));
  return lcv::run_policy(inst, *policy, horizon, lcv::RngStream(seed, 0), {horizon, true}).arm_sequence;
}

TEST(PolicyConfig, WarmStartPlays) {
  PolicyConfig c = config(PolicyKind::kUcbLcv);
  EXPECT_EQ(c.warm_start_plays(), 5u);
  c.q = 3;
  EXPECT_EQ(c.warm_start_plays(), 7u);
  EXPECT_EQ(c.cv_threshold(), 5u);
  EXPECT_EQ(config(PolicyKind::kUcbNormal).warm_start_plays(), 5u);
  EXPECT_EQ(config(PolicyKind::kUcb1).warm_start_plays(), 1u);
  for (auto k : {PolicyKind::kUcb1Normal, PolicyKind::kKlUcb, PolicyKind::kUcbV, PolicyKind::kThompson}) {
    EXPECT_EQ(config(k).warm_start_plays(), 2u);
  }
}

TEST(PolicyConfig, ParseNames) {
  EXPECT_EQ(lcv::parse_policy_kind("kl_ucb"), PolicyKind::kKlUcb);
  EXPECT_FALSE(lcv::parse_policy_kind("klucb"));
  EXPECT_EQ(lcv::parse_estimator_variant("batching"), lcv::EstimatorVariant::kBatching);
  EXPECT_EQ(lcv::parse_routing("gated"), lcv::Routing::kGated);
  EXPECT_EQ(config(PolicyKind::kUcbV).label(), "ucb_v");
}

TEST(PolicyConfig, Validation) {
  PolicyConfig c = config(PolicyKind::kUcbLcv);
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), lcv::DomainError);
  c.alpha = 2.0;
  c.batch_count = 1;
  EXPECT_THROW(c.validate(), lcv::DomainError);
  EXPECT_THROW(lcv::UcbLcvPolicy(config(PolicyKind::kUcbLcv), omega(1)), lcv::DomainError);
  EXPECT_THROW(lcv::make_policy(config(PolicyKind::kUcbLcv), lcv::make_instance_1(10, 2), lcv::RngStream(1, 0)),
               lcv::DomainError);
}

TEST(Index, GoldenUcbLcv) {
  lcv::CombinedEstimate est;
  est.mu_hat = 1.0;
  est.nu_hat = 0.04;
  est.dof = 17;
  EXPECT_NEAR(lcv::ucb_lcv_index(est, 100, 2.0), 1.0 + oracle::t_quantile(1.0 - 1e-4, 17) * 0.2, 1e-9);
  est.nu_hat = 0.0;
  EXPECT_EQ(lcv::ucb_lcv_index(est, 100, 2.0), 1.0);
  est.dof = 0;
  EXPECT_THROW(lcv::ucb_lcv_index(est, 100, 2.0), lcv::WarmStartIncompleteError);
}

TEST(Index, UcbNormal) {
  const std::vector<double> r{1.0, 2.0, 3.0, 4.0};
  const double want = 2.5 + oracle::t_quantile(1.0 - 1.0 / 2500.0, 3) * std::sqrt(5.0 / 3.0 / 4.0);
  EXPECT_NEAR(lcv::ucb_normal_index(r, 50, 2.0), want, 1e-9);
  EXPECT_THROW(lcv::ucb_normal_index(std::vector<double>{1.0}, 50, 2.0), lcv::WarmStartIncompleteError);
}

lcv::RunningMoments moments(const std::vector<double>& v) {
  lcv::RunningMoments m;
  for (double x : v) m.add(x);
  return m;
}

TEST(Index, GoldenBaselines) {
  const auto m = moments({1.0, 2.0, 3.0, 4.0});
  const double l = std::log(100.0), v = 5.0 / 3.0;
  EXPECT_NEAR(lcv::baseline_index(PolicyKind::kUcb1, m, 100), 2.5 + std::sqrt(2 * l / 4), 1e-14);
  EXPECT_NEAR(lcv::baseline_index(PolicyKind::kUcb1Normal, m, 100), 2.5 + std::sqrt(16 * v * std::log(99.0) / 4),
              1e-13);
  EXPECT_NEAR(lcv::baseline_index(PolicyKind::kUcbV, m, 100, {0.5}),
              2.5 + std::sqrt(2 * 1.25 * l / 4) + 3 * 0.5 * l / 4, 1e-13);
  EXPECT_THROW(lcv::baseline_index(PolicyKind::kThompson, m, 100), lcv::DomainError);
  EXPECT_THROW(lcv::baseline_index(PolicyKind::kKlUcb, moments({1.0}), 100), lcv::WarmStartIncompleteError);
  EXPECT_THROW(lcv::baseline_index(PolicyKind::kUcbLcv, m, 100), lcv::DomainError);
}

// Largest q with s * KL(N(mean, v) || N(q, v)) <= ln t, found by bisection.
double kl_inversion(double mean, double v, double s, double t) {
  double lo = mean, hi = mean + 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double kl = (mid - mean) * (mid - mean) / (2.0 * v);
    (s * kl <= std::log(t) ? lo : hi) = mid;
  }
  return lo;
}

TEST(Index, KlUcbInvertsGaussianDivergence) {
  for (const auto& data : {std::vector<double>{1.0, 2.0, 3.0, 4.0}, std::vector<double>{0.3, 0.31, 0.29},
                           std::vector<double>{-5.0, 2.0}}) {
    const auto m = moments(data);
    const double v = m.m2 / static_cast<double>(m.count - 1);
    for (std::int64_t t : {3, 50, 10000}) {
      EXPECT_NEAR(lcv::baseline_index(PolicyKind::kKlUcb, m, t),
                  kl_inversion(m.mean, v, static_cast<double>(m.count), static_cast<double>(t)), 1e-10);
    }
  }
}

TEST(Index, ThompsonDrawsFromPosterior) {
  const auto m = moments({1.0, 2.0, 3.0, 4.0});
  lcv::RngStream rng(3, 0);
  double sum = 0, sum2 = 0;
  constexpr int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = lcv::baseline_index(PolicyKind::kThompson, m, 10, {}, &rng);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n, var = sum2 / n - mean * mean;
  const double want_var = 5.0 / 3.0 / 4.0;
  EXPECT_NEAR(mean, 2.5, 3 * std::sqrt(want_var / n));
  EXPECT_NEAR(var / want_var, 1.0, 0.01);
  EXPECT_EQ(lcv::baseline_index(PolicyKind::kThompson, moments({2.0, 2.0}), 10, {}, &rng), 2.0);
}

TEST(WarmStart, RoundRobinForEveryKind) {
  for (auto kind : {PolicyKind::kUcbLcv, PolicyKind::kUcbNormal, PolicyKind::kUcb1, PolicyKind::kUcb1Normal,
                    PolicyKind::kKlUcb, PolicyKind::kUcbV, PolicyKind::kThompson}) {
    const PolicyConfig pc = config(kind);
    auto p = lcv::make_policy(pc, omega(4), lcv::RngStream(5, 0));
    const std::size_t rounds = 4 * pc.warm_start_plays();
    for (std::size_t r = 0; r < rounds; ++r) {
      const std::size_t arm = p->select_arm();
      ASSERT_EQ(arm, r % 4) << lcv::to_string(kind);
      p->update(arm, with_cv(0.1 * static_cast<double>(r % 7), 0.5 + 0.01 * static_cast<double>(r % 3)));
    }
    for (std::size_t a = 0; a < 4; ++a) EXPECT_EQ(p->plays(a), pc.warm_start_plays());
    EXPECT_EQ(p->round(), static_cast<std::int64_t>(rounds) + 1);
  }
}

TEST(WarmStart, TiesGoToLowestArm) {
  for (auto kind : {PolicyKind::kUcbLcv, PolicyKind::kUcbNormal, PolicyKind::kUcb1, PolicyKind::kUcb1Normal,
                    PolicyKind::kKlUcb, PolicyKind::kUcbV}) {
    const PolicyConfig pc = config(kind);
    auto p = lcv::make_policy(pc, omega(3), lcv::RngStream(5, 0));
    for (std::size_t r = 0; r < 3 * pc.warm_start_plays(); ++r) {
      const std::size_t arm = p->select_arm();
      p->update(arm, plain(r / 3 % 2 == 0 ? 1.0 : 0.0));
    }
    EXPECT_EQ(p->select_arm(), 0u) << lcv::to_string(kind);
  }
}

TEST(UcbLcv, FiniteIndexAfterWarmStart) {
  const lcv::InstanceSpec inst = lcv::make_instance_1();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    lcv::UcbLcvPolicy p(config(PolicyKind::kUcbLcv), inst.omega_reported);
    lcv::RngStream env(seed, 0);
    for (std::size_t r = 0; r < 50; ++r) {
      const std::size_t arm = p.select_arm();
      p.update(arm, lcv::pull(inst, arm, env));
    }
    for (std::size_t a = 0; a < 10; ++a) EXPECT_TRUE(std::isfinite(p.index(a))) << seed << " arm " << a;
  }
}

TEST(UcbLcv, ForcedLambdaCases) {
  lcv::UcbLcvPolicy p(config(PolicyKind::kUcbLcv), omega(2));
  // Arm 0: three CV pairs, no plain rewards.
  p.update(0, with_cv(1.0, 0.4));
  EXPECT_FALSE(p.estimate(0));
  EXPECT_EQ(p.index(0), std::numeric_limits<double>::infinity());
  p.update(0, with_cv(1.3, 0.6));
  p.update(0, with_cv(1.0, 0.5));
  ASSERT_TRUE(p.estimate(0));
  EXPECT_EQ(p.estimate(0)->forced, lcv::Forced::kLambdaZero);
  EXPECT_EQ(p.estimate(0)->dof, 0);
  // Arm 1: two plain rewards, one pair.
  p.update(1, plain(0.2));
  p.update(1, plain(0.4));
  p.update(1, with_cv(0.3, 0.5));
  EXPECT_EQ(p.estimate(1)->forced, lcv::Forced::kLambdaOne);
  EXPECT_EQ(p.estimate(1)->dof, 1);
  EXPECT_DOUBLE_EQ(p.estimate(1)->mu_hat, 0.3);
  p.update(1, with_cv(0.5, 0.6));
  p.update(1, with_cv(0.1, 0.4));
  EXPECT_EQ(p.estimate(1)->forced, lcv::Forced::kNone);
  EXPECT_EQ(p.estimate(1)->dof, 2);
  const auto& h = p.history(1);
  EXPECT_EQ(h.N(), 2u);
  EXPECT_EQ(h.M(), 3u);
}

TEST(UcbLcv, IndexUsesCombinedEstimate) {
  lcv::UcbLcvPolicy p(config(PolicyKind::kUcbLcv), omega(2));
  const double xs[] = {0.9, 1.4, 1.1, 0.7, 1.2};
  const double ws[] = {0.45, 0.6, 0.52, 0.4, 0.55};
  for (int i = 0; i < 5; ++i) p.update(0, with_cv(xs[i], ws[i]));
  p.update(0, plain(1.05));
  p.update(0, plain(0.95));
  // Round is now 8.
  const auto o = oracle::cv_mean_ratio_form({0.9, 1.4, 1.1, 0.7, 1.2}, {0.45, 0.6, 0.52, 0.4, 0.55}, 0.5);
  const double a = 0.005 / 2.0;  // var(1.05, 0.95) / 2
  const double lambda = o.var / (a + o.var);
  const double mu = lambda * 1.0 + (1 - lambda) * o.mu;
  const double nu = a * o.var / (a + o.var);
  EXPECT_NEAR(p.index(0), mu + oracle::t_quantile(1.0 - 1.0 / 64.0, 4) * std::sqrt(nu), 1e-9);
}

TEST(UcbLcv, UcbNormalIgnoresCvs) {
  lcv::UcbLcvPolicy p(config(PolicyKind::kUcbNormal), omega(2));
  for (int i = 0; i < 6; ++i) p.update(0, with_cv(0.1 * i, 0.5));
  EXPECT_EQ(p.history(0).M(), 0u);
  EXPECT_EQ(p.history(0).N(), 6u);
  EXPECT_EQ(p.estimate(0)->forced, lcv::Forced::kLambdaOne);
}

TEST(Routing, GatedNeverReachesCvSide) {
  const lcv::InstanceSpec inst = lcv::make_instance_1();
  PolicyConfig gated = config(PolicyKind::kUcbLcv);
  gated.routing = lcv::Routing::kGated;
  lcv::UcbLcvPolicy p(gated, inst.omega_reported);
  lcv::RngStream env(11, 0);
  for (int r = 0; r < 2000; ++r) {
    const std::size_t arm = p.select_arm();
    p.update(arm, lcv::pull(inst, arm, env));
  }
  for (std::size_t a = 0; a < 10; ++a) EXPECT_EQ(p.history(a).M(), 0u);
  EXPECT_EQ(sequence(inst, gated, 2000, 11), sequence(inst, config(PolicyKind::kUcbNormal), 2000, 11));
}

TEST(Routing, AlwaysFilesEveryCvObservation) {
  const lcv::InstanceSpec inst = lcv::make_instance_1();
  lcv::UcbLcvPolicy p(config(PolicyKind::kUcbLcv), inst.omega_reported);
  lcv::RngStream env(12, 0);
  std::size_t cvs = 0;
  for (int r = 0; r < 1000; ++r) {
    const std::size_t arm = p.select_arm();
    const Observation obs = lcv::pull(inst, arm, env);
    cvs += obs.cv ? 1 : 0;
    p.update(arm, obs);
  }
  std::size_t m = 0;
  for (std::size_t a = 0; a < 10; ++a) m += p.history(a).M();
  EXPECT_EQ(m, cvs);
}

TEST(UcbLcv, NoCvAvailabilityMatchesUcbNormal) {
  const lcv::InstanceSpec inst = lcv::make_instance_3(0.0);
  EXPECT_EQ(sequence(inst, config(PolicyKind::kUcbLcv), 5000, 21),
            sequence(inst, config(PolicyKind::kUcbNormal), 5000, 21));
}

TEST(UcbLcv, FullCvAvailabilityMatchesReference) {
  const lcv::InstanceSpec inst = lcv::make_instance_3(1.0);
  EXPECT_EQ(sequence(inst, config(PolicyKind::kUcbLcv), 1500, 22), reference::ucb_cv_sequence(inst, 1500, lcv::RngStream(22, 0)));
}

TEST(UcbLcv, TranslationEquivariant) {
  const lcv::InstanceSpec inst = lcv::make_instance_1();
  lcv::InstanceSpec shifted = inst;
  for (auto& arm : shifted.arms) {
    arm.mu_w += 0.25;
  }
  for (auto& o : shifted.omega_reported) o[0] += 0.25;
  for (auto kind : {PolicyKind::kUcbLcv, PolicyKind::kUcbNormal}) {
    EXPECT_EQ(sequence(inst, config(kind), 3000, 31), sequence(shifted, config(kind), 3000, 31))
        << lcv::to_string(kind);
  }
}

TEST(UcbLcv, ResamplingVariantsRun) {
  const lcv::InstanceSpec inst = lcv::make_general_instances().normal;
  for (auto v : {lcv::EstimatorVariant::kJackknife, lcv::EstimatorVariant::kSplitting,
                 lcv::EstimatorVariant::kBatching}) {
    PolicyConfig pc = config(PolicyKind::kUcbLcv);
    pc.estimator_variant = v;
    lcv::UcbLcvPolicy p(pc, inst.omega_reported);
    lcv::RngStream env(41, 0);
    for (int r = 0; r < 1500; ++r) {
      const std::size_t arm = p.select_arm();
      p.update(arm, lcv::pull(inst, arm, env));
    }
    for (std::size_t a = 0; a < inst.num_arms(); ++a) EXPECT_TRUE(std::isfinite(p.index(a)));
  }
}

TEST(Baseline, Ucb1NormalForcedExploration) {
  lcv::BaselinePolicy p(config(PolicyKind::kUcb1Normal), 2, lcv::RngStream(1, 0));
  p.update(0, plain(1.0));
  p.update(1, plain(0.0));
  p.update(0, plain(1.2));
  p.update(1, plain(0.1));
  p.update(1, plain(0.1));
  // Round 6: ceil(8 ln 6) = 15 > 2 plays of arm 0.
  EXPECT_EQ(p.select_arm(), 0u);
}

TEST(Baseline, UcbVRangeFixedAfterWarmStart) {
  lcv::BaselinePolicy p(config(PolicyKind::kUcbV), 2, lcv::RngStream(1, 0));
  p.update(0, plain(1.0));
  p.update(1, plain(0.0));
  p.update(0, plain(3.0));
  p.update(1, plain(2.0));
  p.select_arm();
  EXPECT_DOUBLE_EQ(p.ucb_v_range(), 4.0 * std::sqrt(2.0));
  p.update(0, plain(100.0));
  p.select_arm();
  EXPECT_DOUBLE_EQ(p.ucb_v_range(), 4.0 * std::sqrt(2.0));

  PolicyConfig fixed = config(PolicyKind::kUcbV);
  fixed.ucb_v_range = 0.7;
  lcv::BaselinePolicy q(fixed, 2, lcv::RngStream(1, 0));
  EXPECT_DOUBLE_EQ(q.ucb_v_range(), 0.7);
}

TEST(Baseline, RejectsUcbLcvKind) {
  EXPECT_THROW(lcv::BaselinePolicy(config(PolicyKind::kUcbLcv), 2, lcv::RngStream(1, 0)), lcv::DomainError);
}

}  // namespace
