// Copyright 2026 The safe_ope Authors
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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "safe_ope/envs.hpp"
#include "safe_ope/errors.hpp"
#include "safe_ope/estimators.hpp"
#include "safe_ope/exact_dp.hpp"
#include "safe_ope/oracle.hpp"
#include "safe_ope/synthesis.hpp"
#include "test_models.hpp"

namespace safe_ope {
namespace {

// One state, two actions, horizon 2; target and behavior rows set per test.
struct TwoStep {
  Trajectory traj;
  TabularPolicy target = TabularPolicy::uniform(2, 1, 2);
  TabularPolicy behavior = TabularPolicy::uniform(2, 1, 2);
};

TwoStep ratios_two_and_half() {
  TwoStep x;
  x.traj.steps = {{0, 0, 1.0, 0.0}, {0, 1, 1.0, 0.0}};
  // step 0: 0.8 / 0.4 = 2; step 1: 0.25 / 0.5 = 0.5
  x.target(0, 0, 0) = 0.8;
  x.target(0, 0, 1) = 0.2;
  x.behavior(0, 0, 0) = 0.4;
  x.behavior(0, 0, 1) = 0.6;
  x.target(1, 0, 0) = 0.75;
  x.target(1, 0, 1) = 0.25;
  return x;
}

TEST(PdisReturn, HandEvaluatedExample) {
  const auto x = ratios_two_and_half();
  EXPECT_DOUBLE_EQ(pdis_return(x.traj, x.target, x.behavior), 3.0);
  EXPECT_NEAR(pdis_return(x.traj, x.target, x.behavior, {true}), 3.0, 1e-14);
}

TEST(PdisReturn, OnPolicyIsPlainReturn) {
  const Cmdp m = make_random_cmdp(3, 2, 5, 1);
  Rng rng(1);
  const auto pi = testing::random_policy(m, rng);
  for (int i = 0; i < 20; ++i) {
    const auto traj = sample_trajectory(m, pi, rng);
    EXPECT_NEAR(pdis_return(traj, pi, pi), traj.total_reward(), 1e-12);
  }
}

TEST(PdisReturn, ZeroRewardsGiveZero) {
  auto x = ratios_two_and_half();
  for (auto& s : x.traj.steps) s.reward = 0.0;
  EXPECT_EQ(pdis_return(x.traj, x.target, x.behavior), 0.0);
}

TEST(PdisReturn, ZeroBehaviorProbabilityNamesStep) {
  auto x = ratios_two_and_half();
  x.behavior(1, 0, 0) = 1.0;
  x.behavior(1, 0, 1) = 0.0;
  try {
    pdis_return(x.traj, x.target, x.behavior);
    FAIL() << "expected SupportError";
  } catch (const SupportError& e) {
    EXPECT_NE(std::string(e.what()).find("t=1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(pdis_return(x.traj, x.target, x.behavior, {true}), SupportError);
}

TEST(PdisReturn, RejectsLengthMismatch) {
  auto x = ratios_two_and_half();
  x.traj.steps.pop_back();
  EXPECT_THROW(pdis_return(x.traj, x.target, x.behavior), ShapeError);
}

TEST(PdisReturn, LogSpaceMatchesPlainProduct) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Cmdp m = testing::random_small_model(seed);
    Rng rng(seed);
    const auto pi = testing::random_policy(m, rng);
    const auto mu = testing::random_policy(m, rng);
    for (int i = 0; i < 50; ++i) {
      const auto traj = sample_trajectory(m, mu, rng);
      const double plain = pdis_return(traj, pi, mu);
      EXPECT_NEAR(pdis_return(traj, pi, mu, {true}), plain, 1e-12 * std::max(1.0, std::abs(plain)));
    }
  }
}

TEST(PdisReturn, LogSpaceHandlesZeroTargetProbability) {
  auto x = ratios_two_and_half();
  x.target(0, 0, 0) = 0.0;
  x.target(0, 0, 1) = 1.0;
  EXPECT_EQ(pdis_return(x.traj, x.target, x.behavior), 0.0);
  EXPECT_EQ(pdis_return(x.traj, x.target, x.behavior, {true}), 0.0);
}

TEST(RunningStats, MatchesTwoPass) {
  Rng rng(3);
  std::vector<double> xs(10000);
  for (double& x : xs) x = 1e3 + rng.uniform(-5.0, 5.0) + rng.exponential();
  RunningStats stats;
  for (double x : xs) stats.push(x);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  EXPECT_NEAR(stats.mean(), mean, 1e-10 * std::abs(mean));
  EXPECT_NEAR(stats.sample_variance(), var, 1e-10 * var);
  EXPECT_EQ(stats.count(), xs.size());
}

TEST(RunningStats, MergeEqualsSequential) {
  Rng rng(4);
  RunningStats all, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform();
    all.push(x);
    (i < 300 ? left : right).push(x);
  }
  left.merge(right);
  EXPECT_EQ(left.count(), all.count());
  EXPECT_NEAR(left.mean(), all.mean(), 1e-14);
  EXPECT_NEAR(left.sample_variance(), all.sample_variance(), 1e-13);
  RunningStats empty;
  empty.merge(all);
  EXPECT_EQ(empty.mean(), all.mean());
}

TEST(RunningStats, FewerThanTwoSamples) {
  RunningStats s;
  EXPECT_EQ(s.sample_variance(), 0.0);
  s.push(5.0);
  EXPECT_EQ(s.mean(), 5.0);
  EXPECT_EQ(s.sample_variance(), 0.0);
}

TEST(Evaluate, DeterministicModelHasZeroVariance) {
  const Cmdp m = testing::deterministic_model(3, 2, 4, 5);
  const auto pi = testing::deterministic_policy(m);
  Rng rng(0);
  for (std::size_t n : {1u, 2u, 50u}) {
    const auto r = evaluate(m, pi, pi, n, rng);
    EXPECT_EQ(r.sample_variance, 0.0);
    EXPECT_NEAR(r.mean_return, expected_return(m, pi), 1e-12);
    EXPECT_EQ(r.num_episodes, n);
  }
}

TEST(Evaluate, StdErrorInvariant) {
  const Cmdp m = make_random_cmdp(3, 2, 3, 6);
  Rng rng(1);
  const auto r = evaluate(m, TabularPolicy::uniform(m), TabularPolicy::uniform(m), 500, rng);
  EXPECT_GE(r.sample_variance, 0.0);
  EXPECT_DOUBLE_EQ(r.std_error, std::sqrt(r.sample_variance / 500.0));
  EXPECT_THROW(evaluate(m, TabularPolicy::uniform(m), TabularPolicy::uniform(m), 0, rng),
               ConfigError);
}

TEST(Evaluate, ScopeBehaviorIsUnbiasedWithinThreeStdErrors) {
  const Cmdp m = make_random_cmdp(3, 2, 3, 7);
  const auto pi = make_target_policies(m, 1, 2)[0];
  const auto mu = synthesize_scope(m, pi);
  Rng rng(8);
  const auto r = evaluate(m, pi, mu, 10000, rng);
  EXPECT_LE(std::abs(r.mean_return - oracle::exact_moments(m, pi, mu).mean), 3.0 * r.std_error);
}

// Property: under behaviors in the enlarged set the mean lands within 4
// standard errors of J(pi) in at least 99% of seeds.
TEST(Evaluate, ConvergesToTargetValueAcrossSeeds) {
  const Cmdp m = make_random_cmdp(3, 2, 3, 9);
  Rng prng(1);
  const auto pi = testing::random_policy(m, prng);
  const auto mu = testing::random_policy(m, prng);
  const double truth = expected_return(m, pi);
  int misses = 0;
  const int seeds = 100;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    const auto r = evaluate(m, pi, mu, 10000, rng);
    if (std::abs(r.mean_return - truth) > 4.0 * r.std_error) ++misses;
  }
  EXPECT_LE(misses, 1);
}

TEST(Evaluate, CostConvergesToBehaviorCost) {
  const Cmdp m = make_random_cmdp(3, 2, 3, 10);
  const auto pi = TabularPolicy::uniform(m);
  // Behavior that prefers the costlier action everywhere.
  TabularPolicy mu = pi;
  for (std::size_t t = 0; t < m.horizon; ++t) {
    for (std::size_t s = 0; s < m.num_states; ++s) {
      const std::size_t hi = m.cost(s, 0) > m.cost(s, 1) ? 0 : 1;
      mu(t, s, hi) = 0.9;
      mu(t, s, 1 - hi) = 0.1;
    }
  }
  Rng rng(2);
  const std::size_t n = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = sample_trajectory(m, mu, rng).total_cost();
    sum += c;
    sum2 += c * c;
  }
  const double se = std::sqrt((sum2 / n - (sum / n) * (sum / n)) / n);
  Rng rng2(2);
  const auto r = evaluate(m, pi, mu, n, rng2);
  EXPECT_NEAR(r.mean_trajectory_cost, sum / n, 1e-12);
  EXPECT_LE(std::abs(r.mean_trajectory_cost - expected_cost(m, mu)), 4.0 * se);
  // Distinguishable from the target's cost at this sample size.
  EXPECT_GT(std::abs(expected_cost(m, mu) - expected_cost(m, pi)), 4.0 * se);
}

TEST(ErrorCurve, OnPolicyNormalizedCurveStartsAtOne) {
  const Cmdp m = make_random_cmdp(3, 2, 3, 11);
  const auto pi = TabularPolicy::uniform(m);
  const auto curves = error_curve(m, pi, pi, 20, 7, Rng(3));
  ASSERT_EQ(curves.runs.size(), 7u);
  const double norm = first_episode_error(curves);
  const auto mean = mean_error_by_episode(curves, norm);
  ASSERT_EQ(mean.size(), 20u);
  EXPECT_NEAR(mean.front(), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(curves.ground_truth, expected_return(m, pi));
}

TEST(ErrorCurve, DeterministicModelHasZeroError) {
  const Cmdp m = testing::deterministic_model(4, 2, 3, 12);
  const auto pi = testing::deterministic_policy(m);
  const auto curves = error_curve(m, pi, pi, 5, 3, Rng(0));
  for (const auto& run : curves.runs) {
    for (double e : run.abs_error) EXPECT_NEAR(e, 0.0, 1e-12);
  }
}

TEST(ErrorCurve, RunsMatchIndependentEvaluate) {
  const Cmdp m = make_random_cmdp(3, 2, 3, 13);
  const auto pi = TabularPolicy::uniform(m);
  const Rng base(42);
  const auto curves = error_curve(m, pi, pi, 30, 4, base);
  for (std::size_t r = 0; r < 4; ++r) {
    Rng stream = base.split(r);
    const auto e = evaluate(m, pi, pi, 30, stream);
    EXPECT_NEAR(curves.runs[r].mean_return, e.mean_return, 1e-14);
    EXPECT_NEAR(curves.runs[r].mean_cost, e.mean_trajectory_cost, 1e-14);
    EXPECT_NEAR(curves.runs[r].cum_cost.back(), 30.0 * e.mean_trajectory_cost, 1e-11);
    EXPECT_NEAR(curves.runs[r].abs_error.back(), std::abs(e.mean_return - curves.ground_truth),
                1e-14);
  }
  // Cumulative costs never decrease.
  for (const auto& run : curves.runs) {
    for (std::size_t i = 1; i < run.cum_cost.size(); ++i) {
      EXPECT_GE(run.cum_cost[i], run.cum_cost[i - 1]);
    }
  }
}

TEST(ErrorCurve, RejectsEmptyRequests) {
  const Cmdp m = make_random_cmdp(2, 2, 2, 14);
  const auto pi = TabularPolicy::uniform(m);
  EXPECT_THROW(error_curve(m, pi, pi, 0, 1, Rng(0)), ConfigError);
  EXPECT_THROW(error_curve(m, pi, pi, 1, 0, Rng(0)), ConfigError);
}

TEST(ErrorAtBudgets, StepFunctionLookup) {
  RunCurve run;
  run.abs_error = {0.9, 0.5, 0.2};
  run.cum_cost = {1.0, 3.0, 6.0};
  const std::vector<double> budgets = {0.5, 1.0, 2.0, 3.0, 5.9, 6.0, 100.0};
  EXPECT_EQ(error_at_budgets(run, budgets),
            (std::vector<double>{0.9, 0.9, 0.9, 0.5, 0.5, 0.2, 0.2}));
  // Scaled costs are 0.5, 1.5, 3.
  EXPECT_EQ(error_at_budgets(run, {1.0, 1.5, 3.0}, 2.0), (std::vector<double>{0.9, 0.5, 0.2}));
  EXPECT_EQ(first_budget_reaching(budgets, error_at_budgets(run, budgets), 0.5), 3.0);
  EXPECT_EQ(first_budget_reaching(budgets, error_at_budgets(run, budgets), 0.1), -1.0);
}

}  // namespace
}  // namespace safe_ope
