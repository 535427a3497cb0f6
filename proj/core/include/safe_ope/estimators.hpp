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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "safe_ope/cmdp.hpp"
#include "safe_ope/rng.hpp"

namespace safe_ope {

/// Welford single-pass mean and variance.
class RunningStats {
 public:
  void push(double x);
  void merge(const RunningStats& other);

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; zero with fewer than two samples.
  double sample_variance() const;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct PdisOptions {
  /// Accumulate ratio products as sums of logs; for long horizons where the
  /// plain product could overflow or underflow.
  bool log_space = false;
};

/// sum_k rho_{0:k} R_{k+1}, evaluated backward as G = rho_t (R_{t+1} + G).
/// Throws SupportError naming the step if the behavior never takes the action.
double pdis_return(const Trajectory& trajectory, const TabularPolicy& target,
                   const TabularPolicy& behavior, const PdisOptions& options = {});

struct EvalResult {
  double mean_return = 0.0;
  double sample_variance = 0.0;
  double std_error = 0.0;
  double mean_trajectory_cost = 0.0;
  std::size_t num_episodes = 0;
};

/// Runs `episodes` trajectories under `behavior` and aggregates PDIS returns and
/// the raw (unweighted) executed cost.
EvalResult evaluate(const Cmdp& model, const TabularPolicy& target,
                    const TabularPolicy& behavior, std::size_t episodes, Rng& rng,
                    const PdisOptions& options = {});

/// One independent run of an estimator.
struct RunCurve {
  std::vector<double> abs_error;  // |running mean - truth| after each episode
  std::vector<double> cum_cost;   // executed cost after each episode
  double mean_return = 0.0;
  double sample_variance = 0.0;
  double mean_cost = 0.0;
};

struct ErrorCurves {
  double ground_truth = 0.0;
  std::vector<RunCurve> runs;
};

/// Run r draws from rng.split(r), so runs are independent of each other and of
/// the order in which they execute. Ground truth is the exact J(target).
ErrorCurves error_curve(const Cmdp& model, const TabularPolicy& target,
                        const TabularPolicy& behavior, std::size_t episodes, std::size_t runs,
                        const Rng& rng, const PdisOptions& options = {});

/// Run-averaged absolute error after the first episode; the normalizer for
/// every curve of the same target policy when `curves` is the on-policy run set.
double first_episode_error(const ErrorCurves& curves);

/// Run-averaged |error| per episode, divided by `normalizer`.
std::vector<double> mean_error_by_episode(const ErrorCurves& curves, double normalizer);

/// Error held constant between episode completions, sampled on `budgets`.
/// `cost_scale` divides the executed cost before lookup. Budgets below the first
/// episode's cost see the first episode's error.
std::vector<double> error_at_budgets(const RunCurve& run, const std::vector<double>& budgets,
                                     double cost_scale = 1.0);

/// First budget whose error is at or below `target_error`; negative if none.
double first_budget_reaching(const std::vector<double>& budgets,
                             const std::vector<double>& errors, double target_error);

}  // namespace safe_ope
