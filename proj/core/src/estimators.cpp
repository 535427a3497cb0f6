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

#include "safe_ope/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "safe_ope/errors.hpp"
#include "safe_ope/exact_dp.hpp"

namespace safe_ope {

void RunningStats::push(double x) {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double n = static_cast<double>(count_ + other.count_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.count_) / n;
  m2_ += other.m2_ + delta * delta * static_cast<double>(count_) *
                         static_cast<double>(other.count_) / n;
  count_ += other.count_;
}

double RunningStats::sample_variance() const {
  if (count_ < 2) return 0.0;
  return std::max(0.0, m2_ / static_cast<double>(count_ - 1));
}

namespace {

double step_ratio(const Step& step, std::size_t t, const TabularPolicy& target,
                  const TabularPolicy& behavior) {
  const double mu = behavior(t, step.state, step.action);
  if (mu == 0.0) {
    std::ostringstream msg;
    msg << "behavior probability is zero for the action taken at step t=" << t
        << " (s=" << step.state << ", a=" << step.action << ")";
    throw SupportError(msg.str());
  }
  return target(t, step.state, step.action) / mu;
}

}  // namespace

double pdis_return(const Trajectory& trajectory, const TabularPolicy& target,
                   const TabularPolicy& behavior, const PdisOptions& options) {
  const auto& steps = trajectory.steps;
  if (steps.size() != target.horizon() || steps.size() != behavior.horizon()) {
    throw ShapeError("trajectory length does not match policy horizon");
  }
  if (!options.log_space) {
    double g = 0.0;
    for (std::size_t t = steps.size(); t-- > 0;) {
      g = step_ratio(steps[t], t, target, behavior) * (steps[t].reward + g);
    }
    return g;
  }
  // Forward sum with the ratio product carried as a log; a zero target
  // probability ends all later contributions.
  double log_weight = 0.0;
  double g = 0.0;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const double ratio = step_ratio(steps[t], t, target, behavior);
    if (ratio == 0.0) break;
    log_weight += std::log(ratio);
    g += std::exp(log_weight) * steps[t].reward;
  }
  return g;
}

EvalResult evaluate(const Cmdp& model, const TabularPolicy& target,
                    const TabularPolicy& behavior, std::size_t episodes, Rng& rng,
                    const PdisOptions& options) {
  require_shape(model, target);
  require_shape(model, behavior);
  if (episodes == 0) throw ConfigError("episodes must be positive");
  RunningStats returns;
  double cost = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    const Trajectory traj = sample_trajectory(model, behavior, rng);
    returns.push(pdis_return(traj, target, behavior, options));
    cost += traj.total_cost();
  }
  EvalResult out;
  out.num_episodes = episodes;
  out.mean_return = returns.mean();
  out.sample_variance = returns.sample_variance();
  out.std_error = std::sqrt(out.sample_variance / static_cast<double>(episodes));
  out.mean_trajectory_cost = cost / static_cast<double>(episodes);
  return out;
}

ErrorCurves error_curve(const Cmdp& model, const TabularPolicy& target,
                        const TabularPolicy& behavior, std::size_t episodes, std::size_t runs,
                        const Rng& rng, const PdisOptions& options) {
  require_shape(model, target);
  require_shape(model, behavior);
  if (episodes == 0 || runs == 0) throw ConfigError("episodes and runs must be positive");
  ErrorCurves out;
  out.ground_truth = expected_return(model, target);
  out.runs.resize(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    Rng stream = rng.split(r);
    RunCurve& run = out.runs[r];
    run.abs_error.reserve(episodes);
    run.cum_cost.reserve(episodes);
    RunningStats returns;
    double cost = 0.0;
    for (std::size_t i = 0; i < episodes; ++i) {
      const Trajectory traj = sample_trajectory(model, behavior, stream);
      returns.push(pdis_return(traj, target, behavior, options));
      cost += traj.total_cost();
      run.abs_error.push_back(std::abs(returns.mean() - out.ground_truth));
      run.cum_cost.push_back(cost);
    }
    run.mean_return = returns.mean();
    run.sample_variance = returns.sample_variance();
    run.mean_cost = cost / static_cast<double>(episodes);
  }
  return out;
}

double first_episode_error(const ErrorCurves& curves) {
  double total = 0.0;
  for (const auto& run : curves.runs) total += run.abs_error.front();
  return total / static_cast<double>(curves.runs.size());
}

std::vector<double> mean_error_by_episode(const ErrorCurves& curves, double normalizer) {
  const std::size_t n = curves.runs.front().abs_error.size();
  std::vector<double> out(n, 0.0);
  for (const auto& run : curves.runs) {
    for (std::size_t i = 0; i < n; ++i) out[i] += run.abs_error[i];
  }
  const double scale = 1.0 / (static_cast<double>(curves.runs.size()) * normalizer);
  for (double& x : out) x *= scale;
  return out;
}

std::vector<double> error_at_budgets(const RunCurve& run, const std::vector<double>& budgets,
                                     double cost_scale) {
  std::vector<double> out(budgets.size());
  std::size_t episode = 0;  // episodes completed within the current budget
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    while (episode < run.cum_cost.size() && run.cum_cost[episode] / cost_scale <= budgets[i]) {
      ++episode;
    }
    out[i] = run.abs_error[episode == 0 ? 0 : episode - 1];
  }
  return out;
}

double first_budget_reaching(const std::vector<double>& budgets,
                             const std::vector<double>& errors, double target_error) {
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (errors[i] <= target_error) return budgets[i];
  }
  return -1.0;
}

}  // namespace safe_ope
