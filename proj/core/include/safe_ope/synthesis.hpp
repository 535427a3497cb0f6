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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "safe_ope/cmdp.hpp"
#include "safe_ope/tensor.hpp"

namespace safe_ope {

struct SafetyConfig {
  double epsilon = 0.0;
};

struct SolverConfig {
  double dual_tolerance = 1e-10;
  int max_bisection_iters = 200;
  double constraint_slack_tolerance = 1e-9;
};

void validate(const SafetyConfig& config);
void validate(const SolverConfig& config);

/// One per-state program
///
///   minimize    sum_{a : mu_a > 0} weights_a / mu_a
///   subject to  mu in the simplex, mu_a > 0 where must_support,
///               sum_a mu_a * action_costs_a <= threshold.
///
/// `target` is the target policy's row; it is the feasible point that
/// certifies the program and the answer when every weight is zero.
struct StateProblem {
  std::vector<double> weights;
  std::vector<double> action_costs;
  double threshold = 0.0;
  std::vector<bool> must_support;
  std::vector<double> target;
};

/// Builds the program at one (t, s): weights pi^2 * max(r~, 0), must_support
/// where |pi * q| exceeds kZeroTolerance.
StateProblem make_state_problem(std::span<const double> target_row,
                                std::span<const double> r_tilde_row,
                                std::span<const double> q_row,
                                std::span<const double> q_cost_row, double threshold);

/// Invariant violations, including infeasibility of the target row beyond
/// `slack` and must_support actions that carry zero weight.
std::vector<std::string> validate_state_problem(const StateProblem& problem, double slack);

inline constexpr std::size_t kNoAction = std::numeric_limits<std::size_t>::max();

struct StateSolution {
  std::vector<double> probs;
  double objective = 0.0;
  double lambda = 0.0;  // constraint multiplier
  double nu = 0.0;      // simplex multiplier
  std::size_t sink_action = kNoAction;  // zero-weight action holding mass, if any
  int outer_iterations = 0;
  int inner_iterations = 0;
  double constraint_value = 0.0;
  double constraint_slack = 0.0;  // threshold - constraint_value
  double stationarity_residual = 0.0;
  double complementary_slackness = 0.0;
  double dual_bound = 0.0;
  double duality_gap = 0.0;
};

/// sum_{a : mu_a > 0} weights_a / mu_a.
double state_objective(std::span<const double> weights, std::span<const double> probs);

/// Exact KKT solve by two-level dual bisection.
///
/// For a fixed constraint multiplier lambda the stationary point is
/// mu_a = sqrt(w_a / (nu + lambda * c_a)) on positive-weight actions, with nu
/// found by an inner bisection on the simplex equation. Zero-weight actions take
/// mass only as a cost sink: the cheapest one (lowest index on ties) absorbs the
/// remainder when nu + lambda * c_sink hits zero. The constraint value is
/// non-increasing in lambda, so an outer bisection finds the multiplier.
StateSolution solve_state_problem(const StateProblem& problem, const SolverConfig& config = {});

/// Unconstrained optimum mu_a proportional to sqrt(w_a); the target row when all
/// weights vanish.
std::vector<double> solve_unconstrained(std::span<const double> weights,
                                        std::span<const double> target_row);

/// delta(t, s) = (1 + epsilon) * v^c_pi(t, s).
Array2 safety_threshold(const Array2& v_cost_target, const SafetyConfig& config);

/// Where the constraint's action costs come from.
enum class ConstraintCosts {
  kSynthesizedFuture,  // q^c under the already-synthesized future behavior
  kTargetFuture,       // q^c under the target policy
};

/// Supplies values to the backward synthesis loop, either exactly from a
/// model or estimated from offline data.
class ValueSource {
 public:
  virtual ~ValueSource() = default;

  virtual std::size_t horizon() const = 0;
  virtual std::size_t num_states() const = 0;
  virtual std::size_t num_actions() const = 0;

  virtual const Array3& target_q() const = 0;
  virtual const Array3& target_cost_q() const = 0;
  virtual const Array2& target_cost_v() const = 0;

  /// Writes r~(t, ., .) given r~(t + 1, ., .) and the future behavior's rows at t + 1.
  virtual void extended_reward_step(const TabularPolicy& target,
                                    const TabularPolicy& future_behavior, std::size_t t,
                                    Array3& r_tilde) const = 0;

  /// Writes q^c(t, s, a) = c(s, a) + E[v_cost(t + 1, S')].
  virtual void cost_q_step(std::size_t t, const Array2& v_cost_future, Array3& q_cost) const = 0;

  /// False when the values at (t, s) are not trustworthy enough to deviate from
  /// the target row.
  virtual bool state_supported(std::size_t /*t*/, std::size_t /*s*/,
                               std::span<const double> /*target_row*/) const {
    return true;
  }
};

class ExactValueSource final : public ValueSource {
 public:
  ExactValueSource(const Cmdp& model, const TabularPolicy& target);

  std::size_t horizon() const override { return model_.horizon; }
  std::size_t num_states() const override { return model_.num_states; }
  std::size_t num_actions() const override { return model_.num_actions; }

  const Array3& target_q() const override { return q_; }
  const Array3& target_cost_q() const override { return q_cost_; }
  const Array2& target_cost_v() const override { return v_cost_; }

  void extended_reward_step(const TabularPolicy& target, const TabularPolicy& future_behavior,
                            std::size_t t, Array3& r_tilde) const override;
  void cost_q_step(std::size_t t, const Array2& v_cost_future, Array3& q_cost) const override;

 private:
  const Cmdp& model_;
  Array3 q_;
  Array3 q_cost_;
  Array2 v_cost_;
};

struct SynthesisOptions {
  SafetyConfig safety;
  SolverConfig solver;
  ConstraintCosts constraint_costs = ConstraintCosts::kSynthesizedFuture;
  bool constrained = true;  // false gives the unconstrained (ODI) policy
};

struct StateDiagnostics {
  std::size_t t = 0;
  std::size_t s = 0;
  bool fallback = false;  // target row used because the source did not support (t, s)
  double threshold = 0.0;
  StateSolution solution;
};

struct SynthesisResult {
  TabularPolicy policy;
  Array3 r_tilde;  // under the synthesized future
  Array3 q_cost;   // constraint costs actually used
  Array2 v_cost;   // cost values of the synthesized policy under those costs
  Array2 threshold;
  std::vector<StateDiagnostics> diagnostics;  // (t, s) in row-major order
};

/// Backward loop t = T-1 .. 0: extended reward from the synthesized future, then
/// constraint costs, then one program per state.
SynthesisResult synthesize(const ValueSource& source, const TabularPolicy& target,
                           const SynthesisOptions& options);

TabularPolicy synthesize_scope(const Cmdp& model, const TabularPolicy& target,
                               const SafetyConfig& safety = {}, const SolverConfig& solver = {});

TabularPolicy synthesize_odi(const Cmdp& model, const TabularPolicy& target);

}  // namespace safe_ope
