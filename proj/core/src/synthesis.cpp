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

#include "safe_ope/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "safe_ope/errors.hpp"
#include "safe_ope/exact_dp.hpp"

namespace safe_ope {

void validate(const SafetyConfig& config) {
  if (!(config.epsilon >= 0.0) || !std::isfinite(config.epsilon)) {
    throw ConfigError("epsilon must be a finite nonnegative number");
  }
}

void validate(const SolverConfig& config) {
  if (!(config.dual_tolerance > 0.0)) throw ConfigError("dual_tolerance must be positive");
  if (config.max_bisection_iters <= 0) throw ConfigError("max_bisection_iters must be positive");
  if (!(config.constraint_slack_tolerance > 0.0)) {
    throw ConfigError("constraint_slack_tolerance must be positive");
  }
}

StateProblem make_state_problem(std::span<const double> target_row,
                                std::span<const double> r_tilde_row,
                                std::span<const double> q_row,
                                std::span<const double> q_cost_row, double threshold) {
  const std::size_t A = target_row.size();
  StateProblem p;
  p.weights.resize(A);
  p.must_support.resize(A);
  p.action_costs.assign(q_cost_row.begin(), q_cost_row.end());
  p.target.assign(target_row.begin(), target_row.end());
  p.threshold = threshold;
  for (std::size_t a = 0; a < A; ++a) {
    p.weights[a] = target_row[a] * target_row[a] * std::max(r_tilde_row[a], 0.0);
    p.must_support[a] = std::abs(target_row[a] * q_row[a]) > kZeroTolerance;
  }
  return p;
}

std::vector<std::string> validate_state_problem(const StateProblem& p, double slack) {
  std::vector<std::string> out;
  const std::size_t A = p.weights.size();
  if (A == 0) {
    out.emplace_back("state problem has no actions");
    return out;
  }
  if (p.action_costs.size() != A || p.must_support.size() != A || p.target.size() != A) {
    out.emplace_back("state problem vectors differ in length");
    return out;
  }
  double mass = 0.0;
  double target_cost = 0.0;
  for (std::size_t a = 0; a < A; ++a) {
    if (!(p.weights[a] >= 0.0) || !std::isfinite(p.weights[a])) {
      out.push_back("weight " + std::to_string(a) + " is negative or non-finite");
    }
    if (!(p.action_costs[a] >= 0.0) || !std::isfinite(p.action_costs[a])) {
      out.push_back("action cost " + std::to_string(a) + " is negative or non-finite");
    }
    if (!(p.target[a] >= 0.0)) out.push_back("target entry " + std::to_string(a) + " is negative");
    if (p.must_support[a] && !(p.weights[a] > 0.0)) {
      out.push_back("action " + std::to_string(a) +
                    " must be supported but has zero weight (inconsistent values)");
    }
    if (p.weights[a] > 0.0 && p.target[a] == 0.0) {
      out.push_back("action " + std::to_string(a) + " has positive weight outside target support");
    }
    mass += p.target[a];
    target_cost += p.target[a] * p.action_costs[a];
  }
  if (!(p.threshold >= 0.0) || !std::isfinite(p.threshold)) {
    out.emplace_back("threshold is negative or non-finite");
  }
  if (std::abs(mass - 1.0) > 1e-12) out.emplace_back("target row is not a distribution");
  if (target_cost > p.threshold + slack) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "infeasible: target row cost " << target_cost << " exceeds threshold " << p.threshold;
    out.push_back(msg.str());
  }
  return out;
}

double state_objective(std::span<const double> weights, std::span<const double> probs) {
  double total = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    if (probs[a] > 0.0) total += weights[a] / probs[a];
  }
  return total;
}

std::vector<double> solve_unconstrained(std::span<const double> weights,
                                        std::span<const double> target_row) {
  std::vector<double> mu(weights.size());
  double total = 0.0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    mu[a] = std::sqrt(weights[a]);
    total += mu[a];
  }
  if (!(total > 0.0)) return {target_row.begin(), target_row.end()};
  for (double& m : mu) m /= total;
  return mu;
}

namespace {

// The stationary family mu(lambda) of one problem.
class DualFamily {
 public:
  DualFamily(const StateProblem& p, int max_iters) : p_(p), max_iters_(max_iters) {
    base_cost_ = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < p.weights.size(); ++a) {
      if (p.weights[a] > 0.0) {
        positive_.push_back(a);
        base_cost_ = std::min(base_cost_, p.action_costs[a]);
        root_sum_ += std::sqrt(p.weights[a]);
      }
    }
    double best = base_cost_;
    for (std::size_t a = 0; a < p.weights.size(); ++a) {
      if (p.weights[a] == 0.0 && p.action_costs[a] < best) {
        best = p.action_costs[a];
        sink_ = a;
      }
    }
  }

  bool empty() const { return positive_.empty(); }

  struct Point {
    std::vector<double> mu;
    double lambda = 0.0;
    double nu = 0.0;
    double constraint = 0.0;
    double sink_mass = 0.0;
    int iterations = 0;
  };

  Point at(double lambda) const {
    Point pt;
    pt.lambda = lambda;
    if (lambda == 0.0) {
      // Closed form, computed exactly as solve_unconstrained does.
      pt.mu = solve_unconstrained(p_.weights, p_.target);
      pt.nu = root_sum_ * root_sum_;
      for (std::size_t a = 0; a < pt.mu.size(); ++a) pt.constraint += pt.mu[a] * p_.action_costs[a];
      return pt;
    }
    // Shift u = nu + lambda * base_cost > 0; the simplex sum S(u) is decreasing.
    auto simplex_sum = [&](double u) {
      double total = 0.0;
      for (std::size_t a : positive_) {
        total += std::sqrt(p_.weights[a] / (u + lambda * (p_.action_costs[a] - base_cost_)));
      }
      return total;
    };
    double lo = 0.0;
    double u;
    if (sink_ != kNoAction && lambda > 0.0) {
      lo = lambda * (base_cost_ - p_.action_costs[sink_]);
    }
    const double at_lo = lo > 0.0 ? simplex_sum(lo) : std::numeric_limits<double>::infinity();
    if (at_lo <= 1.0) {
      u = lo;
      pt.sink_mass = 1.0 - at_lo;
    } else {
      double hi = root_sum_ * root_sum_;  // simplex_sum(hi) <= 1
      while (pt.iterations < max_iters_) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ++pt.iterations;
        if (simplex_sum(mid) > 1.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      u = hi;
    }
    pt.nu = u - lambda * base_cost_;
    pt.mu.assign(p_.weights.size(), 0.0);
    double total = pt.sink_mass;
    for (std::size_t a : positive_) {
      pt.mu[a] = std::sqrt(p_.weights[a] / (u + lambda * (p_.action_costs[a] - base_cost_)));
      total += pt.mu[a];
    }
    if (pt.sink_mass > 0.0) pt.mu[sink_] = pt.sink_mass;
    for (double& m : pt.mu) m /= total;
    pt.constraint = 0.0;
    for (std::size_t a = 0; a < pt.mu.size(); ++a) pt.constraint += pt.mu[a] * p_.action_costs[a];
    return pt;
  }

  std::size_t sink() const { return sink_; }

 private:
  const StateProblem& p_;
  int max_iters_;
  std::vector<std::size_t> positive_;
  double base_cost_ = 0.0;
  double root_sum_ = 0.0;
  std::size_t sink_ = kNoAction;
};

void fill_certificates(const StateProblem& p, StateSolution& sol) {
  sol.objective = state_objective(p.weights, sol.probs);
  sol.constraint_value = 0.0;
  for (std::size_t a = 0; a < sol.probs.size(); ++a) {
    sol.constraint_value += sol.probs[a] * p.action_costs[a];
  }
  sol.constraint_slack = p.threshold - sol.constraint_value;
  sol.complementary_slackness = sol.lambda * std::abs(sol.constraint_slack);

  double stationarity = 0.0;
  double dual = -sol.nu - sol.lambda * p.threshold;
  bool any_positive = false;
  for (std::size_t a = 0; a < p.weights.size(); ++a) {
    if (!(p.weights[a] > 0.0)) continue;
    any_positive = true;
    const double scale = sol.nu + sol.lambda * p.action_costs[a];
    const double m = sol.probs[a];
    stationarity = std::max(stationarity, std::abs(m * m * scale / p.weights[a] - 1.0));
    dual += 2.0 * std::sqrt(p.weights[a] * std::max(scale, 0.0));
  }
  if (!any_positive) {
    sol.stationarity_residual = 0.0;
    sol.dual_bound = 0.0;
    sol.duality_gap = 0.0;
    return;
  }
  sol.stationarity_residual = stationarity;
  sol.dual_bound = dual;
  sol.duality_gap = sol.objective - dual;
}

}  // namespace

StateSolution solve_state_problem(const StateProblem& problem, const SolverConfig& config) {
  validate(config);
  const auto violations = validate_state_problem(problem, config.constraint_slack_tolerance);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << "invalid state problem:";
    for (const auto& v : violations) msg << " " << v << ";";
    throw SolverError(msg.str());
  }

  StateSolution sol;
  DualFamily family(problem, config.max_bisection_iters);
  if (family.empty()) {
    sol.probs = problem.target;
    fill_certificates(problem, sol);
    return sol;
  }

  const double delta = problem.threshold;
  // Roundoff allowance when accepting the unconstrained point.
  const double accept = delta + 1e-15 * std::max(1.0, std::abs(delta));

  auto finish = [&](const DualFamily::Point& pt) {
    sol.probs = pt.mu;
    sol.lambda = pt.lambda;
    sol.nu = pt.nu;
    sol.inner_iterations += pt.iterations;
    if (pt.sink_mass > 0.0) sol.sink_action = family.sink();
    fill_certificates(problem, sol);
    if (sol.constraint_value > delta + config.constraint_slack_tolerance) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "solver ended infeasible: constraint " << sol.constraint_value << " > threshold "
          << delta;
      throw SolverError(msg.str());
    }
    return sol;
  };

  auto free_point = family.at(0.0);
  sol.inner_iterations += free_point.iterations;
  if (free_point.constraint <= accept) return finish(free_point);

  // Bracket the multiplier.
  double lo = 0.0;
  double hi = 1.0;
  auto hi_point = family.at(hi);
  sol.inner_iterations += hi_point.iterations;
  int doublings = 0;
  while (hi_point.constraint > delta) {
    if (++doublings > config.max_bisection_iters) break;
    lo = hi;
    hi *= 2.0;
    hi_point = family.at(hi);
    sol.inner_iterations += hi_point.iterations;
  }
  sol.outer_iterations = doublings;

  while (sol.outer_iterations < config.max_bisection_iters &&
         hi - lo > config.dual_tolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ++sol.outer_iterations;
    auto mid_point = family.at(mid);
    sol.inner_iterations += mid_point.iterations;
    if (mid_point.constraint > delta) {
      lo = mid;
    } else {
      hi = mid;
      hi_point = std::move(mid_point);
    }
  }
  sol.inner_iterations -= hi_point.iterations;  // counted again in finish
  return finish(hi_point);
}

Array2 safety_threshold(const Array2& v_cost_target, const SafetyConfig& config) {
  validate(config);
  Array2 delta(v_cost_target.rows(), v_cost_target.cols());
  for (std::size_t i = 0; i < delta.data().size(); ++i) {
    delta.data()[i] = (1.0 + config.epsilon) * v_cost_target.data()[i];
  }
  return delta;
}

ExactValueSource::ExactValueSource(const Cmdp& model, const TabularPolicy& target)
    : model_(model) {
  require_valid(model);
  require_valid(model, target);
  auto rewards = reward_values(model, target);
  auto costs = cost_values(model, target);
  q_ = std::move(rewards.q);
  q_cost_ = std::move(costs.q);
  v_cost_ = std::move(costs.v);
}

void ExactValueSource::extended_reward_step(const TabularPolicy& target,
                                            const TabularPolicy& future_behavior, std::size_t t,
                                            Array3& r_tilde) const {
  safe_ope::extended_reward_step(model_, target, future_behavior, q_, t, r_tilde);
}

void ExactValueSource::cost_q_step(std::size_t t, const Array2& v_cost_future,
                                   Array3& q_cost) const {
  const std::size_t S = model_.num_states, A = model_.num_actions;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      double value = model_.cost(s, a);
      if (t + 1 < model_.horizon) {
        const auto probs = model_.next_state_probs(s, a);
        for (std::size_t sn = 0; sn < S; ++sn) {
          if (probs[sn] != 0.0) value += probs[sn] * v_cost_future(t + 1, sn);
        }
      }
      q_cost(t, s, a) = value;
    }
  }
}

SynthesisResult synthesize(const ValueSource& source, const TabularPolicy& target,
                           const SynthesisOptions& options) {
  validate(options.safety);
  validate(options.solver);
  const std::size_t T = source.horizon(), S = source.num_states(), A = source.num_actions();
  if (target.horizon() != T || target.num_states() != S || target.num_actions() != A) {
    throw ShapeError("target policy shape does not match the value source");
  }

  SynthesisResult out;
  out.policy = target;
  out.r_tilde = Array3(T, S, A);
  out.q_cost = Array3(T, S, A);
  out.v_cost = Array2(T, S);
  out.threshold = safety_threshold(source.target_cost_v(), options.safety);
  out.diagnostics.resize(T * S);

  const Array3& q = source.target_q();
  for (std::size_t t = T; t-- > 0;) {
    source.extended_reward_step(target, out.policy, t, out.r_tilde);
    if (options.constraint_costs == ConstraintCosts::kSynthesizedFuture) {
      source.cost_q_step(t, out.v_cost, out.q_cost);
    } else {
      for (std::size_t s = 0; s < S; ++s) {
        const auto src = source.target_cost_q().row(t, s);
        std::copy(src.begin(), src.end(), out.q_cost.row(t, s).begin());
      }
    }

    for (std::size_t s = 0; s < S; ++s) {
      auto& diag = out.diagnostics[t * S + s];
      diag.t = t;
      diag.s = s;
      diag.threshold = out.threshold(t, s);
      const auto target_row = target.row(t, s);
      auto row = out.policy.row(t, s);

      if (!source.state_supported(t, s, target_row)) {
        diag.fallback = true;
        diag.solution.probs.assign(target_row.begin(), target_row.end());
      } else {
        StateProblem problem = make_state_problem(target_row, out.r_tilde.row(t, s), q.row(t, s),
                                                  out.q_cost.row(t, s), diag.threshold);
        if (options.constrained) {
          try {
            diag.solution = solve_state_problem(problem, options.solver);
          } catch (const SolverError& e) {
            std::ostringstream msg;
            msg << "at (t=" << t << ", s=" << s << "): " << e.what();
            throw SolverError(msg.str());
          }
        } else {
          diag.solution.probs = solve_unconstrained(problem.weights, target_row);
          diag.solution.objective = state_objective(problem.weights, diag.solution.probs);
        }
      }
      std::copy(diag.solution.probs.begin(), diag.solution.probs.end(), row.begin());

      double v_cost = 0.0;
      for (std::size_t a = 0; a < A; ++a) v_cost += row[a] * out.q_cost(t, s, a);
      out.v_cost(t, s) = v_cost;
    }
  }
  return out;
}

TabularPolicy synthesize_scope(const Cmdp& model, const TabularPolicy& target,
                               const SafetyConfig& safety, const SolverConfig& solver) {
  ExactValueSource source(model, target);
  SynthesisOptions options;
  options.safety = safety;
  options.solver = solver;
  return synthesize(source, target, options).policy;
}

TabularPolicy synthesize_odi(const Cmdp& model, const TabularPolicy& target) {
  ExactValueSource source(model, target);
  SynthesisOptions options;
  options.constrained = false;
  return synthesize(source, target, options).policy;
}

}  // namespace safe_ope
