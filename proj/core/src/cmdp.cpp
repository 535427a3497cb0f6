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

#include "safe_ope/cmdp.hpp"

#include <cmath>
#include <sstream>

#include "safe_ope/errors.hpp"

namespace safe_ope {

namespace {

constexpr double kRowSumTolerance = 1e-12;

std::string join(const std::vector<std::string>& lines) {
  std::ostringstream out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out << "; ";
    out << lines[i];
  }
  return out.str();
}

double sum(std::span<const double> xs) {
  double total = 0.0;
  for (double x : xs) total += x;
  return total;
}

}  // namespace

TabularPolicy TabularPolicy::uniform(std::size_t horizon, std::size_t num_states,
                                     std::size_t num_actions) {
  return TabularPolicy(
      Array3(horizon, num_states, num_actions, 1.0 / static_cast<double>(num_actions)));
}

double Trajectory::total_reward() const {
  double total = 0.0;
  for (const auto& step : steps) total += step.reward;
  return total;
}

double Trajectory::total_cost() const {
  double total = 0.0;
  for (const auto& step : steps) total += step.cost;
  return total;
}

std::vector<std::string> validate_cmdp(const Cmdp& m) {
  std::vector<std::string> out;
  if (m.num_states == 0) out.emplace_back("num_states must be positive");
  if (m.num_actions == 0) out.emplace_back("num_actions must be positive");
  if (m.horizon == 0) out.emplace_back("horizon must be at least 1");
  if (!out.empty()) return out;

  const std::size_t S = m.num_states, A = m.num_actions;
  if (m.transition.dim0() != S || m.transition.dim1() != A || m.transition.dim2() != S) {
    out.emplace_back("transition tensor shape must be (num_states, num_actions, num_states)");
  }
  if (m.reward.rows() != S || m.reward.cols() != A) {
    out.emplace_back("reward shape must be (num_states, num_actions)");
  }
  if (m.cost.rows() != S || m.cost.cols() != A) {
    out.emplace_back("cost shape must be (num_states, num_actions)");
  }
  if (m.initial_dist.size() != S) out.emplace_back("initial_dist length must be num_states");
  if (!out.empty()) return out;

  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto row = m.transition.row(s, a);
      bool negative = false;
      bool finite = true;
      for (double p : row) {
        negative |= p < 0.0;
        finite &= std::isfinite(p);
      }
      std::ostringstream where;
      where << "(s=" << s << ", a=" << a << ")";
      if (!finite) out.push_back("transition row " + where.str() + " has a non-finite entry");
      if (negative) out.push_back("transition row " + where.str() + " has a negative entry");
      const double total = sum(row);
      if (std::abs(total - 1.0) > kRowSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "transition row " << where.str() << " sums to " << total << ", not 1";
        out.push_back(msg.str());
      }
      if (!std::isfinite(m.reward(s, a))) {
        out.push_back("reward " + where.str() + " is not finite");
      }
      const double c = m.cost(s, a);
      if (!std::isfinite(c)) {
        out.push_back("cost " + where.str() + " is not finite");
      } else if (c < 0.0) {
        std::ostringstream msg;
        msg << "cost " << where.str() << " = " << c << " violates nonnegativity";
        out.push_back(msg.str());
      }
    }
  }

  bool negative = false;
  for (double p : m.initial_dist) negative |= !(p >= 0.0);
  if (negative) out.emplace_back("initial_dist has a negative or non-finite entry");
  const double total = sum(m.initial_dist);
  if (std::abs(total - 1.0) > kRowSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "initial_dist sums to " << total << ", not 1";
    out.push_back(msg.str());
  }
  return out;
}

void require_valid(const Cmdp& model) {
  const auto violations = validate_cmdp(model);
  if (!violations.empty()) throw InvariantError("invalid CMDP: " + join(violations));
}

std::vector<std::string> validate_policy(const TabularPolicy& policy) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < policy.horizon(); ++t) {
    for (std::size_t s = 0; s < policy.num_states(); ++s) {
      const auto row = policy.row(t, s);
      bool bad = false;
      for (double p : row) bad |= !(p >= 0.0) || !std::isfinite(p);
      std::ostringstream where;
      where << "(t=" << t << ", s=" << s << ")";
      if (bad) out.push_back("policy row " + where.str() + " has a negative or non-finite entry");
      const double total = sum(row);
      if (std::abs(total - 1.0) > kRowSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "policy row " << where.str() << " sums to " << total << ", not 1";
        out.push_back(msg.str());
      }
    }
  }
  return out;
}

void require_shape(const Cmdp& model, const TabularPolicy& policy) {
  if (policy.horizon() != model.horizon || policy.num_states() != model.num_states ||
      policy.num_actions() != model.num_actions) {
    std::ostringstream msg;
    msg << "policy shape (" << policy.horizon() << ", " << policy.num_states() << ", "
        << policy.num_actions() << ") does not match model (" << model.horizon << ", "
        << model.num_states << ", " << model.num_actions << ")";
    throw ShapeError(msg.str());
  }
}

void require_valid(const Cmdp& model, const TabularPolicy& policy) {
  require_shape(model, policy);
  const auto violations = validate_policy(policy);
  if (!violations.empty()) throw InvariantError("invalid policy: " + join(violations));
}

Trajectory sample_trajectory(const Cmdp& model, const TabularPolicy& policy, Rng& rng) {
  require_shape(model, policy);
  Trajectory out;
  out.steps.reserve(model.horizon);
  std::size_t s = rng.categorical(model.initial_dist);
  for (std::size_t t = 0; t < model.horizon; ++t) {
    const std::size_t a = rng.categorical(policy.row(t, s));
    out.steps.push_back({s, a, model.reward(s, a), model.cost(s, a)});
    if (t + 1 < model.horizon) s = rng.categorical(model.next_state_probs(s, a));
  }
  return out;
}

bool in_enlarged_space(const Cmdp& model, const TabularPolicy& target,
                       const TabularPolicy& behavior, const Array3& q_target) {
  require_shape(model, target);
  require_shape(model, behavior);
  if (q_target.dim0() != model.horizon || q_target.dim1() != model.num_states ||
      q_target.dim2() != model.num_actions) {
    throw ShapeError("q table shape does not match model");
  }
  for (std::size_t t = 0; t < model.horizon; ++t) {
    for (std::size_t s = 0; s < model.num_states; ++s) {
      for (std::size_t a = 0; a < model.num_actions; ++a) {
        if (behavior(t, s, a) == 0.0 &&
            std::abs(target(t, s, a) * q_target(t, s, a)) > kZeroTolerance) {
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace safe_ope
