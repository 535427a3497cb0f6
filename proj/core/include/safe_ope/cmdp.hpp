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
#include <span>
#include <string>
#include <vector>

#include "safe_ope/rng.hpp"
#include "safe_ope/tensor.hpp"

namespace safe_ope {

/// Magnitudes at or below this count as zero for probabilities and
/// probability-weighted values.
inline constexpr double kZeroTolerance = 1e-12;

/// Finite-horizon constrained MDP with dense 0-based states and actions.
///
/// Reward and cost are deterministic functions of (s, a). The struct is a plain
/// aggregate so that malformed models can be built and diagnosed; every consumer
/// that needs the invariants calls `require_valid`.
struct Cmdp {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::size_t horizon = 0;
  Array3 transition;  // (s, a, s')
  Array2 reward;      // (s, a)
  Array2 cost;        // (s, a), nonnegative
  std::vector<double> initial_dist;

  std::span<const double> next_state_probs(std::size_t s, std::size_t a) const {
    return transition.row(s, a);
  }

  friend bool operator==(const Cmdp&, const Cmdp&) = default;
};

/// Time-indexed action distributions, probs(t, s, a).
class TabularPolicy {
 public:
  TabularPolicy() = default;
  explicit TabularPolicy(Array3 probs) : probs_(std::move(probs)) {}

  static TabularPolicy uniform(std::size_t horizon, std::size_t num_states,
                               std::size_t num_actions);
  static TabularPolicy uniform(const Cmdp& model) {
    return uniform(model.horizon, model.num_states, model.num_actions);
  }

  std::size_t horizon() const { return probs_.dim0(); }
  std::size_t num_states() const { return probs_.dim1(); }
  std::size_t num_actions() const { return probs_.dim2(); }

  double operator()(std::size_t t, std::size_t s, std::size_t a) const {
    return probs_(t, s, a);
  }
  double& operator()(std::size_t t, std::size_t s, std::size_t a) { return probs_(t, s, a); }

  std::span<const double> row(std::size_t t, std::size_t s) const { return probs_.row(t, s); }
  std::span<double> row(std::size_t t, std::size_t s) { return probs_.row(t, s); }

  const Array3& probs() const { return probs_; }

  friend bool operator==(const TabularPolicy&, const TabularPolicy&) = default;

 private:
  Array3 probs_;
};

struct Step {
  std::size_t state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  double cost = 0.0;

  friend bool operator==(const Step&, const Step&) = default;
};

/// One episode; steps.size() equals the generating model's horizon.
struct Trajectory {
  std::vector<Step> steps;

  double total_reward() const;
  double total_cost() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Every violated invariant of `model`, each naming the offending index. Empty
/// iff the model is well formed.
std::vector<std::string> validate_cmdp(const Cmdp& model);

/// Throws InvariantError listing all violations.
void require_valid(const Cmdp& model);

std::vector<std::string> validate_policy(const TabularPolicy& policy);

/// Throws ShapeError on a dimension mismatch and InvariantError on bad rows.
void require_valid(const Cmdp& model, const TabularPolicy& policy);

/// Shape check only.
void require_shape(const Cmdp& model, const TabularPolicy& policy);

/// Draws S0 ~ initial_dist, A_t ~ policy_t(.|S_t), S_{t+1} ~ p(.|S_t, A_t).
Trajectory sample_trajectory(const Cmdp& model, const TabularPolicy& policy, Rng& rng);

/// Membership in the enlarged behavior set: wherever behavior_t(a|s) is zero,
/// target_t(a|s) * q_target(t, s, a) must be zero as well.
bool in_enlarged_space(const Cmdp& model, const TabularPolicy& target,
                       const TabularPolicy& behavior, const Array3& q_target);

}  // namespace safe_ope
