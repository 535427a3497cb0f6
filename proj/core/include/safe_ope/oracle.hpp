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
#include <optional>
#include <ostream>
#include <vector>

#include "safe_ope/cmdp.hpp"
#include "safe_ope/tensor.hpp"

namespace safe_ope::oracle {

// Brute-force ground truth. Nothing here calls the dynamic-programming code:
// every quantity is a probability-weighted sum over explicitly enumerated
// trajectories, pruned only at exactly-zero probability.

struct OracleConfig {
  /// Bound on (num_states * num_actions)^steps for one enumeration.
  std::uint64_t max_leaves = 10'000'000;
};

struct WeightedTrajectory {
  Trajectory trajectory;
  double probability = 0.0;
};

/// Every positive-probability trajectory of `policy`, exactly once.
/// Throws OracleCapError when the branching bound exceeds the cap.
std::vector<WeightedTrajectory> enumerate(const Cmdp& model, const TabularPolicy& policy,
                                          const OracleConfig& config = {});

/// Writes `enumerate`'s output as CSV (trajectory, probability, t, s, a, r, c).
void dump_enumeration_csv(const std::vector<WeightedTrajectory>& trajectories, std::ostream& out);

/// Moments of the PDIS return from one start point.
struct ConditionalMoments {
  double mean = 0.0;      // E[G^PDIS_{t:T-1}]
  double variance = 0.0;  // V(G^PDIS_{t:T-1}), two-pass
  double mean_cost = 0.0; // E[sum of executed costs from t]
  double mean_plain_return = 0.0;  // E[sum of rewards from t] under the behavior
  double total_probability = 0.0;
  std::size_t leaves = 0;
};

/// Conditions on S_t = s (and A_t = first_action when given, whose probability
/// then counts as one). Trajectories are drawn from `behavior`; ratios use
/// `target`. A positive-probability step with zero behavior probability cannot
/// occur because branches are taken from the behavior.
ConditionalMoments conditional_moments(const Cmdp& model, const TabularPolicy& target,
                                       const TabularPolicy& behavior, std::size_t t,
                                       std::size_t s,
                                       std::optional<std::size_t> first_action = std::nullopt,
                                       const OracleConfig& config = {});

struct ExactMoments {
  double mean = 0.0;      // E[G^PDIS]
  double variance = 0.0;  // V(G^PDIS)
  double cost = 0.0;      // J^c(behavior)
};

/// Unconditional moments, composed from per-initial-state moments by the law of
/// total variance.
ExactMoments exact_moments(const Cmdp& model, const TabularPolicy& target,
                           const TabularPolicy& behavior, const OracleConfig& config = {});

/// P(S_t = s) under `policy`, by summing enumerated trajectory probabilities.
Array2 state_marginals(const Cmdp& model, const TabularPolicy& policy,
                       const OracleConfig& config = {});

/// q(t, s, a) = E[G_t | S_t = s, A_t = a] under `policy`, by enumeration.
Array3 action_values(const Cmdp& model, const TabularPolicy& policy, bool cost_signal = false,
                     const OracleConfig& config = {});

/// v(t, s) = E[G_t | S_t = s] under `policy`, by enumeration.
Array2 state_values(const Cmdp& model, const TabularPolicy& policy, bool cost_signal = false,
                    const OracleConfig& config = {});

/// Conditional PDIS variance V(t, s) for every (t, s), by enumeration.
Array2 conditional_variances(const Cmdp& model, const TabularPolicy& target,
                             const TabularPolicy& behavior, const OracleConfig& config = {});

/// Extended reward from its variance definition:
///   r~(T-1, s, a) = r(s, a)^2
///   r~(t, s, a)   = nu(t, s, a) + q(t, s, a)^2 + E_{S'}[V(G^PDIS_{t+1} | S')]
/// with q, v and the conditional variances all enumerated (the last one under
/// `future_behavior`).
Array3 extended_reward_by_definition(const Cmdp& model, const TabularPolicy& target,
                                     const TabularPolicy& future_behavior,
                                     const OracleConfig& config = {});

}  // namespace safe_ope::oracle
