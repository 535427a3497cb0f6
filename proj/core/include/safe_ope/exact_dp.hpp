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

#include "safe_ope/cmdp.hpp"
#include "safe_ope/tensor.hpp"

namespace safe_ope {

/// Action values q(t, s, a) and state values v(t, s) of one signal under one policy.
struct ActionValues {
  Array3 q;
  Array2 v;
};

/// All value-like tables for a target policy. r_tilde is built with the
/// future behavior passed to `compute_value_tables`.
struct ValueTables {
  Array3 q;
  Array2 v;
  Array3 q_cost;
  Array2 v_cost;
  Array3 nu;
  Array3 r_tilde;
};

/// Undiscounted backward induction of the reward signal under `policy`.
ActionValues reward_values(const Cmdp& model, const TabularPolicy& policy);

/// Same recursion with the cost signal.
ActionValues cost_values(const Cmdp& model, const TabularPolicy& policy);

/// Backward induction for an arbitrary per-(s, a) signal.
ActionValues signal_values(const Cmdp& model, const TabularPolicy& policy, const Array2& signal);

/// Variance of v(t + 1, S') given (s, a); zero at the last step.
Array3 next_state_value_variance(const Cmdp& model, const Array2& v);

/// Extended reward, by the backward recursion
///   r~(T-1, s, a) = r(s, a)^2
///   r~(t, s, a)   = 2 q r - r^2 + sum_{s'} p(s'|s,a) sum_{a'} pi(a'|s')^2 / mu(a'|s') r~(t+1, s', a').
/// A ratio term whose numerator pi * r~ is zero contributes zero; a positive
/// numerator over a zero `future_behavior` probability throws SupportError.
Array3 extended_reward(const Cmdp& model, const TabularPolicy& target,
                       const TabularPolicy& future_behavior, const Array3& q);

/// One time slice of the recursion above, written into r_tilde(t, ., .).
/// r_tilde(t + 1, ., .) must already be filled when t < T - 1.
void extended_reward_step(const Cmdp& model, const TabularPolicy& target,
                          const TabularPolicy& future_behavior, const Array3& q, std::size_t t,
                          Array3& r_tilde);

/// sum_a pi(a|s)^2 / mu(a|s) * r~(t, s, a) over terms with nonzero numerator.
double weighted_second_moment(std::span<const double> target_row,
                              std::span<const double> behavior_row,
                              std::span<const double> r_tilde_row);

/// Conditional PDIS variance V(t, s) = sum_a pi^2 / mu r~ - v^2, with r~ built
/// under the same behavior's future. Throws SupportError if `behavior` leaves
/// the enlarged set.
Array2 pdis_variance_closed_form(const Cmdp& model, const TabularPolicy& target,
                                 const TabularPolicy& behavior);

/// Unconditional PDIS variance, composed over the initial distribution with the
/// law of total variance.
double pdis_total_variance(const Cmdp& model, const TabularPolicy& target,
                           const TabularPolicy& behavior);

/// sum_s p0(s) v(0, s).
double initial_value(const Cmdp& model, const Array2& v);

/// J(policy), the expected total reward.
double expected_return(const Cmdp& model, const TabularPolicy& policy);

/// J^c(policy), the expected total cost of executing the policy.
double expected_cost(const Cmdp& model, const TabularPolicy& policy);

ValueTables compute_value_tables(const Cmdp& model, const TabularPolicy& target,
                                 const TabularPolicy& future_behavior);

/// Enlarged-set membership test using the exact target q.
bool in_enlarged_space(const Cmdp& model, const TabularPolicy& target,
                       const TabularPolicy& behavior, const ValueTables& values);

/// Optimal (maximizing) action values; used to seed target-policy families.
Array3 optimal_q(const Cmdp& model);

}  // namespace safe_ope
