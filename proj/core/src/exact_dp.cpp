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

#include "safe_ope/exact_dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "safe_ope/errors.hpp"

namespace safe_ope {

namespace {

void require_value_shape(const Cmdp& model, const Array2& v) {
  if (v.rows() != model.horizon || v.cols() != model.num_states) {
    throw ShapeError("state-value table shape does not match model");
  }
}

void require_action_value_shape(const Cmdp& model, const Array3& q) {
  if (q.dim0() != model.horizon || q.dim1() != model.num_states ||
      q.dim2() != model.num_actions) {
    throw ShapeError("action-value table shape does not match model");
  }
}

double expected_next(const Cmdp& model, std::size_t s, std::size_t a, const Array2& v,
                     std::size_t t_next) {
  const auto probs = model.next_state_probs(s, a);
  double total = 0.0;
  for (std::size_t sn = 0; sn < model.num_states; ++sn) {
    if (probs[sn] != 0.0) total += probs[sn] * v(t_next, sn);
  }
  return total;
}

}  // namespace

ActionValues signal_values(const Cmdp& model, const TabularPolicy& policy,
                           const Array2& signal) {
  require_shape(model, policy);
  const std::size_t T = model.horizon, S = model.num_states, A = model.num_actions;
  ActionValues out{Array3(T, S, A), Array2(T, S)};
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        double q = signal(s, a);
        if (t + 1 < T) q += expected_next(model, s, a, out.v, t + 1);
        out.q(t, s, a) = q;
        v += policy(t, s, a) * q;
      }
      out.v(t, s) = v;
    }
  }
  return out;
}

ActionValues reward_values(const Cmdp& model, const TabularPolicy& policy) {
  return signal_values(model, policy, model.reward);
}

ActionValues cost_values(const Cmdp& model, const TabularPolicy& policy) {
  return signal_values(model, policy, model.cost);
}

Array3 next_state_value_variance(const Cmdp& model, const Array2& v) {
  require_value_shape(model, v);
  const std::size_t T = model.horizon, S = model.num_states, A = model.num_actions;
  Array3 nu(T, S, A);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const auto probs = model.next_state_probs(s, a);
        const double mean = expected_next(model, s, a, v, t + 1);
        // Centered form; avoids E[X^2] - E[X]^2 cancellation.
        double var = 0.0;
        for (std::size_t sn = 0; sn < S; ++sn) {
          if (probs[sn] == 0.0) continue;
          const double d = v(t + 1, sn) - mean;
          var += probs[sn] * d * d;
        }
        nu(t, s, a) = var;
      }
    }
  }
  return nu;
}

double weighted_second_moment(std::span<const double> target_row,
                              std::span<const double> behavior_row,
                              std::span<const double> r_tilde_row) {
  double total = 0.0;
  for (std::size_t a = 0; a < target_row.size(); ++a) {
    const double numerator = target_row[a] * r_tilde_row[a];
    if (numerator == 0.0) continue;
    if (behavior_row[a] == 0.0) {
      std::ostringstream msg;
      msg << "zero behavior probability on action " << a << " where target * r_tilde = "
          << numerator;
      throw SupportError(msg.str());
    }
    total += target_row[a] * numerator / behavior_row[a];
  }
  return total;
}

void extended_reward_step(const Cmdp& model, const TabularPolicy& target,
                          const TabularPolicy& future_behavior, const Array3& q, std::size_t t,
                          Array3& r_tilde) {
  const std::size_t T = model.horizon, S = model.num_states, A = model.num_actions;
  if (t + 1 == T) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        const double r = model.reward(s, a);
        r_tilde(t, s, a) = r * r;
      }
    }
    return;
  }

  // Per-successor continuation term, shared by every (s, a) that can reach s'.
  std::vector<double> continuation(S);
  for (std::size_t sn = 0; sn < S; ++sn) {
    try {
      continuation[sn] = weighted_second_moment(target.row(t + 1, sn),
                                                future_behavior.row(t + 1, sn),
                                                r_tilde.row(t + 1, sn));
    } catch (const SupportError& e) {
      std::ostringstream msg;
      msg << "extended reward at (t+1=" << t + 1 << ", s'=" << sn << "): " << e.what();
      throw SupportError(msg.str());
    }
  }
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const double r = model.reward(s, a);
      const auto probs = model.next_state_probs(s, a);
      double future = 0.0;
      for (std::size_t sn = 0; sn < S; ++sn) {
        if (probs[sn] != 0.0) future += probs[sn] * continuation[sn];
      }
      r_tilde(t, s, a) = 2.0 * q(t, s, a) * r - r * r + future;
    }
  }
}

Array3 extended_reward(const Cmdp& model, const TabularPolicy& target,
                       const TabularPolicy& future_behavior, const Array3& q) {
  require_shape(model, target);
  require_shape(model, future_behavior);
  require_action_value_shape(model, q);
  Array3 r_tilde(model.horizon, model.num_states, model.num_actions);
  for (std::size_t t = model.horizon; t-- > 0;) {
    extended_reward_step(model, target, future_behavior, q, t, r_tilde);
  }
  return r_tilde;
}

Array2 pdis_variance_closed_form(const Cmdp& model, const TabularPolicy& target,
                                 const TabularPolicy& behavior) {
  const auto values = reward_values(model, target);
  const Array3 r_tilde = extended_reward(model, target, behavior, values.q);
  Array2 var(model.horizon, model.num_states);
  for (std::size_t t = 0; t < model.horizon; ++t) {
    for (std::size_t s = 0; s < model.num_states; ++s) {
      double second;
      try {
        second = weighted_second_moment(target.row(t, s), behavior.row(t, s), r_tilde.row(t, s));
      } catch (const SupportError& e) {
        std::ostringstream msg;
        msg << "behavior outside the enlarged set at (t=" << t << ", s=" << s << "): " << e.what();
        throw SupportError(msg.str());
      }
      const double v = values.v(t, s);
      var(t, s) = second - v * v;
    }
  }
  return var;
}

double initial_value(const Cmdp& model, const Array2& v) {
  double total = 0.0;
  for (std::size_t s = 0; s < model.num_states; ++s) total += model.initial_dist[s] * v(0, s);
  return total;
}

double pdis_total_variance(const Cmdp& model, const TabularPolicy& target,
                           const TabularPolicy& behavior) {
  const Array2 conditional = pdis_variance_closed_form(model, target, behavior);
  const auto values = reward_values(model, target);
  const double mean = initial_value(model, values.v);
  double within = 0.0;
  double between = 0.0;
  for (std::size_t s = 0; s < model.num_states; ++s) {
    const double p = model.initial_dist[s];
    if (p == 0.0) continue;
    within += p * conditional(0, s);
    const double d = values.v(0, s) - mean;
    between += p * d * d;
  }
  return within + between;
}

double expected_return(const Cmdp& model, const TabularPolicy& policy) {
  return initial_value(model, reward_values(model, policy).v);
}

double expected_cost(const Cmdp& model, const TabularPolicy& policy) {
  return initial_value(model, cost_values(model, policy).v);
}

ValueTables compute_value_tables(const Cmdp& model, const TabularPolicy& target,
                                 const TabularPolicy& future_behavior) {
  auto rewards = reward_values(model, target);
  auto costs = cost_values(model, target);
  ValueTables out;
  out.nu = next_state_value_variance(model, rewards.v);
  out.r_tilde = extended_reward(model, target, future_behavior, rewards.q);
  out.q = std::move(rewards.q);
  out.v = std::move(rewards.v);
  out.q_cost = std::move(costs.q);
  out.v_cost = std::move(costs.v);
  return out;
}

bool in_enlarged_space(const Cmdp& model, const TabularPolicy& target,
                       const TabularPolicy& behavior, const ValueTables& values) {
  return in_enlarged_space(model, target, behavior, values.q);
}

Array3 optimal_q(const Cmdp& model) {
  const std::size_t T = model.horizon, S = model.num_states, A = model.num_actions;
  Array3 q(T, S, A);
  Array2 v(T, S);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) {
        double value = model.reward(s, a);
        if (t + 1 < T) value += expected_next(model, s, a, v, t + 1);
        q(t, s, a) = value;
        best = std::max(best, value);
      }
      v(t, s) = best;
    }
  }
  return q;
}

}  // namespace safe_ope
