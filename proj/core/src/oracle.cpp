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

#include "safe_ope/oracle.hpp"

#include <functional>
#include <sstream>

#include "safe_ope/errors.hpp"

namespace safe_ope::oracle {

namespace {

void check_cap(const Cmdp& model, std::size_t steps, const OracleConfig& config) {
  const std::uint64_t branching =
      static_cast<std::uint64_t>(model.num_states) * static_cast<std::uint64_t>(model.num_actions);
  std::uint64_t leaves = 1;
  for (std::size_t i = 0; i < steps; ++i) {
    if (branching != 0 && leaves > config.max_leaves / branching) {
      std::ostringstream msg;
      msg << "enumeration of " << steps << " steps with branching " << branching
          << " exceeds the cap of " << config.max_leaves << " leaves";
      throw OracleCapError(msg.str());
    }
    leaves *= branching;
  }
  if (leaves > config.max_leaves) throw OracleCapError("enumeration exceeds leaf cap");
}

struct Leaf {
  double probability;
  double pdis;
  double cost;
  double plain;
};

// Depth-first walk from (t0, s0). `on_leaf` receives each complete branch; the
// step list is maintained only when `record` is set.
class Walker {
 public:
  Walker(const Cmdp& model, const TabularPolicy& target, const TabularPolicy& behavior,
         bool record)
      : model_(model), target_(target), behavior_(behavior), record_(record) {}

  using LeafFn = std::function<void(const Leaf&, const std::vector<Step>&)>;

  void run(std::size_t t0, std::size_t s0, double probability,
           std::optional<std::size_t> first_action, const LeafFn& on_leaf) {
    on_leaf_ = &on_leaf;
    steps_.clear();
    visit(t0, s0, probability, 1.0, 0.0, 0.0, 0.0, first_action);
  }

 private:
  void visit(std::size_t t, std::size_t s, double probability, double weight, double pdis,
             double cost, double plain, std::optional<std::size_t> forced) {
    const std::size_t A = model_.num_actions;
    for (std::size_t a = 0; a < A; ++a) {
      double p_action;
      double ratio;
      if (forced) {
        if (a != *forced) continue;
        p_action = 1.0;
        ratio = 1.0;
      } else {
        p_action = behavior_(t, s, a);
        if (p_action == 0.0) continue;
        ratio = target_(t, s, a) / p_action;
      }
      const double r = model_.reward(s, a);
      const double c = model_.cost(s, a);
      const double w = weight * ratio;
      const double p = probability * p_action;
      if (record_) steps_.push_back({s, a, r, c});
      if (t + 1 == model_.horizon) {
        (*on_leaf_)(Leaf{p, pdis + w * r, cost + c, plain + r}, steps_);
      } else {
        const auto next = model_.next_state_probs(s, a);
        for (std::size_t sn = 0; sn < model_.num_states; ++sn) {
          if (next[sn] == 0.0) continue;
          visit(t + 1, sn, p * next[sn], w, pdis + w * r, cost + c, plain + r, std::nullopt);
        }
      }
      if (record_) steps_.pop_back();
    }
  }

  const Cmdp& model_;
  const TabularPolicy& target_;
  const TabularPolicy& behavior_;
  bool record_;
  const LeafFn* on_leaf_ = nullptr;
  std::vector<Step> steps_;
};

void check_inputs(const Cmdp& model, const TabularPolicy& target, const TabularPolicy& behavior) {
  require_valid(model);
  require_valid(model, target);
  require_valid(model, behavior);
}

}  // namespace

std::vector<WeightedTrajectory> enumerate(const Cmdp& model, const TabularPolicy& policy,
                                          const OracleConfig& config) {
  check_inputs(model, policy, policy);
  check_cap(model, model.horizon, config);
  std::vector<WeightedTrajectory> out;
  Walker walker(model, policy, policy, /*record=*/true);
  const Walker::LeafFn collect = [&](const Leaf& leaf, const std::vector<Step>& steps) {
    out.push_back({Trajectory{steps}, leaf.probability});
  };
  for (std::size_t s = 0; s < model.num_states; ++s) {
    if (model.initial_dist[s] == 0.0) continue;
    walker.run(0, s, model.initial_dist[s], std::nullopt, collect);
  }
  return out;
}

void dump_enumeration_csv(const std::vector<WeightedTrajectory>& trajectories,
                          std::ostream& out) {
  out.precision(17);
  out << "trajectory,probability,t,s,a,r,c\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& wt = trajectories[i];
    for (std::size_t t = 0; t < wt.trajectory.steps.size(); ++t) {
      const auto& st = wt.trajectory.steps[t];
      out << i << ',' << wt.probability << ',' << t << ',' << st.state << ',' << st.action << ','
          << st.reward << ',' << st.cost << '\n';
    }
  }
}

ConditionalMoments conditional_moments(const Cmdp& model, const TabularPolicy& target,
                                       const TabularPolicy& behavior, std::size_t t,
                                       std::size_t s, std::optional<std::size_t> first_action,
                                       const OracleConfig& config) {
  check_inputs(model, target, behavior);
  if (t >= model.horizon || s >= model.num_states) throw ShapeError("(t, s) out of range");
  if (first_action && *first_action >= model.num_actions) throw ShapeError("action out of range");
  check_cap(model, model.horizon - t, config);

  std::vector<Leaf> leaves;
  Walker walker(model, target, behavior, /*record=*/false);
  const Walker::LeafFn collect = [&](const Leaf& leaf, const std::vector<Step>&) {
    leaves.push_back(leaf);
  };
  walker.run(t, s, 1.0, first_action, collect);

  ConditionalMoments out;
  out.leaves = leaves.size();
  for (const auto& leaf : leaves) {
    out.total_probability += leaf.probability;
    out.mean += leaf.probability * leaf.pdis;
    out.mean_cost += leaf.probability * leaf.cost;
    out.mean_plain_return += leaf.probability * leaf.plain;
  }
  for (const auto& leaf : leaves) {
    const double d = leaf.pdis - out.mean;
    out.variance += leaf.probability * d * d;
  }
  return out;
}

ExactMoments exact_moments(const Cmdp& model, const TabularPolicy& target,
                           const TabularPolicy& behavior, const OracleConfig& config) {
  std::vector<ConditionalMoments> per_state(model.num_states);
  ExactMoments out;
  for (std::size_t s = 0; s < model.num_states; ++s) {
    const double p = model.initial_dist.at(s);
    if (p == 0.0) continue;
    per_state[s] = conditional_moments(model, target, behavior, 0, s, std::nullopt, config);
    out.mean += p * per_state[s].mean;
    out.cost += p * per_state[s].mean_cost;
  }
  for (std::size_t s = 0; s < model.num_states; ++s) {
    const double p = model.initial_dist[s];
    if (p == 0.0) continue;
    const double d = per_state[s].mean - out.mean;
    out.variance += p * (per_state[s].variance + d * d);
  }
  return out;
}

Array2 state_marginals(const Cmdp& model, const TabularPolicy& policy,
                       const OracleConfig& config) {
  Array2 out(model.horizon, model.num_states);
  for (const auto& wt : enumerate(model, policy, config)) {
    for (std::size_t t = 0; t < wt.trajectory.steps.size(); ++t) {
      out(t, wt.trajectory.steps[t].state) += wt.probability;
    }
  }
  return out;
}

Array3 action_values(const Cmdp& model, const TabularPolicy& policy, bool cost_signal,
                     const OracleConfig& config) {
  Array3 q(model.horizon, model.num_states, model.num_actions);
  for (std::size_t t = 0; t < model.horizon; ++t) {
    for (std::size_t s = 0; s < model.num_states; ++s) {
      for (std::size_t a = 0; a < model.num_actions; ++a) {
        const auto m = conditional_moments(model, policy, policy, t, s, a, config);
        q(t, s, a) = cost_signal ? m.mean_cost : m.mean_plain_return;
      }
    }
  }
  return q;
}

Array2 state_values(const Cmdp& model, const TabularPolicy& policy, bool cost_signal,
                    const OracleConfig& config) {
  Array2 v(model.horizon, model.num_states);
  for (std::size_t t = 0; t < model.horizon; ++t) {
    for (std::size_t s = 0; s < model.num_states; ++s) {
      const auto m = conditional_moments(model, policy, policy, t, s, std::nullopt, config);
      v(t, s) = cost_signal ? m.mean_cost : m.mean_plain_return;
    }
  }
  return v;
}

Array2 conditional_variances(const Cmdp& model, const TabularPolicy& target,
                             const TabularPolicy& behavior, const OracleConfig& config) {
  Array2 out(model.horizon, model.num_states);
  for (std::size_t t = 0; t < model.horizon; ++t) {
    for (std::size_t s = 0; s < model.num_states; ++s) {
      out(t, s) = conditional_moments(model, target, behavior, t, s, std::nullopt, config).variance;
    }
  }
  return out;
}

Array3 extended_reward_by_definition(const Cmdp& model, const TabularPolicy& target,
                                     const TabularPolicy& future_behavior,
                                     const OracleConfig& config) {
  const std::size_t T = model.horizon, S = model.num_states, A = model.num_actions;
  const Array3 q = action_values(model, target, false, config);
  const Array2 v = state_values(model, target, false, config);
  const Array2 var = conditional_variances(model, target, future_behavior, config);
  Array3 out(T, S, A);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        if (t + 1 == T) {
          const double r = model.reward(s, a);
          out(t, s, a) = r * r;
          continue;
        }
        const auto next = model.next_state_probs(s, a);
        double mean_v = 0.0;
        double mean_var = 0.0;
        for (std::size_t sn = 0; sn < S; ++sn) {
          mean_v += next[sn] * v(t + 1, sn);
          mean_var += next[sn] * var(t + 1, sn);
        }
        double nu = 0.0;
        for (std::size_t sn = 0; sn < S; ++sn) {
          const double d = v(t + 1, sn) - mean_v;
          nu += next[sn] * d * d;
        }
        out(t, s, a) = nu + q(t, s, a) * q(t, s, a) + mean_var;
      }
    }
  }
  return out;
}

}  // namespace safe_ope::oracle
