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
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "safe_ope/cmdp.hpp"
#include "safe_ope/exact_dp.hpp"
#include "safe_ope/rng.hpp"
#include "safe_ope/synthesis.hpp"

namespace safe_ope {

struct OfflineTuple {
  std::size_t t = 0;
  std::size_t s = 0;
  std::size_t a = 0;
  double r = 0.0;
  double c = 0.0;
  std::size_t s_next = 0;

  friend bool operator==(const OfflineTuple&, const OfflineTuple&) = default;
};

/// Bag of logged transitions with per-(t, s, a) coverage counts.
class OfflineDataset {
 public:
  OfflineDataset(std::size_t horizon, std::size_t num_states, std::size_t num_actions);

  /// Throws InvariantError if an index is out of range or the cost is negative.
  void add(const OfflineTuple& tuple);

  std::size_t horizon() const { return horizon_; }
  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  const std::vector<OfflineTuple>& tuples() const { return tuples_; }
  std::size_t size() const { return tuples_.size(); }

  std::size_t count(std::size_t t, std::size_t s, std::size_t a) const {
    return counts_[(t * num_states_ + s) * num_actions_ + a];
  }
  bool covered(std::size_t t, std::size_t s, std::size_t a) const { return count(t, s, a) > 0; }

 private:
  std::size_t horizon_;
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<OfflineTuple> tuples_;
  std::vector<std::size_t> counts_;
};

/// Rolls out `episodes_per_policy` episodes of each policy and flattens them
/// into tuples, discarding trajectory identity. `keep_fraction` < 1 drops each
/// tuple independently to simulate incomplete logs.
OfflineDataset generate_offline_dataset(const Cmdp& model,
                                        std::span<const TabularPolicy> policies,
                                        std::size_t episodes_per_policy, Rng& rng,
                                        double keep_fraction = 1.0);

enum class Signal { kReward, kCost };

/// Per-(t, s, a) sufficient statistics of a dataset: tuple count, sums of r,
/// r^2 and c, and successor-state counts.
class EmpiricalModel {
 public:
  explicit EmpiricalModel(const OfflineDataset& dataset);

  std::size_t horizon() const { return horizon_; }
  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  std::size_t count(std::size_t t, std::size_t s, std::size_t a) const { return cell(t, s, a).n; }
  double mean_reward(std::size_t t, std::size_t s, std::size_t a) const;
  double mean_squared_reward(std::size_t t, std::size_t s, std::size_t a) const;
  double mean_cost(std::size_t t, std::size_t s, std::size_t a) const;
  double mean_signal(Signal signal, std::size_t t, std::size_t s, std::size_t a) const {
    return signal == Signal::kReward ? mean_reward(t, s, a) : mean_cost(t, s, a);
  }

  /// Average of f(s_next) over the tuples at (t, s, a); zero when uncovered.
  template <class F>
  double mean_over_successors(std::size_t t, std::size_t s, std::size_t a, F&& f) const {
    const Cell& c = cell(t, s, a);
    if (c.n == 0) return 0.0;
    double total = 0.0;
    for (const auto& [sn, k] : c.successors) total += static_cast<double>(k) * f(sn);
    return total / static_cast<double>(c.n);
  }

 private:
  struct Cell {
    std::size_t n = 0;
    double sum_r = 0.0;
    double sum_r2 = 0.0;
    double sum_c = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> successors;  // (s', count), sorted
  };
  const Cell& cell(std::size_t t, std::size_t s, std::size_t a) const {
    return cells_[(t * num_states_ + s) * num_actions_ + a];
  }

  std::size_t horizon_;
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<Cell> cells_;
};

/// Tabular fitted Q-evaluation: backward over t,
///   q(t, s, a) = mean over tuples at (t, s, a) of [signal + sum_a' pi(a'|s') q(t+1, s', a')].
/// Uncovered cells are zero.
ActionValues fqe_values(const OfflineDataset& dataset, const TabularPolicy& target,
                        Signal signal);
ActionValues fqe_values(const EmpiricalModel& empirical, const TabularPolicy& target,
                        Signal signal);

/// Extended reward estimated from tuples with the same recursion as the exact
/// version. Each estimate is clamped below at q_hat(t, s, a)^2, the floor the
/// exact quantity never crosses. Uncovered cells are zero.
Array3 fqe_extended_reward(const OfflineDataset& dataset, const TabularPolicy& target,
                           const TabularPolicy& future_behavior, const Array3& q_hat);

/// ValueSource over offline data, for the same synthesis loop as the exact path.
/// A state whose target support contains an uncovered action keeps the target
/// row.
class FqeValueSource final : public ValueSource {
 public:
  FqeValueSource(const OfflineDataset& dataset, const TabularPolicy& target);

  std::size_t horizon() const override { return empirical_.horizon(); }
  std::size_t num_states() const override { return empirical_.num_states(); }
  std::size_t num_actions() const override { return empirical_.num_actions(); }

  const Array3& target_q() const override { return q_; }
  const Array3& target_cost_q() const override { return q_cost_; }
  const Array2& target_cost_v() const override { return v_cost_; }

  void extended_reward_step(const TabularPolicy& target, const TabularPolicy& future_behavior,
                            std::size_t t, Array3& r_tilde) const override;
  void cost_q_step(std::size_t t, const Array2& v_cost_future, Array3& q_cost) const override;
  bool state_supported(std::size_t t, std::size_t s,
                       std::span<const double> target_row) const override;

  const EmpiricalModel& empirical() const { return empirical_; }

 private:
  EmpiricalModel empirical_;
  Array3 q_;
  Array3 q_cost_;
  Array2 v_cost_;
};

/// CSV with header "t,s,a,r,c,s_next".
void write_dataset_csv(const OfflineDataset& dataset, std::ostream& out);

/// Parses the CSV written above; dimensions come from the caller and every
/// index is range-checked.
OfflineDataset read_dataset_csv(std::istream& in, std::size_t horizon, std::size_t num_states,
                                std::size_t num_actions);

}  // namespace safe_ope
