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

#include "safe_ope/envs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "safe_ope/errors.hpp"
#include "safe_ope/exact_dp.hpp"
#include "safe_ope/rng.hpp"

namespace safe_ope {

void validate(const GridworldSpec& spec) {
  if (spec.n < 2) throw ConfigError("gridworld n must be at least 2");
  if (!(spec.intended_move_prob >= 0.0 && spec.intended_move_prob <= 1.0)) {
    throw ConfigError("intended_move_prob must lie in [0, 1]");
  }
  if (!(spec.reward_high >= spec.reward_low)) throw ConfigError("reward_high < reward_low");
  if (!(spec.cost_low >= 0.0) || !(spec.cost_high >= spec.cost_low)) {
    throw ConfigError("costs must satisfy 0 <= cost_low <= cost_high");
  }
  if (!(spec.cost_reward_coupling >= 0.0 && spec.cost_reward_coupling <= 1.0)) {
    throw ConfigError("cost_reward_coupling must lie in [0, 1]");
  }
  if (spec.start_cell >= spec.n * spec.n) throw ConfigError("start_cell outside the grid");
}

namespace {

std::size_t move(std::size_t n, std::size_t cell, std::size_t direction) {
  const std::size_t row = cell / n, col = cell % n;
  switch (static_cast<GridAction>(direction)) {
    case GridAction::kUp:
      return row == 0 ? cell : cell - n;
    case GridAction::kDown:
      return row + 1 == n ? cell : cell + n;
    case GridAction::kLeft:
      return col == 0 ? cell : cell - 1;
    case GridAction::kRight:
      return col + 1 == n ? cell : cell + 1;
  }
  return cell;
}

}  // namespace

Cmdp make_gridworld(const GridworldSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n, S = n * n, A = 4;
  Cmdp m;
  m.num_states = S;
  m.num_actions = A;
  m.horizon = n;
  m.transition = Array3(S, A, S);
  m.reward = Array2(S, A);
  m.cost = Array2(S, A);
  m.initial_dist.assign(S, 0.0);
  m.initial_dist[spec.start_cell] = 1.0;

  const double slip = (1.0 - spec.intended_move_prob) / 4.0;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      m.transition(s, a, move(n, s, a)) += spec.intended_move_prob;
      for (std::size_t d = 0; d < A; ++d) m.transition(s, a, move(n, s, d)) += slip;
    }
  }

  Rng rng(spec.seed);
  const double reward_span = spec.reward_high - spec.reward_low;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const double u_reward = rng.uniform();
      const double u_independent = rng.uniform();
      m.reward(s, a) = spec.reward_low + reward_span * u_reward;
      const double u = spec.cost_reward_coupling * u_reward +
                       (1.0 - spec.cost_reward_coupling) * u_independent;
      m.cost(s, a) = spec.cost_low + (spec.cost_high - spec.cost_low) * u;
    }
  }
  return m;
}

Cmdp make_random_cmdp(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                      std::uint64_t seed) {
  if (num_states == 0 || num_actions == 0 || horizon == 0) {
    throw ConfigError("random CMDP sizes must be positive");
  }
  Cmdp m;
  m.num_states = num_states;
  m.num_actions = num_actions;
  m.horizon = horizon;
  m.transition = Array3(num_states, num_actions, num_states);
  m.reward = Array2(num_states, num_actions);
  m.cost = Array2(num_states, num_actions);
  m.initial_dist.assign(num_states, 1.0 / static_cast<double>(num_states));

  Rng rng(seed);
  for (std::size_t s = 0; s < num_states; ++s) {
    for (std::size_t a = 0; a < num_actions; ++a) {
      auto row = m.transition.row(s, a);
      double total = 0.0;
      for (double& p : row) {
        p = rng.exponential();
        total += p;
      }
      for (double& p : row) p /= total;
      m.reward(s, a) = rng.uniform(-1.0, 1.0);
      m.cost(s, a) = rng.uniform();
    }
  }
  return m;
}

TabularPolicy make_softmax_policy(const Array3& q, double temperature,
                                  const Array3* logit_offsets) {
  constexpr double kMaxLogitGap = 20.0;
  const std::size_t T = q.dim0(), S = q.dim1(), A = q.dim2();
  Array3 probs(T, S, A);
  std::vector<double> logits(A);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) {
        logits[a] = std::isinf(temperature) ? 0.0 : q(t, s, a) / temperature;
        if (logit_offsets) logits[a] += (*logit_offsets)(t, s, a);
        top = std::max(top, logits[a]);
      }
      double total = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        // Gap clamp keeps every row strictly positive.
        probs(t, s, a) = std::exp(std::max(logits[a] - top, -kMaxLogitGap));
        total += probs(t, s, a);
      }
      for (std::size_t a = 0; a < A; ++a) probs(t, s, a) /= total;
    }
  }
  return TabularPolicy(std::move(probs));
}

std::vector<TabularPolicy> make_target_policies(const Cmdp& model, std::size_t count,
                                                std::uint64_t seed) {
  require_valid(model);
  if (count == 0) throw ConfigError("target policy count must be positive");
  const Array3 q = optimal_q(model);

  double spread = 0.0;
  for (std::size_t t = 0; t < model.horizon; ++t) {
    for (std::size_t s = 0; s < model.num_states; ++s) {
      const auto row = q.row(t, s);
      const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
      spread += *hi - *lo;
    }
  }
  spread /= static_cast<double>(model.horizon * model.num_states);
  if (!(spread > 0.0)) spread = 1.0;

  constexpr double kHighExponent = 1.0;  // 10x spread
  constexpr double kLowExponent = -2.0;  // 0.01x spread
  constexpr double kJitter = 0.25;

  Rng rng(seed);
  std::vector<TabularPolicy> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double frac = count == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(count - 1);
    const double temperature =
        spread * std::pow(10.0, kHighExponent + frac * (kLowExponent - kHighExponent));
    Rng stream = rng.split(k);
    Array3 jitter(q.dim0(), q.dim1(), q.dim2());
    for (double& x : jitter.data()) x = stream.uniform(-kJitter, kJitter);
    out.push_back(make_softmax_policy(q, temperature, &jitter));
  }
  return out;
}

}  // namespace safe_ope
