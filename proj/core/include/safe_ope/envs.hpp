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
#include <vector>

#include "safe_ope/cmdp.hpp"

namespace safe_ope {

/// n x n grid; the horizon is also n.
struct GridworldSpec {
  std::size_t n = 10;
  std::uint64_t seed = 0;
  double intended_move_prob = 0.9;
  /// Reward and cost draws. Each (s, a) draws r ~ U[reward_low, reward_high];
  /// its cost is u * c_hi + (1 - u) * c_lo with u = (r - reward_low) /
  /// (reward_high - reward_low) blended with an independent uniform by
  /// `cost_reward_coupling` in [0, 1] (0 gives independent costs).
  double reward_low = 0.0;
  double reward_high = 1.0;
  double cost_low = 0.0;
  double cost_high = 1.0;
  double cost_reward_coupling = 0.0;
  /// Start cell; the agent always begins here (row-major index).
  std::size_t start_cell = 0;
};

enum class GridAction : std::size_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

void validate(const GridworldSpec& spec);

/// States are cells (row * n + col). With probability intended_move_prob the
/// agent moves as commanded; otherwise it moves in one of the four directions
/// uniformly (the commanded one included). Moves off the grid keep the position.
Cmdp make_gridworld(const GridworldSpec& spec);

/// Dirichlet(1, ..., 1) transition rows, rewards U[-1, 1], costs U[0, 1],
/// uniform initial distribution.
Cmdp make_random_cmdp(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                      std::uint64_t seed);

/// Softmax of q(t, s, .) / temperature (+ optional logit offsets) per row;
/// an infinite temperature gives the uniform policy.
TabularPolicy make_softmax_policy(const Array3& q, double temperature,
                                  const Array3* logit_offsets = nullptr);

/// `count` strictly positive policies spanning near-uniform to near-greedy:
/// softmax over the optimal action values at temperatures log-spaced between
/// 10x and 0.01x the spread of those values, each with small seeded logit
/// jitter. A single policy uses the middle temperature.
std::vector<TabularPolicy> make_target_policies(const Cmdp& model, std::size_t count,
                                                std::uint64_t seed);

}  // namespace safe_ope
