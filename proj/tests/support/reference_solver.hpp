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

#include <span>
#include <vector>

#include "safe_ope/synthesis.hpp"

namespace safe_ope::testing {

/// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::span<const double> y);

/// Projection onto {x in simplex : costs . x <= threshold}, by bisection on the
/// halfspace multiplier. Requires min(costs) <= threshold.
std::vector<double> project_simplex_halfspace(std::span<const double> y,
                                              std::span<const double> costs, double threshold);

struct ReferenceResult {
  std::vector<double> probs;
  double objective = 0.0;
  int iterations = 0;
};

/// Projected gradient with Armijo backtracking, started from the target row.
/// Test-only cross-check for solve_state_problem.
ReferenceResult projected_gradient_solve(const StateProblem& problem, int max_iterations = 200000,
                                         double step_tolerance = 1e-15);

}  // namespace safe_ope::testing
