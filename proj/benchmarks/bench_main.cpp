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

#include <benchmark/benchmark.h>

#include <cmath>

#include "safe_ope/envs.hpp"
#include "safe_ope/estimators.hpp"
#include "safe_ope/exact_dp.hpp"
#include "safe_ope/offline_fqe.hpp"
#include "safe_ope/synthesis.hpp"

namespace {

using namespace safe_ope;

StateProblem problem_with(std::size_t actions, Rng& rng) {
  StateProblem p;
  double total = 0.0;
  for (std::size_t a = 0; a < actions; ++a) {
    p.target.push_back(rng.exponential() + 0.01);
    total += p.target.back();
  }
  double cost = 0.0;
  for (std::size_t a = 0; a < actions; ++a) {
    p.target[a] /= total;
    p.weights.push_back(p.target[a] * p.target[a] * rng.uniform(0.1, 4.0));
    p.action_costs.push_back(rng.uniform());
    p.must_support.push_back(true);
    cost += p.target[a] * p.action_costs[a];
  }
  p.threshold = cost;
  return p;
}

void BM_SolveStateProblem(benchmark::State& state) {
  Rng rng(1);
  const auto p = problem_with(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve_state_problem(p));
}
BENCHMARK(BM_SolveStateProblem)->Arg(2)->Arg(4)->Arg(10);

Cmdp gridworld(std::size_t n) {
  GridworldSpec spec;
  spec.n = n;
  return make_gridworld(spec);
}

void BM_ExtendedReward(benchmark::State& state) {
  const Cmdp m = gridworld(static_cast<std::size_t>(state.range(0)));
  const auto pi = make_target_policies(m, 1, 0)[0];
  const auto q = reward_values(m, pi).q;
  for (auto _ : state) benchmark::DoNotOptimize(extended_reward(m, pi, pi, q));
}
BENCHMARK(BM_ExtendedReward)->Arg(5)->Arg(10);

void BM_SynthesizeScope(benchmark::State& state) {
  const Cmdp m = gridworld(static_cast<std::size_t>(state.range(0)));
  const auto pi = make_target_policies(m, 1, 0)[0];
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_scope(m, pi));
}
BENCHMARK(BM_SynthesizeScope)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_SynthesizeOdi(benchmark::State& state) {
  const Cmdp m = gridworld(10);
  const auto pi = make_target_policies(m, 1, 0)[0];
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_odi(m, pi));
}
BENCHMARK(BM_SynthesizeOdi)->Unit(benchmark::kMillisecond);

void BM_SamplePdisEpisode(benchmark::State& state) {
  const Cmdp m = gridworld(10);
  const auto pi = make_target_policies(m, 1, 0)[0];
  const auto mu = synthesize_scope(m, pi);
  Rng rng(3);
  for (auto _ : state) {
    const auto traj = sample_trajectory(m, mu, rng);
    benchmark::DoNotOptimize(pdis_return(traj, pi, mu));
  }
}
BENCHMARK(BM_SamplePdisEpisode);

void BM_FqeValues(benchmark::State& state) {
  const Cmdp m = gridworld(5);
  const auto logging = make_target_policies(m, 30, 1);
  Rng rng(4);
  const auto data = generate_offline_dataset(m, logging, static_cast<std::size_t>(state.range(0)), rng);
  const auto pi = make_target_policies(m, 1, 0)[0];
  for (auto _ : state) benchmark::DoNotOptimize(fqe_values(data, pi, Signal::kReward));
  state.counters["tuples"] = static_cast<double>(data.size());
}
BENCHMARK(BM_FqeValues)->Arg(10)->Arg(100);

}  // namespace

// The distro benchmark_main archive ships LTO bytecode only, so main lives here.
BENCHMARK_MAIN();
