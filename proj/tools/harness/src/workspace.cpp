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

#include <algorithm>

#include "harness/commands.hpp"
#include "safe_ope/envs.hpp"
#include "safe_ope/errors.hpp"
#include "safe_ope/io.hpp"

namespace safe_ope::harness {

Workspace build_workspace(const ExperimentConfig& config) {
  validate(config);
  Workspace w;
  switch (config.environment) {
    case EnvironmentKind::kGridworld:
      w.model = make_gridworld(config.gridworld);
      break;
    case EnvironmentKind::kRandom:
      w.model = make_random_cmdp(config.random_states, config.random_actions,
                                 config.random_horizon, config.random_seed);
      break;
    case EnvironmentKind::kFile:
      try {
        w.model = io::load_cmdp(config.model_file);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(config.model_file + ": " + e.what());
      }
      break;
  }
  if (!config.target_file.empty()) {
    try {
      w.targets.push_back(io::load_policy(config.target_file));
      require_valid(w.model, w.targets.back());
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(config.target_file + ": " + e.what());
    }
  } else {
    w.targets = make_target_policies(w.model, config.target_count, config.target_seed);
  }
  return w;
}

OfflineDataset build_offline_dataset(const ExperimentConfig& config, const Cmdp& model) {
  const auto logging = make_target_policies(model, config.offline_policies, config.offline_seed);
  OfflineDataset out(model.horizon, model.num_states, model.num_actions);
  Rng rng(config.offline_seed);
  const std::size_t P = logging.size();
  for (std::size_t i = 0; i < P; ++i) {
    const std::size_t episodes = config.offline_episodes / P + (i < config.offline_episodes % P ? 1 : 0);
    if (episodes == 0) continue;
    Rng stream = rng.split(i);
    const auto part = generate_offline_dataset(model, std::span(&logging[i], 1), episodes, stream,
                                               config.offline_keep_fraction);
    for (const auto& x : part.tuples()) out.add(x);
  }
  return out;
}

}  // namespace safe_ope::harness
