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
#include <map>
#include <string>
#include <vector>

#include "safe_ope/envs.hpp"
#include "safe_ope/synthesis.hpp"

namespace safe_ope::harness {

enum class EnvironmentKind { kGridworld, kRandom, kFile };
enum class ValueMode { kExact, kOffline };

/// Everything a subcommand needs. Read from a `key = value` file (see
/// `config_keys()` for the schema), then overridden by `--set key=value` flags.
struct ExperimentConfig {
  EnvironmentKind environment = EnvironmentKind::kGridworld;
  GridworldSpec gridworld;
  std::size_t random_states = 3;
  std::size_t random_actions = 2;
  std::size_t random_horizon = 3;
  std::uint64_t random_seed = 0;
  std::string model_file;
  std::string target_file;

  std::size_t target_count = 10;
  std::uint64_t target_seed = 1;
  std::size_t target_index = 0;  // which target `synth` and `fqe-synth` use
  std::string method = "scope";  // behavior written by `synth`: scope | odi

  double epsilon = 0.0;
  SolverConfig solver;
  ConstraintCosts constraint_costs = ConstraintCosts::kSynthesizedFuture;

  std::size_t episodes = 1000;
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  std::vector<std::string> estimators = {"on-policy", "scope", "odi"};
  ValueMode values = ValueMode::kExact;
  bool log_space = false;

  std::size_t offline_policies = 30;
  std::size_t offline_episodes = 1000;  // total, spread evenly over the policies
  std::uint64_t offline_seed = 2;
  double offline_keep_fraction = 1.0;
  std::string dataset_file;

  std::size_t verify_models = 100;
  std::uint64_t verify_seed = 0;
  bool verify_corrupt = false;

  std::size_t workers = 1;
  std::string output = "out";
};

struct ConfigKey {
  std::string name;
  std::string description;
};

/// The documented schema, in the order `to_text` writes it.
const std::vector<ConfigKey>& config_keys();

/// Applies one assignment; throws ConfigError on an unknown key or bad value.
void set_value(ExperimentConfig& config, const std::string& key, const std::string& value);

std::string get_value(const ExperimentConfig& config, const std::string& key);

/// Parses `key = value` lines. `#` starts a comment; blank lines are ignored.
void apply_config_text(ExperimentConfig& config, std::istream& in, const std::string& source);

void apply_config_file(ExperimentConfig& config, const std::string& path);

/// Parses "key=value".
void apply_override(ExperimentConfig& config, const std::string& assignment);

/// Throws ConfigError naming the first invalid field.
void validate(const ExperimentConfig& config);

/// The resolved configuration, one `key = value` line per schema key.
std::string to_text(const ExperimentConfig& config);

/// The 30 x 30 protocol: 30 target policies with 30 runs each.
void apply_full_protocol(ExperimentConfig& config);

}  // namespace safe_ope::harness
