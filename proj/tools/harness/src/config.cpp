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

#include "harness/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "harness/format.hpp"
#include "safe_ope/errors.hpp"

namespace safe_ope::harness {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("bad value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("bad boolean '" + text + "' for " + key);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

struct Entry {
  ConfigKey key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

Entry size_entry(std::string name, std::string doc, std::size_t ExperimentConfig::*field) {
  return {{name, std::move(doc)},
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.*field = parse_number<std::size_t>(name, v);
          },
          [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

Entry u64_entry(std::string name, std::string doc, std::uint64_t ExperimentConfig::*field) {
  return {{name, std::move(doc)},
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.*field = parse_number<std::uint64_t>(name, v);
          },
          [field](const ExperimentConfig& c) { return std::to_string(c.*field); }};
}

Entry double_entry(std::string name, std::string doc, double ExperimentConfig::*field) {
  return {{name, std::move(doc)},
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.*field = parse_number<double>(name, v);
          },
          [field](const ExperimentConfig& c) { return format_double(c.*field); }};
}

Entry string_entry(std::string name, std::string doc, std::string ExperimentConfig::*field) {
  return {{name, std::move(doc)},
          [field](ExperimentConfig& c, const std::string& v) { c.*field = v; },
          [field](const ExperimentConfig& c) { return c.*field; }};
}

Entry bool_entry(std::string name, std::string doc, bool ExperimentConfig::*field) {
  return {{name, std::move(doc)},
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.*field = parse_bool(name, v);
          },
          [field](const ExperimentConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

// Gridworld fields live in a nested struct.
template <class T>
Entry grid_entry(std::string name, std::string doc, T GridworldSpec::*field) {
  return {{name, std::move(doc)},
          [name, field](ExperimentConfig& c, const std::string& v) {
            c.gridworld.*field = parse_number<T>(name, v);
          },
          [field](const ExperimentConfig& c) {
            if constexpr (std::is_same_v<T, double>) {
              return format_double(c.gridworld.*field);
            } else {
              return std::to_string(c.gridworld.*field);
            }
          }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back({{"environment", "gridworld | random | file"},
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "gridworld") c.environment = EnvironmentKind::kGridworld;
                   else if (v == "random") c.environment = EnvironmentKind::kRandom;
                   else if (v == "file") c.environment = EnvironmentKind::kFile;
                   else throw ConfigError("environment must be gridworld, random or file");
                 },
                 [](const ExperimentConfig& c) -> std::string {
                   switch (c.environment) {
                     case EnvironmentKind::kGridworld: return "gridworld";
                     case EnvironmentKind::kRandom: return "random";
                     case EnvironmentKind::kFile: return "file";
                   }
                   return "";
                 }});
    t.push_back(grid_entry("gridworld.n", "grid side length; also the horizon", &GridworldSpec::n));
    t.push_back(grid_entry("gridworld.seed", "seed of the reward and cost draws", &GridworldSpec::seed));
    t.push_back(grid_entry("gridworld.intended_move_prob", "probability of the commanded move",
                           &GridworldSpec::intended_move_prob));
    t.push_back(grid_entry("gridworld.reward_low", "reward lower bound", &GridworldSpec::reward_low));
    t.push_back(grid_entry("gridworld.reward_high", "reward upper bound", &GridworldSpec::reward_high));
    t.push_back(grid_entry("gridworld.cost_low", "cost lower bound", &GridworldSpec::cost_low));
    t.push_back(grid_entry("gridworld.cost_high", "cost upper bound", &GridworldSpec::cost_high));
    t.push_back(grid_entry("gridworld.cost_reward_coupling",
                           "0 = independent costs, 1 = cost rank equals reward rank",
                           &GridworldSpec::cost_reward_coupling));
    t.push_back(grid_entry("gridworld.start_cell", "row-major start cell", &GridworldSpec::start_cell));
    t.push_back(size_entry("random.states", "random CMDP state count", &ExperimentConfig::random_states));
    t.push_back(size_entry("random.actions", "random CMDP action count", &ExperimentConfig::random_actions));
    t.push_back(size_entry("random.horizon", "random CMDP horizon", &ExperimentConfig::random_horizon));
    t.push_back(u64_entry("random.seed", "random CMDP seed", &ExperimentConfig::random_seed));
    t.push_back(string_entry("model_file", "safe_ope.cmdp JSON (environment = file)",
                             &ExperimentConfig::model_file));
    t.push_back(string_entry("target_file", "optional safe_ope.policy JSON used as the target",
                             &ExperimentConfig::target_file));
    t.push_back(size_entry("targets.count", "number of generated target policies",
                           &ExperimentConfig::target_count));
    t.push_back(u64_entry("targets.seed", "target policy jitter seed", &ExperimentConfig::target_seed));
    t.push_back(size_entry("target_index", "target used by synth and fqe-synth",
                           &ExperimentConfig::target_index));
    t.push_back({{"method", "scope | odi: behavior written by synth"},
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v != "scope" && v != "odi") throw ConfigError("method must be scope or odi");
                   c.method = v;
                 },
                 [](const ExperimentConfig& c) { return c.method; }});
    t.push_back(double_entry("epsilon", "safety slack; threshold is (1 + epsilon) v^c",
                             &ExperimentConfig::epsilon));
    t.push_back({{"solver.dual_tolerance", "relative width of the final multiplier bracket"},
                 [](ExperimentConfig& c, const std::string& v) {
                   c.solver.dual_tolerance = parse_number<double>("solver.dual_tolerance", v);
                 },
                 [](const ExperimentConfig& c) { return format_double(c.solver.dual_tolerance); }});
    t.push_back({{"solver.max_bisection_iters", "iteration cap of each bisection"},
                 [](ExperimentConfig& c, const std::string& v) {
                   c.solver.max_bisection_iters = parse_number<int>("solver.max_bisection_iters", v);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.solver.max_bisection_iters); }});
    t.push_back({{"solver.constraint_slack_tolerance", "allowed constraint violation"},
                 [](ExperimentConfig& c, const std::string& v) {
                   c.solver.constraint_slack_tolerance =
                       parse_number<double>("solver.constraint_slack_tolerance", v);
                 },
                 [](const ExperimentConfig& c) {
                   return format_double(c.solver.constraint_slack_tolerance);
                 }});
    t.push_back({{"constraint_costs", "synthesized | target: future behind the action costs"},
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "synthesized") c.constraint_costs = ConstraintCosts::kSynthesizedFuture;
                   else if (v == "target") c.constraint_costs = ConstraintCosts::kTargetFuture;
                   else throw ConfigError("constraint_costs must be synthesized or target");
                 },
                 [](const ExperimentConfig& c) -> std::string {
                   return c.constraint_costs == ConstraintCosts::kSynthesizedFuture ? "synthesized"
                                                                                    : "target";
                 }});
    t.push_back(size_entry("episodes", "episodes per run", &ExperimentConfig::episodes));
    t.push_back(size_entry("runs", "independent runs per target policy", &ExperimentConfig::runs));
    t.push_back(u64_entry("seed", "evaluation seed", &ExperimentConfig::seed));
    t.push_back({{"estimators", "comma list of on-policy, scope, odi"},
                 [](ExperimentConfig& c, const std::string& v) { c.estimators = split_list(v); },
                 [](const ExperimentConfig& c) { return join(c.estimators); }});
    t.push_back({{"values", "exact | offline: value source for synthesis"},
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "exact") c.values = ValueMode::kExact;
                   else if (v == "offline") c.values = ValueMode::kOffline;
                   else throw ConfigError("values must be exact or offline");
                 },
                 [](const ExperimentConfig& c) -> std::string {
                   return c.values == ValueMode::kExact ? "exact" : "offline";
                 }});
    t.push_back(bool_entry("log_space", "accumulate importance ratios in log space",
                           &ExperimentConfig::log_space));
    t.push_back(size_entry("offline.policies", "logging policies in the offline dataset",
                           &ExperimentConfig::offline_policies));
    t.push_back(size_entry("offline.episodes", "total logged episodes",
                           &ExperimentConfig::offline_episodes));
    t.push_back(u64_entry("offline.seed", "offline logging seed", &ExperimentConfig::offline_seed));
    t.push_back(double_entry("offline.keep_fraction", "probability of keeping each logged tuple",
                             &ExperimentConfig::offline_keep_fraction));
    t.push_back(string_entry("dataset_file", "dataset CSV read by fqe-synth (empty: generate)",
                             &ExperimentConfig::dataset_file));
    t.push_back(size_entry("verify.models", "random models checked by verify",
                           &ExperimentConfig::verify_models));
    t.push_back(u64_entry("verify.seed", "first model seed of verify", &ExperimentConfig::verify_seed));
    t.push_back(bool_entry("verify.corrupt", "negative control: break enlarged-set membership",
                           &ExperimentConfig::verify_corrupt));
    t.push_back(size_entry("workers", "worker threads", &ExperimentConfig::workers));
    t.push_back(string_entry("output", "output directory", &ExperimentConfig::output));
    return t;
  }();
  return table;
}

const Entry& find(const std::string& key) {
  for (const auto& e : entries()) {
    if (e.key.name == key) return e;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

void set_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  find(key).set(config, value);
}

std::string get_value(const ExperimentConfig& config, const std::string& key) {
  return find(key).get(config);
}

void apply_config_text(ExperimentConfig& config, std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      set_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  apply_config_text(config, in, path);
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value: " + assignment);
  set_value(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void validate(const ExperimentConfig& c) {
  auto positive = [](std::size_t x, const char* name) {
    if (x == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  if (c.environment == EnvironmentKind::kGridworld) validate(c.gridworld);
  if (c.environment == EnvironmentKind::kRandom) {
    positive(c.random_states, "random.states");
    positive(c.random_actions, "random.actions");
    positive(c.random_horizon, "random.horizon");
  }
  if (c.environment == EnvironmentKind::kFile && c.model_file.empty()) {
    throw ConfigError("environment = file needs model_file");
  }
  positive(c.target_count, "targets.count");
  if (c.target_index >= c.target_count && c.target_file.empty()) {
    throw ConfigError("target_index must be below targets.count");
  }
  if (!(c.epsilon >= 0.0) || !std::isfinite(c.epsilon)) {
    throw ConfigError("epsilon must be finite and nonnegative");
  }
  try {
    validate(c.solver);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  positive(c.episodes, "episodes");
  positive(c.runs, "runs");
  if (c.estimators.empty()) throw ConfigError("estimators must not be empty");
  for (const auto& name : c.estimators) {
    if (name != "on-policy" && name != "scope" && name != "odi") {
      throw ConfigError("unknown estimator '" + name + "'");
    }
  }
  positive(c.offline_policies, "offline.policies");
  positive(c.offline_episodes, "offline.episodes");
  if (!(c.offline_keep_fraction > 0.0 && c.offline_keep_fraction <= 1.0)) {
    throw ConfigError("offline.keep_fraction must lie in (0, 1]");
  }
  positive(c.verify_models, "verify.models");
  positive(c.workers, "workers");
  if (c.output.empty()) throw ConfigError("output must not be empty");
}

std::string to_text(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "# resolved configuration, safe_ope " << tool_version() << '\n';
  for (const auto& e : entries()) out << e.key.name << " = " << e.get(config) << '\n';
  return out.str();
}

void apply_full_protocol(ExperimentConfig& config) {
  config.target_count = 30;
  config.runs = 30;
}

}  // namespace safe_ope::harness
