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

#include <fstream>

#include "harness/commands.hpp"
#include "output.hpp"
#include "safe_ope/errors.hpp"
#include "safe_ope/exact_dp.hpp"
#include "safe_ope/io.hpp"
#include "safe_ope/offline_fqe.hpp"

namespace safe_ope::harness {

namespace {

SynthesisOptions options_for(const ExperimentConfig& config) {
  SynthesisOptions opts;
  opts.safety.epsilon = config.epsilon;
  opts.solver = config.solver;
  opts.constraint_costs = config.constraint_costs;
  opts.constrained = config.method == "scope";
  return opts;
}

const TabularPolicy& selected_target(const ExperimentConfig& config, const Workspace& w) {
  return w.targets.at(config.target_file.empty() ? config.target_index : 0);
}

bool solver_certified(const SynthesisResult& result, const SolverConfig& solver) {
  for (const auto& d : result.diagnostics) {
    if (d.solution.constraint_slack < -solver.constraint_slack_tolerance) return false;
  }
  return true;
}

ordered_json policy_summary(const Cmdp& model, const TabularPolicy& target,
                            const TabularPolicy& behavior) {
  const double v_target = pdis_total_variance(model, target, target);
  const double c_target = expected_cost(model, target);
  const double c_behavior = expected_cost(model, behavior);
  ordered_json out = {{"target_return", expected_return(model, target)},
                      {"target_cost", c_target},
                      {"target_pdis_variance", v_target},
                      {"behavior_cost", c_behavior},
                      {"relative_cost", c_target > 0.0 ? c_behavior / c_target : 1.0}};
  try {
    const double v_behavior = pdis_total_variance(model, target, behavior);
    out["behavior_pdis_variance"] = v_behavior;
    out["relative_variance"] = v_target > 0.0 ? v_behavior / v_target : 1.0;
  } catch (const SupportError&) {
    // Behavior outside the enlarged set: the estimator is biased.
    out["behavior_pdis_variance"] = nullptr;
    out["relative_variance"] = nullptr;
  }
  return out;
}

void write_policy_outputs(const ExperimentConfig& config, const Cmdp& model,
                          const TabularPolicy& target, const SynthesisResult& result) {
  write_stream_file(config, "model.json", [&](std::ostream& o) { io::write_json(model, o); });
  write_stream_file(config, "target.json", [&](std::ostream& o) { io::write_json(target, o); });
  write_stream_file(config, "behavior.json",
                    [&](std::ostream& o) { io::write_json(result.policy, o); });
  write_stream_file(config, "diagnostics.json",
                    [&](std::ostream& o) { io::write_diagnostics_json(result, o); });
}

}  // namespace

int run_synth(const ExperimentConfig& config, std::ostream& log) {
  const Workspace w = build_workspace(config);
  const TabularPolicy& target = selected_target(config, w);
  const ExactValueSource source(w.model, target);
  const auto opts = options_for(config);
  const SynthesisResult result = synthesize(source, target, opts);

  const auto tables = compute_value_tables(w.model, target, target);
  const bool in_set = in_enlarged_space(w.model, target, result.policy, tables);
  const double bound = (1.0 + config.epsilon) * expected_cost(w.model, target) + 1e-9;
  const bool safe = !opts.constrained || expected_cost(w.model, result.policy) <= bound;
  const bool certified = solver_certified(result, config.solver);

  write_config_copy(config);
  write_policy_outputs(config, w.model, target, result);
  ordered_json report = {{"format", "safe_ope.synth_summary"},
                         {"version", tool_version()},
                         {"method", config.method},
                         {"epsilon", config.epsilon},
                         {"summary", policy_summary(w.model, target, result.policy)},
                         {"checks",
                          {{"enlarged_set", in_set}, {"safety", safe}, {"solver", certified}}}};
  write_json_file(config, "report.json", report);

  log << "synth: method=" << config.method << " epsilon=" << format_double(config.epsilon)
      << " relative_variance=" << report["summary"]["relative_variance"].dump()
      << " relative_cost=" << report["summary"]["relative_cost"].dump() << '\n';
  if (!(in_set && safe && certified)) {
    log << "synth: check failed (enlarged_set=" << in_set << ", safety=" << safe
        << ", solver=" << certified << ")\n";
    return kCheckFailure;
  }
  return kSuccess;
}

int run_gen_offline(const ExperimentConfig& config, std::ostream& log) {
  const Workspace w = build_workspace(config);
  const OfflineDataset dataset = build_offline_dataset(config, w.model);
  std::size_t covered = 0;
  for (std::size_t t = 0; t < dataset.horizon(); ++t) {
    for (std::size_t s = 0; s < dataset.num_states(); ++s) {
      for (std::size_t a = 0; a < dataset.num_actions(); ++a) covered += dataset.covered(t, s, a);
    }
  }
  write_config_copy(config);
  write_stream_file(config, "model.json", [&](std::ostream& o) { io::write_json(w.model, o); });
  write_stream_file(config, "dataset.csv", [&](std::ostream& o) { write_dataset_csv(dataset, o); });
  const double cells =
      static_cast<double>(dataset.horizon() * dataset.num_states() * dataset.num_actions());
  ordered_json summary = {{"format", "safe_ope.dataset_summary"},
                          {"version", tool_version()},
                          {"tuples", dataset.size()},
                          {"covered_cells", covered},
                          {"coverage", static_cast<double>(covered) / cells}};
  write_json_file(config, "dataset_summary.json", summary);
  log << "gen-offline: " << dataset.size() << " tuples, " << covered << " covered (t, s, a) cells\n";
  return kSuccess;
}

int run_fqe_synth(const ExperimentConfig& config, std::ostream& log) {
  const Workspace w = build_workspace(config);
  const TabularPolicy& target = selected_target(config, w);
  OfflineDataset dataset(w.model.horizon, w.model.num_states, w.model.num_actions);
  if (config.dataset_file.empty()) {
    dataset = build_offline_dataset(config, w.model);
  } else {
    std::ifstream in(config.dataset_file);
    if (!in) throw ConfigError("cannot open " + config.dataset_file);
    try {
      dataset = read_dataset_csv(in, w.model.horizon, w.model.num_states, w.model.num_actions);
    } catch (const InvariantError& e) {
      throw ConfigError(config.dataset_file + ": " + e.what());
    }
  }
  const auto opts = options_for(config);
  const FqeValueSource source(dataset, target);
  const SynthesisResult offline = synthesize(source, target, opts);
  const SynthesisResult exact = synthesize(ExactValueSource(w.model, target), target, opts);

  std::size_t fallbacks = 0;
  for (const auto& d : offline.diagnostics) fallbacks += d.fallback;
  const bool certified = solver_certified(offline, config.solver);

  write_config_copy(config);
  write_policy_outputs(config, w.model, target, offline);
  const double v_exact = pdis_total_variance(w.model, target, exact.policy);
  ordered_json ratio = nullptr;
  try {
    const double v_offline = pdis_total_variance(w.model, target, offline.policy);
    ratio = v_exact > 0.0 ? v_offline / v_exact : 1.0;
  } catch (const SupportError&) {
  }
  ordered_json report = {
      {"format", "safe_ope.fqe_synth_summary"},
      {"version", tool_version()},
      {"method", config.method},
      {"epsilon", config.epsilon},
      {"tuples", dataset.size()},
      {"fallback_states", fallbacks},
      {"summary", policy_summary(w.model, target, offline.policy)},
      {"exact_synthesis_pdis_variance", v_exact},
      {"variance_vs_exact_synthesis", ratio},
      {"checks", {{"solver", certified}}}};
  write_json_file(config, "report.json", report);
  log << "fqe-synth: " << dataset.size() << " tuples, " << fallbacks
      << " fallback states, variance / exact-synthesis variance = "
      << (ratio.is_null() ? std::string("n/a (outside the enlarged set)")
                          : format_double(ratio.get<double>()))
      << '\n';
  return certified ? kSuccess : kCheckFailure;
}

}  // namespace safe_ope::harness
