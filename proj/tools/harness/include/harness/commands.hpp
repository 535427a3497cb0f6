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

#include <ostream>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "safe_ope/cmdp.hpp"
#include "safe_ope/offline_fqe.hpp"

namespace safe_ope::harness {

enum ExitCode : int { kSuccess = 0, kCheckFailure = 1, kConfigError = 2 };

/// Model and target policies described by a config.
struct Workspace {
  Cmdp model;
  std::vector<TabularPolicy> targets;
};

Workspace build_workspace(const ExperimentConfig& config);

/// Logging policies and dataset of the offline protocol: `offline.episodes`
/// spread as evenly as possible over `offline.policies` softmax policies.
OfflineDataset build_offline_dataset(const ExperimentConfig& config, const Cmdp& model);

/// Each command writes its outputs and a copy of the resolved config
/// (config.txt) into `config.output`, logs to `log`, and returns an ExitCode.
int run_synth(const ExperimentConfig& config, std::ostream& log);
int run_evaluate(const ExperimentConfig& config, std::ostream& log);
int run_verify(const ExperimentConfig& config, std::ostream& log);
int run_gen_offline(const ExperimentConfig& config, std::ostream& log);
int run_fqe_synth(const ExperimentConfig& config, std::ostream& log);

// ---- verify suite -------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // largest violation measure seen
  std::size_t cases = 0;
  std::string first_failure;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  std::size_t models = 0;

  bool passed() const;
};

VerifyReport verify_suite(const ExperimentConfig& config);

// ---- evaluate protocol --------------------------------------------------

struct EstimatorSummary {
  std::string name;
  double relative_variance = 0.0;        // sample variances, per-policy ratio, averaged
  double relative_cost = 0.0;            // mean executed cost, per-policy ratio, averaged
  double exact_relative_variance = 0.0;  // closed-form PDIS variance ratio, averaged
  double exact_relative_cost = 0.0;      // J^c(behavior) / J^c(target), averaged
  double final_normalized_error = 0.0;
  double cost_to_accuracy = -1.0;        // negative: accuracy never reached
};

struct EvaluationSummary {
  double reference_error = 0.0;   // on-policy normalized error after the last episode
  double reference_budget = 0.0;  // that run's cost in units of J^c(target)
  std::vector<EstimatorSummary> estimators;

  const EstimatorSummary& at(const std::string& name) const;
};

/// Runs the protocol, writes CSVs and summary.json, and returns the summary.
EvaluationSummary evaluate_protocol(const ExperimentConfig& config, std::ostream& log);

}  // namespace safe_ope::harness
