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
#include <cmath>
#include <limits>
#include <optional>

#include "harness/commands.hpp"
#include "output.hpp"
#include "safe_ope/errors.hpp"
#include "safe_ope/estimators.hpp"
#include "safe_ope/exact_dp.hpp"
#include "worker_pool.hpp"

namespace safe_ope::harness {

namespace {

// Stream ids are fixed per estimator so that dropping one from the list does
// not change the samples of the others.
std::uint64_t stream_id(const std::string& name) {
  if (name == "on-policy") return 0;
  if (name == "scope") return 1;
  return 2;
}

struct JobResult {
  ErrorCurves curves;
  double behavior_cost = 0.0;     // exact J^c(behavior)
  double exact_variance = 0.0;    // closed-form PDIS variance; NaN outside the enlarged set
};

struct PolicyInfo {
  double value = 0.0;
  double cost = 0.0;
  double normalizer = 1.0;  // on-policy error after one episode, run-averaged
};

TabularPolicy behavior_for(const std::string& name, const Cmdp& model, const TabularPolicy& target,
                           const ExperimentConfig& config, const OfflineDataset* dataset) {
  if (name == "on-policy") return target;
  SynthesisOptions opts;
  opts.safety.epsilon = config.epsilon;
  opts.solver = config.solver;
  opts.constraint_costs = config.constraint_costs;
  opts.constrained = name == "scope";
  if (dataset) return synthesize(FqeValueSource(*dataset, target), target, opts).policy;
  return synthesize(ExactValueSource(model, target), target, opts).policy;
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 1.0; }

double mean(const std::vector<double>& xs) {
  double total = 0.0;
  for (double x : xs) total += x;
  return xs.empty() ? 0.0 : total / static_cast<double>(xs.size());
}

}  // namespace

const EstimatorSummary& EvaluationSummary::at(const std::string& name) const {
  for (const auto& e : estimators) {
    if (e.name == name) return e;
  }
  throw ConfigError("estimator '" + name + "' was not evaluated");
}

EvaluationSummary evaluate_protocol(const ExperimentConfig& config, std::ostream& log) {
  const Workspace w = build_workspace(config);
  const auto& names = config.estimators;
  const auto on_it = std::find(names.begin(), names.end(), "on-policy");
  if (on_it == names.end()) throw ConfigError("evaluate needs the on-policy estimator as baseline");
  const std::size_t on = static_cast<std::size_t>(on_it - names.begin());

  std::optional<OfflineDataset> dataset;
  if (config.values == ValueMode::kOffline) dataset = build_offline_dataset(config, w.model);

  const std::size_t P = w.targets.size(), E = names.size();
  std::vector<JobResult> results(P * E);
  const Rng root(config.seed);
  const PdisOptions pdis{config.log_space};
  log << "evaluate: " << P << " target policies x " << E << " estimators x " << config.runs
      << " runs x " << config.episodes << " episodes\n";
  parallel_for(P * E, config.workers, [&](std::size_t job) {
    const std::size_t p = job / E, e = job % E;
    const TabularPolicy& target = w.targets[p];
    const TabularPolicy behavior =
        behavior_for(names[e], w.model, target, config, dataset ? &*dataset : nullptr);
    JobResult& out = results[job];
    out.curves = error_curve(w.model, target, behavior, config.episodes, config.runs,
                             root.split(p).split(stream_id(names[e])), pdis);
    out.behavior_cost = expected_cost(w.model, behavior);
    try {
      out.exact_variance = pdis_total_variance(w.model, target, behavior);
    } catch (const SupportError&) {
      out.exact_variance = std::numeric_limits<double>::quiet_NaN();
    }
  });
  auto result = [&](std::size_t p, std::size_t e) -> const JobResult& { return results[p * E + e]; };

  std::vector<PolicyInfo> policies(P);
  for (std::size_t p = 0; p < P; ++p) {
    policies[p].value = result(p, on).curves.ground_truth;
    policies[p].cost = expected_cost(w.model, w.targets[p]);
    const double first = first_episode_error(result(p, on).curves);
    policies[p].normalizer = first > 0.0 ? first : 1.0;
  }

  // Per-episode curves, averaged over policies and runs after per-policy normalization.
  std::vector<std::vector<double>> mean_curves(E);
  for (std::size_t e = 0; e < E; ++e) {
    std::vector<double> curve(config.episodes, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
      const auto c = mean_error_by_episode(result(p, e).curves, policies[p].normalizer);
      for (std::size_t i = 0; i < curve.size(); ++i) curve[i] += c[i] / static_cast<double>(P);
    }
    mean_curves[e] = std::move(curve);
  }

  EvaluationSummary summary;
  summary.reference_error = mean_curves[on].back();
  summary.reference_budget = static_cast<double>(config.episodes);

  // Cost-indexed curves on a unit grid in units of J^c(target), up to the
  // smallest final budget among the estimator's runs.
  std::vector<std::vector<double>> budgets(E), cost_curves(E);
  for (std::size_t e = 0; e < E; ++e) {
    double max_budget = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < P; ++p) {
      const double scale = policies[p].cost > 0.0 ? policies[p].cost : 1.0;
      for (const auto& run : result(p, e).curves.runs) {
        max_budget = std::min(max_budget, run.cum_cost.back() / scale);
      }
    }
    const auto steps = static_cast<std::size_t>(std::floor(max_budget));
    for (std::size_t b = 1; b <= steps; ++b) budgets[e].push_back(static_cast<double>(b));
    std::vector<double> curve(budgets[e].size(), 0.0);
    const double weight = 1.0 / static_cast<double>(P * config.runs);
    for (std::size_t p = 0; p < P; ++p) {
      const double scale = policies[p].cost > 0.0 ? policies[p].cost : 1.0;
      for (const auto& run : result(p, e).curves.runs) {
        const auto errors = error_at_budgets(run, budgets[e], scale);
        for (std::size_t i = 0; i < curve.size(); ++i) {
          curve[i] += weight * errors[i] / policies[p].normalizer;
        }
      }
    }
    cost_curves[e] = std::move(curve);
  }

  for (std::size_t e = 0; e < E; ++e) {
    EstimatorSummary s;
    s.name = names[e];
    std::vector<double> rel_var, rel_cost, exact_var, exact_cost;
    for (std::size_t p = 0; p < P; ++p) {
      std::vector<double> var_e, var_on, cost_e, cost_on;
      for (const auto& run : result(p, e).curves.runs) {
        var_e.push_back(run.sample_variance);
        cost_e.push_back(run.mean_cost);
      }
      for (const auto& run : result(p, on).curves.runs) {
        var_on.push_back(run.sample_variance);
        cost_on.push_back(run.mean_cost);
      }
      rel_var.push_back(safe_ratio(mean(var_e), mean(var_on)));
      rel_cost.push_back(safe_ratio(mean(cost_e), mean(cost_on)));
      exact_var.push_back(safe_ratio(result(p, e).exact_variance, result(p, on).exact_variance));
      exact_cost.push_back(safe_ratio(result(p, e).behavior_cost, policies[p].cost));
    }
    s.relative_variance = mean(rel_var);
    s.relative_cost = mean(rel_cost);
    s.exact_relative_variance = mean(exact_var);
    s.exact_relative_cost = mean(exact_cost);
    s.final_normalized_error = mean_curves[e].back();
    s.cost_to_accuracy = e == on ? summary.reference_budget
                                 : first_budget_reaching(budgets[e], cost_curves[e],
                                                         summary.reference_error);
    summary.estimators.push_back(s);
  }

  // ---- outputs ----
  write_config_copy(config);
  write_stream_file(config, "policies.csv", [&](std::ostream& o) {
    o << "policy,true_value,target_cost,normalizer\n";
    for (std::size_t p = 0; p < P; ++p) {
      o << p << ',' << format_double(policies[p].value) << ',' << format_double(policies[p].cost)
        << ',' << format_double(policies[p].normalizer) << '\n';
    }
  });
  write_stream_file(config, "behaviors.csv", [&](std::ostream& o) {
    o << "estimator,policy,behavior_cost,exact_variance\n";
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t p = 0; p < P; ++p) {
        o << names[e] << ',' << p << ',' << format_double(result(p, e).behavior_cost) << ','
          << format_double(result(p, e).exact_variance) << '\n';
      }
    }
  });
  write_stream_file(config, "runs.csv", [&](std::ostream& o) {
    o << "estimator,policy,run,mean_return,sample_variance,mean_cost,final_abs_error,final_cum_cost\n";
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t p = 0; p < P; ++p) {
        const auto& runs = result(p, e).curves.runs;
        for (std::size_t r = 0; r < runs.size(); ++r) {
          o << names[e] << ',' << p << ',' << r << ',' << format_double(runs[r].mean_return) << ','
            << format_double(runs[r].sample_variance) << ',' << format_double(runs[r].mean_cost)
            << ',' << format_double(runs[r].abs_error.back()) << ','
            << format_double(runs[r].cum_cost.back()) << '\n';
        }
      }
    }
  });
  write_stream_file(config, "curves.csv", [&](std::ostream& o) {
    o << "estimator,policy,run,episode,abs_error,cum_cost\n";
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t p = 0; p < P; ++p) {
        const auto& runs = result(p, e).curves.runs;
        for (std::size_t r = 0; r < runs.size(); ++r) {
          for (std::size_t i = 0; i < runs[r].abs_error.size(); ++i) {
            o << names[e] << ',' << p << ',' << r << ',' << i + 1 << ','
              << format_double(runs[r].abs_error[i]) << ',' << format_double(runs[r].cum_cost[i])
              << '\n';
          }
        }
      }
    }
  });
  write_stream_file(config, "mean_curves.csv", [&](std::ostream& o) {
    o << "estimator,episode,normalized_error\n";
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t i = 0; i < mean_curves[e].size(); ++i) {
        o << names[e] << ',' << i + 1 << ',' << format_double(mean_curves[e][i]) << '\n';
      }
    }
  });
  write_stream_file(config, "cost_curves.csv", [&](std::ostream& o) {
    o << "estimator,budget,normalized_error\n";
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t i = 0; i < budgets[e].size(); ++i) {
        o << names[e] << ',' << format_double(budgets[e][i]) << ','
          << format_double(cost_curves[e][i]) << '\n';
      }
    }
  });

  ordered_json doc = {{"format", "safe_ope.evaluation_summary"},
                      {"version", tool_version()},
                      {"target_policies", P},
                      {"runs", config.runs},
                      {"episodes", config.episodes},
                      {"epsilon", config.epsilon},
                      {"values", config.values == ValueMode::kExact ? "exact" : "offline"},
                      {"definitions",
                       {{"normalized_error",
                         "|running mean - J(target)| divided by the on-policy error after one "
                         "episode (run-averaged, per target policy), then averaged over policies "
                         "and runs"},
                        {"relative_variance",
                         "per policy: mean over runs of the sample variance of single-episode "
                         "estimates, divided by the on-policy value; averaged over policies"},
                        {"relative_cost",
                         "per policy: mean executed trajectory cost divided by the on-policy "
                         "value; averaged over policies"},
                        {"cost_to_accuracy",
                         "budgets in units of J^c(target); error held constant between episode "
                         "completions; first integer budget at which the averaged normalized "
                         "error is at or below the on-policy error after the last episode; the "
                         "on-policy entry is its own final budget (the episode count); -1 if "
                         "never reached"}}},
                      {"reference_error", summary.reference_error},
                      {"reference_budget", summary.reference_budget}};
  ordered_json rows = ordered_json::array();
  for (const auto& s : summary.estimators) {
    rows.push_back({{"estimator", s.name},
                    {"relative_variance", s.relative_variance},
                    {"relative_cost", s.relative_cost},
                    {"exact_relative_variance", std::isnan(s.exact_relative_variance)
                                                    ? ordered_json(nullptr)
                                                    : ordered_json(s.exact_relative_variance)},
                    {"exact_relative_cost", s.exact_relative_cost},
                    {"final_normalized_error", s.final_normalized_error},
                    {"cost_to_accuracy", s.cost_to_accuracy}});
    log << "  " << s.name << ": relative_variance=" << format_double(s.relative_variance)
        << " relative_cost=" << format_double(s.relative_cost)
        << " cost_to_accuracy=" << format_double(s.cost_to_accuracy) << '\n';
  }
  doc["estimators"] = std::move(rows);
  write_json_file(config, "summary.json", doc);
  return summary;
}

int run_evaluate(const ExperimentConfig& config, std::ostream& log) {
  evaluate_protocol(config, log);
  return kSuccess;
}

}  // namespace safe_ope::harness
