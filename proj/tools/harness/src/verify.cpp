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
#include <map>
#include <sstream>

#include "harness/commands.hpp"
#include "output.hpp"
#include "safe_ope/envs.hpp"
#include "safe_ope/errors.hpp"
#include "safe_ope/exact_dp.hpp"
#include "safe_ope/io.hpp"
#include "safe_ope/oracle.hpp"

namespace safe_ope::harness {

namespace {

constexpr double kIdentityTol = 1e-8;
constexpr double kMeanTol = 1e-10;
constexpr double kSlack = 1e-9;

// Relative difference; below magnitude 1e-6 it turns into an absolute
// difference scaled by 1e6, so round-off on near-zero variances stays at 1e-14.
double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

class Recorder {
 public:
  // `measure` is the violation size (0 when the check holds); `ok` decides.
  void record(const std::string& name, bool ok, double measure, const std::string& where) {
    CheckResult& c = checks_[name];
    if (c.name.empty()) {
      c.name = name;
      order_.push_back(name);
    }
    ++c.cases;
    c.worst = std::max(c.worst, measure);
    if (!ok && c.passed) {
      c.passed = false;
      c.first_failure = where;
    }
  }

  std::vector<CheckResult> results() const {
    std::vector<CheckResult> out;
    for (const auto& name : order_) out.push_back(checks_.at(name));
    return out;
  }

 private:
  std::map<std::string, CheckResult> checks_;
  std::vector<std::string> order_;
};

// Zeroes, at t = 0, the target-supported action with the largest |pi q| in
// every state and renormalizes: a behavior outside the enlarged set.
TabularPolicy corrupt(const TabularPolicy& target, const Array3& q) {
  TabularPolicy out = target;
  for (std::size_t s = 0; s < target.num_states(); ++s) {
    auto row = out.row(0, s);
    if (row.size() < 2) continue;
    std::size_t worst = 0;
    for (std::size_t a = 1; a < row.size(); ++a) {
      if (std::abs(target(0, s, a) * q(0, s, a)) > std::abs(target(0, s, worst) * q(0, s, worst))) {
        worst = a;
      }
    }
    const double removed = row[worst];
    row[worst] = 0.0;
    for (double& x : row) x /= 1.0 - removed;
  }
  return out;
}

struct Candidate {
  std::string label;
  TabularPolicy behavior;
  double epsilon = -1.0;  // >= 0 for constrained behaviors
  bool odi = false;
};

void check_model(const Cmdp& model, const TabularPolicy& target, const ExperimentConfig& config,
                 const std::string& tag, Recorder& rec) {
  const auto tables = compute_value_tables(model, target, target);
  const double value = initial_value(model, tables.v);
  const double target_cost = initial_value(model, tables.v_cost);

  std::vector<double> epsilons = {config.epsilon, 0.0, 0.1, 1.0};
  std::sort(epsilons.begin(), epsilons.end());
  epsilons.erase(std::unique(epsilons.begin(), epsilons.end()), epsilons.end());

  std::vector<Candidate> candidates;
  if (config.verify_corrupt) {
    candidates.push_back({"corrupted", corrupt(target, tables.q)});
  } else {
    candidates.push_back({"target", target});
    candidates.push_back({"odi", synthesize_odi(model, target), -1.0, true});
    SynthesisOptions opts;
    opts.solver = config.solver;
    opts.constraint_costs = config.constraint_costs;
    for (double eps : epsilons) {
      opts.safety.epsilon = eps;
      const auto result = synthesize(ExactValueSource(model, target), target, opts);
      for (const auto& d : result.diagnostics) {
        const auto& sol = d.solution;
        const double scale = std::max(1.0, std::abs(sol.objective));
        rec.record("solver_certificate",
                   sol.constraint_slack >= -config.solver.constraint_slack_tolerance &&
                       sol.complementary_slackness <= 1e-8 * scale,
                   std::max(-sol.constraint_slack, sol.complementary_slackness / scale),
                   tag + " t=" + std::to_string(d.t) + " s=" + std::to_string(d.s));
      }
      std::ostringstream label;
      label << "scope(eps=" << eps << ")";
      candidates.push_back({label.str(), result.policy, eps});
    }
  }

  const auto oracle_variances_target = oracle::conditional_variances(model, target, target);
  std::map<std::string, Array2> closed_forms;
  std::map<std::string, double> totals;
  for (const auto& cand : candidates) {
    const std::string where = tag + " behavior=" + cand.label;
    rec.record("enlarged_set", in_enlarged_space(model, target, cand.behavior, tables), 0.0, where);

    const auto exact = oracle::exact_moments(model, target, cand.behavior);
    const double bias = std::abs(exact.mean - value);
    rec.record("unbiasedness", bias <= kMeanTol, bias, where);

    Array2 closed;
    try {
      closed = pdis_variance_closed_form(model, target, cand.behavior);
    } catch (const SupportError& e) {
      rec.record("variance_identity", false, std::numeric_limits<double>::infinity(),
                 where + ": " + e.what());
      continue;
    }
    const auto enumerated = oracle::conditional_variances(model, target, cand.behavior);
    double worst = 0.0;
    for (std::size_t i = 0; i < closed.data().size(); ++i) {
      worst = std::max(worst, relative_gap(closed.data()[i], enumerated.data()[i]));
    }
    rec.record("variance_identity", worst <= kIdentityTol, worst, where);
    const double total = pdis_total_variance(model, target, cand.behavior);
    const double total_gap = relative_gap(total, exact.variance);
    rec.record("total_variance_identity", total_gap <= kIdentityTol, total_gap, where);

    const auto r_tilde = extended_reward(model, target, cand.behavior, tables.q);
    const auto by_definition = oracle::extended_reward_by_definition(model, target, cand.behavior);
    double r_gap = 0.0;
    for (std::size_t i = 0; i < r_tilde.data().size(); ++i) {
      r_gap = std::max(r_gap, relative_gap(r_tilde.data()[i], by_definition.data()[i]));
    }
    rec.record("extended_reward_identity", r_gap <= kIdentityTol, r_gap, where);

    if (cand.epsilon >= 0.0) {
      const double excess = exact.cost - ((1.0 + cand.epsilon) * target_cost + kSlack);
      rec.record("safety", excess <= 0.0, std::max(0.0, excess), where);
      double worst_increase = 0.0;
      for (std::size_t i = 0; i < closed.data().size(); ++i) {
        worst_increase =
            std::max(worst_increase, closed.data()[i] - oracle_variances_target.data()[i]);
      }
      worst_increase = std::max(worst_increase, total - totals["target"]);
      rec.record("variance_reduction", worst_increase <= kSlack, std::max(0.0, worst_increase),
                 where);
      if (closed_forms.count("odi")) {
        double odi_excess = totals["odi"] - total;
        for (std::size_t i = 0; i < closed.data().size(); ++i) {
          odi_excess = std::max(odi_excess, closed_forms["odi"].data()[i] - closed.data()[i]);
        }
        rec.record("odi_dominance", odi_excess <= kSlack, std::max(0.0, odi_excess), where);
      }
    }
    closed_forms[cand.label] = closed;
    totals[cand.label] = total;
  }
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

VerifyReport verify_suite(const ExperimentConfig& config) {
  validate(config);
  Recorder rec;
  VerifyReport report;
  try {
    if (config.environment == EnvironmentKind::kRandom) {
      for (std::size_t i = 0; i < config.verify_models; ++i) {
        const std::uint64_t seed = config.verify_seed + i;
        const Cmdp model = make_random_cmdp(config.random_states, config.random_actions,
                                            config.random_horizon, seed);
        const TabularPolicy target = config.target_file.empty()
                                         ? make_target_policies(model, 1, seed)[0]
                                         : io::load_policy(config.target_file);
        check_model(model, target, config, "model seed " + std::to_string(seed), rec);
        ++report.models;
      }
    } else {
      const Workspace w = build_workspace(config);
      for (std::size_t k = 0; k < w.targets.size(); ++k) {
        check_model(w.model, w.targets[k], config, "target " + std::to_string(k), rec);
      }
      report.models = 1;
    }
  } catch (const OracleCapError& e) {
    throw ConfigError(std::string("model too large for the enumeration oracle: ") + e.what());
  }
  report.checks = rec.results();
  return report;
}

int run_verify(const ExperimentConfig& config, std::ostream& log) {
  const VerifyReport report = verify_suite(config);
  ordered_json checks = ordered_json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"cases", c.cases},
                      {"worst", std::isinf(c.worst) ? ordered_json("inf") : ordered_json(c.worst)},
                      {"first_failure", c.first_failure}});
    log << (c.passed ? "PASS " : "FAIL ") << c.name << " cases=" << c.cases
        << " worst=" << format_double(c.worst);
    if (!c.passed) log << " first_failure=\"" << c.first_failure << '"';
    log << '\n';
  }
  write_config_copy(config);
  write_json_file(config, "verify_report.json",
                  {{"format", "safe_ope.verify_report"},
                   {"version", tool_version()},
                   {"models", report.models},
                   {"passed", report.passed()},
                   {"checks", std::move(checks)}});
  log << "verify: " << report.models << " model(s), " << (report.passed() ? "all checks passed" : "FAILED")
      << '\n';
  return report.passed() ? kSuccess : kCheckFailure;
}

}  // namespace safe_ope::harness
