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

#include <istream>
#include <ostream>
#include <string>

#include "safe_ope/cmdp.hpp"
#include "safe_ope/exact_dp.hpp"
#include "safe_ope/offline_fqe.hpp"
#include "safe_ope/synthesis.hpp"

namespace safe_ope::io {

// JSON documents carry "format" and "version" keys. Tensors are nested arrays
// in row-major order:
//
//   safe_ope.cmdp    num_states, num_actions, horizon,
//                    transition[s][a][s'], reward[s][a], cost[s][a], initial_dist[s]
//   safe_ope.policy  horizon, num_states, num_actions, probs[t][s][a]
//   safe_ope.values  horizon, num_states, num_actions,
//                    q, q_cost, nu, r_tilde as [t][s][a]; v, v_cost as [t][s]
//   safe_ope.dataset horizon, num_states, num_actions,
//                    tuples: [[t, s, a, r, c, s_next], ...]
//
// Readers reject unknown formats and re-validate every invariant.

inline constexpr int kFormatVersion = 1;

void write_json(const Cmdp& model, std::ostream& out);
void write_json(const TabularPolicy& policy, std::ostream& out);
void write_json(const ValueTables& values, std::ostream& out);
void write_json(const OfflineDataset& dataset, std::ostream& out);

/// Per-(t, s) solver diagnostics of a synthesis run.
void write_diagnostics_json(const SynthesisResult& result, std::ostream& out);

Cmdp read_cmdp(std::istream& in);
TabularPolicy read_policy(std::istream& in);
ValueTables read_values(std::istream& in);
OfflineDataset read_dataset(std::istream& in);

Cmdp load_cmdp(const std::string& path);
TabularPolicy load_policy(const std::string& path);

}  // namespace safe_ope::io
