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

#include "safe_ope/io.hpp"

#include <fstream>

#include "json.hpp"
#include "safe_ope/errors.hpp"

namespace safe_ope::io {

using nlohmann::json;

namespace {

json to_nested(const Array2& x) {
  json out = json::array();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    out.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

json to_nested(const Array3& x) {
  json out = json::array();
  for (std::size_t i = 0; i < x.dim0(); ++i) {
    json block = json::array();
    for (std::size_t j = 0; j < x.dim1(); ++j) {
      const auto row = x.row(i, j);
      block.push_back(std::vector<double>(row.begin(), row.end()));
    }
    out.push_back(std::move(block));
  }
  return out;
}

const json& field(const json& doc, const char* key) {
  if (!doc.contains(key)) throw InvariantError(std::string("missing JSON key '") + key + "'");
  return doc.at(key);
}

std::size_t positive_size(const json& doc, const char* key) {
  const json& v = field(doc, key);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw InvariantError(std::string("'") + key + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

void check_length(const json& v, std::size_t n, const std::string& what) {
  if (!v.is_array() || v.size() != n) {
    throw ShapeError(what + " must be an array of length " + std::to_string(n));
  }
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw InvariantError(what + " must be numeric");
  return v.get<double>();
}

Array2 from_nested2(const json& v, std::size_t d0, std::size_t d1, const std::string& what) {
  check_length(v, d0, what);
  Array2 out(d0, d1);
  for (std::size_t i = 0; i < d0; ++i) {
    check_length(v[i], d1, what + "[" + std::to_string(i) + "]");
    for (std::size_t j = 0; j < d1; ++j) out(i, j) = number(v[i][j], what);
  }
  return out;
}

Array3 from_nested3(const json& v, std::size_t d0, std::size_t d1, std::size_t d2,
                    const std::string& what) {
  check_length(v, d0, what);
  Array3 out(d0, d1, d2);
  for (std::size_t i = 0; i < d0; ++i) {
    check_length(v[i], d1, what + "[" + std::to_string(i) + "]");
    for (std::size_t j = 0; j < d1; ++j) {
      check_length(v[i][j], d2, what + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
      for (std::size_t k = 0; k < d2; ++k) out(i, j, k) = number(v[i][j][k], what);
    }
  }
  return out;
}

json header(const char* format) { return json{{"format", format}, {"version", kFormatVersion}}; }

json parse(std::istream& in, const char* format) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvariantError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != format) {
    throw InvariantError(std::string("expected a JSON document with format '") + format + "'");
  }
  if (doc.value("version", 0) != kFormatVersion) {
    throw InvariantError("unsupported format version");
  }
  return doc;
}

void emit(const json& doc, std::ostream& out) { out << doc.dump(1) << '\n'; }

}  // namespace

void write_json(const Cmdp& m, std::ostream& out) {
  json doc = header("safe_ope.cmdp");
  doc["num_states"] = m.num_states;
  doc["num_actions"] = m.num_actions;
  doc["horizon"] = m.horizon;
  doc["transition"] = to_nested(m.transition);
  doc["reward"] = to_nested(m.reward);
  doc["cost"] = to_nested(m.cost);
  doc["initial_dist"] = m.initial_dist;
  emit(doc, out);
}

void write_json(const TabularPolicy& p, std::ostream& out) {
  json doc = header("safe_ope.policy");
  doc["horizon"] = p.horizon();
  doc["num_states"] = p.num_states();
  doc["num_actions"] = p.num_actions();
  doc["probs"] = to_nested(p.probs());
  emit(doc, out);
}

void write_json(const ValueTables& v, std::ostream& out) {
  json doc = header("safe_ope.values");
  doc["horizon"] = v.q.dim0();
  doc["num_states"] = v.q.dim1();
  doc["num_actions"] = v.q.dim2();
  doc["q"] = to_nested(v.q);
  doc["v"] = to_nested(v.v);
  doc["q_cost"] = to_nested(v.q_cost);
  doc["v_cost"] = to_nested(v.v_cost);
  doc["nu"] = to_nested(v.nu);
  doc["r_tilde"] = to_nested(v.r_tilde);
  emit(doc, out);
}

void write_json(const OfflineDataset& d, std::ostream& out) {
  json doc = header("safe_ope.dataset");
  doc["horizon"] = d.horizon();
  doc["num_states"] = d.num_states();
  doc["num_actions"] = d.num_actions();
  json tuples = json::array();
  for (const auto& x : d.tuples()) tuples.push_back(json::array({x.t, x.s, x.a, x.r, x.c, x.s_next}));
  doc["tuples"] = std::move(tuples);
  emit(doc, out);
}

void write_diagnostics_json(const SynthesisResult& result, std::ostream& out) {
  json states = json::array();
  for (const auto& d : result.diagnostics) {
    const auto& s = d.solution;
    states.push_back({{"t", d.t},
                      {"s", d.s},
                      {"fallback", d.fallback},
                      {"threshold", d.threshold},
                      {"objective", s.objective},
                      {"constraint_value", s.constraint_value},
                      {"constraint_slack", s.constraint_slack},
                      {"lambda", s.lambda},
                      {"nu", s.nu},
                      {"sink_action", s.sink_action == kNoAction ? json(nullptr) : json(s.sink_action)},
                      {"outer_iterations", s.outer_iterations},
                      {"inner_iterations", s.inner_iterations},
                      {"stationarity_residual", s.stationarity_residual},
                      {"complementary_slackness", s.complementary_slackness},
                      {"duality_gap", s.duality_gap}});
  }
  json doc = header("safe_ope.synthesis_report");
  doc["states"] = std::move(states);
  emit(doc, out);
}

Cmdp read_cmdp(std::istream& in) {
  const json doc = parse(in, "safe_ope.cmdp");
  Cmdp m;
  m.num_states = positive_size(doc, "num_states");
  m.num_actions = positive_size(doc, "num_actions");
  m.horizon = positive_size(doc, "horizon");
  m.transition = from_nested3(field(doc, "transition"), m.num_states, m.num_actions, m.num_states,
                              "transition");
  m.reward = from_nested2(field(doc, "reward"), m.num_states, m.num_actions, "reward");
  m.cost = from_nested2(field(doc, "cost"), m.num_states, m.num_actions, "cost");
  const json& init = field(doc, "initial_dist");
  check_length(init, m.num_states, "initial_dist");
  for (const auto& x : init) m.initial_dist.push_back(number(x, "initial_dist"));
  require_valid(m);
  return m;
}

TabularPolicy read_policy(std::istream& in) {
  const json doc = parse(in, "safe_ope.policy");
  const std::size_t T = positive_size(doc, "horizon");
  const std::size_t S = positive_size(doc, "num_states");
  const std::size_t A = positive_size(doc, "num_actions");
  TabularPolicy p(from_nested3(field(doc, "probs"), T, S, A, "probs"));
  const auto violations = validate_policy(p);
  if (!violations.empty()) throw InvariantError("invalid policy: " + violations.front());
  return p;
}

ValueTables read_values(std::istream& in) {
  const json doc = parse(in, "safe_ope.values");
  const std::size_t T = positive_size(doc, "horizon");
  const std::size_t S = positive_size(doc, "num_states");
  const std::size_t A = positive_size(doc, "num_actions");
  ValueTables v;
  v.q = from_nested3(field(doc, "q"), T, S, A, "q");
  v.v = from_nested2(field(doc, "v"), T, S, "v");
  v.q_cost = from_nested3(field(doc, "q_cost"), T, S, A, "q_cost");
  v.v_cost = from_nested2(field(doc, "v_cost"), T, S, "v_cost");
  v.nu = from_nested3(field(doc, "nu"), T, S, A, "nu");
  v.r_tilde = from_nested3(field(doc, "r_tilde"), T, S, A, "r_tilde");
  for (double x : v.nu.data()) {
    if (x < -kZeroTolerance) throw InvariantError("nu must be nonnegative");
  }
  for (double x : v.r_tilde.data()) {
    if (x < -kZeroTolerance) throw InvariantError("r_tilde must be nonnegative");
  }
  return v;
}

OfflineDataset read_dataset(std::istream& in) {
  const json doc = parse(in, "safe_ope.dataset");
  OfflineDataset d(positive_size(doc, "horizon"), positive_size(doc, "num_states"),
                   positive_size(doc, "num_actions"));
  const json& tuples = field(doc, "tuples");
  if (!tuples.is_array()) throw InvariantError("'tuples' must be an array");
  for (const auto& x : tuples) {
    check_length(x, 6, "tuple");
    for (int i : {0, 1, 2, 5}) {
      if (!x[i].is_number_integer() || x[i].get<long long>() < 0) {
        throw InvariantError("tuple indices must be nonnegative integers");
      }
    }
    d.add({x[0].get<std::size_t>(), x[1].get<std::size_t>(), x[2].get<std::size_t>(),
           number(x[3], "r"), number(x[4], "c"), x[5].get<std::size_t>()});
  }
  return d;
}

namespace {
std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return in;
}
}  // namespace

Cmdp load_cmdp(const std::string& path) {
  auto in = open(path);
  return read_cmdp(in);
}

TabularPolicy load_policy(const std::string& path) {
  auto in = open(path);
  return read_policy(in);
}

}  // namespace safe_ope::io
