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

#include "safe_ope/offline_fqe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "safe_ope/errors.hpp"

namespace safe_ope {

OfflineDataset::OfflineDataset(std::size_t horizon, std::size_t num_states,
                               std::size_t num_actions)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      counts_(horizon * num_states * num_actions, 0) {}

void OfflineDataset::add(const OfflineTuple& x) {
  if (x.t >= horizon_ || x.s >= num_states_ || x.a >= num_actions_ || x.s_next >= num_states_) {
    std::ostringstream msg;
    msg << "offline tuple index out of range: (t=" << x.t << ", s=" << x.s << ", a=" << x.a
        << ", s_next=" << x.s_next << ")";
    throw InvariantError(msg.str());
  }
  if (!std::isfinite(x.r) || !std::isfinite(x.c) || x.c < 0.0) {
    throw InvariantError("offline tuple has a non-finite reward or a negative cost");
  }
  tuples_.push_back(x);
  ++counts_[(x.t * num_states_ + x.s) * num_actions_ + x.a];
}

OfflineDataset generate_offline_dataset(const Cmdp& model,
                                        std::span<const TabularPolicy> policies,
                                        std::size_t episodes_per_policy, Rng& rng,
                                        double keep_fraction) {
  require_valid(model);
  if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
    throw ConfigError("keep_fraction must lie in [0, 1]");
  }
  OfflineDataset out(model.horizon, model.num_states, model.num_actions);
  for (const auto& policy : policies) {
    require_valid(model, policy);
    for (std::size_t e = 0; e < episodes_per_policy; ++e) {
      std::size_t s = rng.categorical(model.initial_dist);
      for (std::size_t t = 0; t < model.horizon; ++t) {
        const std::size_t a = rng.categorical(policy.row(t, s));
        const std::size_t s_next = rng.categorical(model.next_state_probs(s, a));
        const bool keep = keep_fraction >= 1.0 || rng.uniform() < keep_fraction;
        if (keep) out.add({t, s, a, model.reward(s, a), model.cost(s, a), s_next});
        s = s_next;
      }
    }
  }
  return out;
}

EmpiricalModel::EmpiricalModel(const OfflineDataset& dataset)
    : horizon_(dataset.horizon()),
      num_states_(dataset.num_states()),
      num_actions_(dataset.num_actions()),
      cells_(horizon_ * num_states_ * num_actions_) {
  std::vector<std::map<std::size_t, std::size_t>> successors(cells_.size());
  for (const auto& x : dataset.tuples()) {
    const std::size_t idx = (x.t * num_states_ + x.s) * num_actions_ + x.a;
    Cell& c = cells_[idx];
    ++c.n;
    c.sum_r += x.r;
    c.sum_r2 += x.r * x.r;
    c.sum_c += x.c;
    ++successors[idx][x.s_next];
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    cells_[i].successors.assign(successors[i].begin(), successors[i].end());
  }
}

double EmpiricalModel::mean_reward(std::size_t t, std::size_t s, std::size_t a) const {
  const Cell& c = cell(t, s, a);
  return c.n ? c.sum_r / static_cast<double>(c.n) : 0.0;
}

double EmpiricalModel::mean_squared_reward(std::size_t t, std::size_t s, std::size_t a) const {
  const Cell& c = cell(t, s, a);
  return c.n ? c.sum_r2 / static_cast<double>(c.n) : 0.0;
}

double EmpiricalModel::mean_cost(std::size_t t, std::size_t s, std::size_t a) const {
  const Cell& c = cell(t, s, a);
  return c.n ? c.sum_c / static_cast<double>(c.n) : 0.0;
}

namespace {

void require_policy_dims(const EmpiricalModel& m, const TabularPolicy& policy) {
  if (policy.horizon() != m.horizon() || policy.num_states() != m.num_states() ||
      policy.num_actions() != m.num_actions()) {
    throw ShapeError("policy shape does not match the offline dataset");
  }
}

// Fills r~_hat(t, ., .) from r~_hat(t + 1, ., .).
void fqe_extended_reward_step(const EmpiricalModel& m, const TabularPolicy& target,
                              const TabularPolicy& future_behavior, const Array3& q_hat,
                              std::size_t t, Array3& r_tilde) {
  const std::size_t S = m.num_states(), A = m.num_actions();
  std::vector<double> continuation;
  if (t + 1 < m.horizon()) {
    continuation.resize(S);
    for (std::size_t sn = 0; sn < S; ++sn) {
      try {
        continuation[sn] = weighted_second_moment(target.row(t + 1, sn),
                                                  future_behavior.row(t + 1, sn),
                                                  r_tilde.row(t + 1, sn));
      } catch (const SupportError& e) {
        std::ostringstream msg;
        msg << "estimated extended reward at (t+1=" << t + 1 << ", s'=" << sn << "): " << e.what();
        throw SupportError(msg.str());
      }
    }
  }
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      if (m.count(t, s, a) == 0) {
        r_tilde(t, s, a) = 0.0;
        continue;
      }
      double value = m.mean_squared_reward(t, s, a);
      if (t + 1 < m.horizon()) {
        value = 2.0 * q_hat(t, s, a) * m.mean_reward(t, s, a) - value +
                m.mean_over_successors(t, s, a, [&](std::size_t sn) { return continuation[sn]; });
      }
      const double q = q_hat(t, s, a);
      r_tilde(t, s, a) = std::max(value, q * q);
    }
  }
}

}  // namespace

ActionValues fqe_values(const EmpiricalModel& m, const TabularPolicy& target, Signal signal) {
  require_policy_dims(m, target);
  const std::size_t T = m.horizon(), S = m.num_states(), A = m.num_actions();
  ActionValues out{Array3(T, S, A), Array2(T, S)};
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double v = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        double q = 0.0;
        if (m.count(t, s, a) > 0) {
          q = m.mean_signal(signal, t, s, a);
          if (t + 1 < T) {
            q += m.mean_over_successors(t, s, a, [&](std::size_t sn) { return out.v(t + 1, sn); });
          }
        }
        out.q(t, s, a) = q;
        v += target(t, s, a) * q;
      }
      out.v(t, s) = v;
    }
  }
  return out;
}

ActionValues fqe_values(const OfflineDataset& dataset, const TabularPolicy& target,
                        Signal signal) {
  return fqe_values(EmpiricalModel(dataset), target, signal);
}

Array3 fqe_extended_reward(const OfflineDataset& dataset, const TabularPolicy& target,
                           const TabularPolicy& future_behavior, const Array3& q_hat) {
  const EmpiricalModel m(dataset);
  require_policy_dims(m, target);
  require_policy_dims(m, future_behavior);
  Array3 r_tilde(m.horizon(), m.num_states(), m.num_actions());
  for (std::size_t t = m.horizon(); t-- > 0;) {
    fqe_extended_reward_step(m, target, future_behavior, q_hat, t, r_tilde);
  }
  return r_tilde;
}

FqeValueSource::FqeValueSource(const OfflineDataset& dataset, const TabularPolicy& target)
    : empirical_(dataset) {
  require_policy_dims(empirical_, target);
  if (!validate_policy(target).empty()) throw InvariantError("invalid target policy");
  auto rewards = fqe_values(empirical_, target, Signal::kReward);
  auto costs = fqe_values(empirical_, target, Signal::kCost);
  q_ = std::move(rewards.q);
  q_cost_ = std::move(costs.q);
  v_cost_ = std::move(costs.v);
}

void FqeValueSource::extended_reward_step(const TabularPolicy& target,
                                          const TabularPolicy& future_behavior, std::size_t t,
                                          Array3& r_tilde) const {
  fqe_extended_reward_step(empirical_, target, future_behavior, q_, t, r_tilde);
}

void FqeValueSource::cost_q_step(std::size_t t, const Array2& v_cost_future,
                                 Array3& q_cost) const {
  const std::size_t S = num_states(), A = num_actions();
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      double value = 0.0;
      if (empirical_.count(t, s, a) > 0) {
        value = empirical_.mean_cost(t, s, a);
        if (t + 1 < horizon()) {
          value += empirical_.mean_over_successors(
              t, s, a, [&](std::size_t sn) { return v_cost_future(t + 1, sn); });
        }
      }
      q_cost(t, s, a) = value;
    }
  }
}

bool FqeValueSource::state_supported(std::size_t t, std::size_t s,
                                     std::span<const double> target_row) const {
  for (std::size_t a = 0; a < target_row.size(); ++a) {
    if (target_row[a] > 0.0 && empirical_.count(t, s, a) == 0) return false;
  }
  return true;
}

void write_dataset_csv(const OfflineDataset& dataset, std::ostream& out) {
  out.precision(17);
  out << "t,s,a,r,c,s_next\n";
  for (const auto& x : dataset.tuples()) {
    out << x.t << ',' << x.s << ',' << x.a << ',' << x.r << ',' << x.c << ',' << x.s_next << '\n';
  }
}

namespace {

template <class T>
T parse_field(const std::string& field, std::size_t line_no) {
  T value{};
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw InvariantError("dataset CSV line " + std::to_string(line_no) + ": cannot parse '" +
                         field + "'");
  }
  return value;
}

}  // namespace

OfflineDataset read_dataset_csv(std::istream& in, std::size_t horizon, std::size_t num_states,
                                std::size_t num_actions) {
  OfflineDataset out(horizon, num_states, num_actions);
  std::string line;
  if (!std::getline(in, line) || line != "t,s,a,r,c,s_next") {
    throw InvariantError("dataset CSV must start with the header t,s,a,r,c,s_next");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 6) {
      throw InvariantError("dataset CSV line " + std::to_string(line_no) + ": expected 6 fields");
    }
    OfflineTuple x;
    x.t = parse_field<std::size_t>(fields[0], line_no);
    x.s = parse_field<std::size_t>(fields[1], line_no);
    x.a = parse_field<std::size_t>(fields[2], line_no);
    x.r = parse_field<double>(fields[3], line_no);
    x.c = parse_field<double>(fields[4], line_no);
    x.s_next = parse_field<std::size_t>(fields[5], line_no);
    out.add(x);
  }
  return out;
}

}  // namespace safe_ope
