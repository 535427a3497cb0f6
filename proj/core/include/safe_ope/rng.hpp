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

#include <cstdint>
#include <span>

namespace safe_ope {

/// Counter-based SplitMix64 stream.
///
/// Output i of a stream is a fixed bijective mix of (seed + (i + 1) * gamma), so a
/// stream is fully determined by its seed and position. Independent child streams
/// for parallel work are derived with `split`, which never advances the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), counter_(0) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard exponential variate, via inversion.
  double exponential();

  /// Index drawn from a probability vector by inverse CDF. Entries must be
  /// nonnegative and sum to (about) one; rounding slack is absorbed by the last
  /// positive entry.
  std::size_t categorical(std::span<const double> probs);

  /// Child stream keyed by `stream_id`; same (seed, id) always gives the same child.
  Rng split(std::uint64_t stream_id) const;

  static std::uint64_t mix(std::uint64_t z);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace safe_ope
