//
// Copyright 2026 The dpmq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPMQ_CORE_H_
#define DPMQ_CORE_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace dpmq {

// A vector of m non-decreasing quantile candidates.
using QuantileEstimate = std::vector<double>;

// Generator used by every randomized routine. Mechanisms never own one; the
// caller passes a handle so that replications can use independent streams.
using Rng = std::mt19937_64;

// Derives the generator for `stream` from a root seed. Distinct streams of
// the same root are decorrelated through a splitmix64 finalizer.
Rng MakeRng(uint64_t root_seed, uint64_t stream = 0);
uint64_t DeriveSeed(uint64_t root_seed, uint64_t stream);

// Known data range [a, b] of the feature space.
class Bounds {
 public:
  static absl::StatusOr<Bounds> Create(double lower, double upper);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return upper_ - lower_; }
  bool Contains(double v) const { return v >= lower_ && v <= upper_; }
  double Clamp(double v) const;

  friend bool operator==(const Bounds&, const Bounds&) = default;

 private:
  Bounds(double lower, double upper) : lower_(lower), upper_(upper) {}

  double lower_;
  double upper_;
};

// A sample of n >= 1 reals inside known bounds. Immutable once built.
//
// Order statistics are 1-indexed and follow the boundary conventions
// X_{i<=0} = a and X_{i>=n+1} = b, which are provided by OrderStatistic()
// instead of padding the storage.
class Dataset {
 public:
  static absl::StatusOr<Dataset> Create(std::vector<double> values,
                                        Bounds bounds);

  std::span<const double> values() const { return values_; }
  const Bounds& bounds() const { return bounds_; }
  int64_t size() const { return static_cast<int64_t>(values_.size()); }
  bool is_sorted() const { return sorted_; }

  // Copy with values in non-decreasing order (stable).
  Dataset Sorted() const;

  // X_(i) with the boundary conventions. Requires is_sorted().
  double OrderStatistic(int64_t i) const;

  // #{X_k <= v}. Logarithmic when sorted, linear otherwise.
  int64_t CountAtMost(double v) const;
  // #{X_k < v}.
  int64_t CountBelow(double v) const;

 private:
  Dataset(std::vector<double> values, Bounds bounds, bool sorted)
      : values_(std::move(values)), bounds_(bounds), sorted_(sorted) {}

  std::vector<double> values_;
  Bounds bounds_;
  bool sorted_;
};

// Strictly increasing probability vector p in (0,1)^m.
class QuantileSpec {
 public:
  static absl::StatusOr<QuantileSpec> Create(std::vector<double> p);
  // p_j = j / (m+1) for j = 1..m.
  static QuantileSpec Uniform(int m);

  int m() const { return static_cast<int>(p_.size()); }
  std::span<const double> probabilities() const { return p_; }

  // p_j with p_{j<=0} = 0 and p_{j>=m+1} = 1.
  double p(int j) const;

  // ceil(n p_j) with Rank(0) = 0 and Rank(m+1) = n.
  int64_t Rank(int j, int64_t n) const;

 private:
  explicit QuantileSpec(std::vector<double> p) : p_(std::move(p)) {}

  std::vector<double> p_;
};

class PrivacyBudget {
 public:
  static absl::StatusOr<PrivacyBudget> Create(double epsilon);

  double epsilon() const { return epsilon_; }

 private:
  explicit PrivacyBudget(double epsilon) : epsilon_(epsilon) {}

  double epsilon_;
};

// ceil(x) that ignores floating-point residue below 1e-9, so that for
// instance 10 * 0.7 maps to rank 7 and not 8.
int64_t CeilRank(double x);

// Checks that p is strictly increasing in (0,1) and n (p_{j+1} - p_j) >= 1.
// The error message names the first violated constraint and its index.
absl::Status ValidateQuantiles(std::span<const double> p, int64_t n);
absl::Status Validate(const QuantileSpec& spec, int64_t n);

// (X_(ceil(n p_1)), ..., X_(ceil(n p_m))).
absl::StatusOr<QuantileEstimate> EmpiricalQuantiles(const Dataset& x,
                                                    const QuantileSpec& spec);

// Minimal number of substitutions turning X into a permutation of Y.
absl::StatusOr<int64_t> HammingDistance(std::span<const double> x,
                                        std::span<const double> y);
absl::StatusOr<int64_t> HammingDistance(const Dataset& x, const Dataset& y);

}  // namespace dpmq

#endif  // DPMQ_CORE_H_
