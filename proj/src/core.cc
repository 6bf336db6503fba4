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

#include "dpmq/core.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"

namespace dpmq {

namespace {

uint64_t SplitMix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

uint64_t DeriveSeed(uint64_t root_seed, uint64_t stream) {
  return SplitMix64(SplitMix64(root_seed) ^ SplitMix64(~stream));
}

Rng MakeRng(uint64_t root_seed, uint64_t stream) {
  return Rng(DeriveSeed(root_seed, stream));
}

absl::StatusOr<Bounds> Bounds::Create(double lower, double upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper)) {
    return absl::InvalidArgumentError("Bounds must be finite");
  }
  if (!(lower < upper)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Lower bound ", lower, " must be below upper bound ", upper));
  }
  return Bounds(lower, upper);
}

double Bounds::Clamp(double v) const { return std::clamp(v, lower_, upper_); }

absl::StatusOr<Dataset> Dataset::Create(std::vector<double> values,
                                        Bounds bounds) {
  if (values.empty()) {
    return absl::InvalidArgumentError("Dataset must hold at least one value");
  }
  for (size_t k = 0; k < values.size(); ++k) {
    if (!bounds.Contains(values[k])) {
      return absl::InvalidArgumentError(absl::StrCat(
          "Value ", values[k], " at position ", k, " lies outside [",
          bounds.lower(), ", ", bounds.upper(), "]"));
    }
  }
  const bool sorted = std::is_sorted(values.begin(), values.end());
  return Dataset(std::move(values), bounds, sorted);
}

Dataset Dataset::Sorted() const {
  if (sorted_) return *this;
  std::vector<double> v = values_;
  std::stable_sort(v.begin(), v.end());
  return Dataset(std::move(v), bounds_, true);
}

double Dataset::OrderStatistic(int64_t i) const {
  if (i <= 0) return bounds_.lower();
  if (i > size()) return bounds_.upper();
  return values_[i - 1];
}

int64_t Dataset::CountAtMost(double v) const {
  if (sorted_) {
    return std::upper_bound(values_.begin(), values_.end(), v) -
           values_.begin();
  }
  return std::count_if(values_.begin(), values_.end(),
                       [v](double x) { return x <= v; });
}

int64_t Dataset::CountBelow(double v) const {
  if (sorted_) {
    return std::lower_bound(values_.begin(), values_.end(), v) -
           values_.begin();
  }
  return std::count_if(values_.begin(), values_.end(),
                       [v](double x) { return x < v; });
}

absl::StatusOr<QuantileSpec> QuantileSpec::Create(std::vector<double> p) {
  // n = 0 disables the spacing check, which depends on the sample size.
  if (absl::Status s = ValidateQuantiles(p, 0); !s.ok()) return s;
  return QuantileSpec(std::move(p));
}

QuantileSpec QuantileSpec::Uniform(int m) {
  std::vector<double> p(m);
  for (int j = 0; j < m; ++j) p[j] = static_cast<double>(j + 1) / (m + 1);
  return QuantileSpec(std::move(p));
}

double QuantileSpec::p(int j) const {
  if (j <= 0) return 0.0;
  if (j > m()) return 1.0;
  return p_[j - 1];
}

int64_t QuantileSpec::Rank(int j, int64_t n) const {
  if (j <= 0) return 0;
  if (j > m()) return n;
  return CeilRank(static_cast<double>(n) * p_[j - 1]);
}

absl::StatusOr<PrivacyBudget> PrivacyBudget::Create(double epsilon) {
  if (!std::isfinite(epsilon) || !(epsilon > 0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Epsilon must be finite and positive, got ", epsilon));
  }
  return PrivacyBudget(epsilon);
}

int64_t CeilRank(double x) { return static_cast<int64_t>(std::ceil(x - 1e-9)); }

absl::Status ValidateQuantiles(std::span<const double> p, int64_t n) {
  if (p.empty()) {
    return absl::InvalidArgumentError("At least one quantile is required");
  }
  for (size_t j = 0; j < p.size(); ++j) {
    if (!(p[j] > 0.0 && p[j] < 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("p_", j + 1, " = ", p[j], " is not in (0, 1)"));
    }
  }
  for (size_t j = 0; j + 1 < p.size(); ++j) {
    if (!(p[j + 1] > p[j])) {
      return absl::InvalidArgumentError(
          absl::StrCat("p is not increasing at j = ", j + 1, ": p_", j + 1,
                       " = ", p[j], ", p_", j + 2, " = ", p[j + 1]));
    }
  }
  if (n > 0) {
    for (size_t j = 0; j + 1 < p.size(); ++j) {
      const double spacing = static_cast<double>(n) * (p[j + 1] - p[j]);
      if (spacing < 1.0 - 1e-9) {
        return absl::InvalidArgumentError(
            absl::StrCat("Spacing violated at j = ", j + 1, ": n (p_", j + 2,
                         " - p_", j + 1, ") = ", spacing, " < 1"));
      }
    }
  }
  return absl::OkStatus();
}

absl::Status Validate(const QuantileSpec& spec, int64_t n) {
  return ValidateQuantiles(spec.probabilities(), n);
}

absl::StatusOr<QuantileEstimate> EmpiricalQuantiles(const Dataset& x,
                                                    const QuantileSpec& spec) {
  if (absl::Status s = Validate(spec, x.size()); !s.ok()) return s;
  const Dataset sorted = x.Sorted();
  QuantileEstimate q(spec.m());
  for (int j = 1; j <= spec.m(); ++j) {
    q[j - 1] = sorted.OrderStatistic(spec.Rank(j, x.size()));
  }
  return q;
}

absl::StatusOr<int64_t> HammingDistance(std::span<const double> x,
                                        std::span<const double> y) {
  if (x.size() != y.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Datasets differ in length: ", x.size(), " vs ", y.size()));
  }
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  int64_t common = 0;
  size_t i = 0;
  size_t j = 0;
  while (i < xs.size() && j < ys.size()) {
    if (xs[i] < ys[j]) {
      ++i;
    } else if (ys[j] < xs[i]) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<int64_t>(x.size()) - common;
}

absl::StatusOr<int64_t> HammingDistance(const Dataset& x, const Dataset& y) {
  return HammingDistance(x.values(), y.values());
}

}  // namespace dpmq
