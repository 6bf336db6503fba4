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

#ifndef DPMQ_UTILITY_H_
#define DPMQ_UTILITY_H_

#include <cstdint>
#include <span>

#include "absl/status/statusor.h"
#include "dpmq/core.h"

namespace dpmq {

// Utilities score a candidate q for the dataset X. They are non-positive;
// minus the value is a count of penalized points (a multiple of 1/2).
//
// Bin i is (q_{i-1}, q_i] with q_0 = a and q_{m+1} = b, except that the first
// bin is closed at a. Every point of X then falls in exactly one bin, which
// keeps the utilities consistent with the block densities of the sampler.

// -1/2 sum_{i=1}^{m+1} |n (p_i - p_{i-1}) - #bin_i|.
double JointExpUtility(const Dataset& x, std::span<const double> q,
                       const QuantileSpec& spec);

// Inverse-sensitivity utility up to a Lebesgue-null set of candidates:
// -[1/2 sum_{i=1}^{m+1} |delta_i| + sum_{i=1}^{m} 1{delta_i >= 0}]
// with delta_i = #bin_i - (ceil(n p_i) - ceil(n p_{i-1})).
double SimplifiedInverseSensitivityUtility(const Dataset& x,
                                           std::span<const double> q,
                                           const QuantileSpec& spec);

// Closed form of the inverse sensitivity for candidates that are strictly
// increasing and share no point with X. Returns InvalidArgument otherwise.
absl::StatusOr<double> InverseSensitivityUtility(const Dataset& x,
                                                 std::span<const double> q,
                                                 const QuantileSpec& spec);

// Minimal number of entries of X to substitute so that the empirical
// quantiles of the result equal q, found by exhaustive search over removed
// sub-multisets and replacement multisets. Exponential in n; meant as a test
// oracle for n <= 8.
absl::StatusOr<int64_t> BruteForceInverseSensitivity(const Dataset& x,
                                                     std::span<const double> q,
                                                     const QuantileSpec& spec);

}  // namespace dpmq

#endif  // DPMQ_UTILITY_H_
