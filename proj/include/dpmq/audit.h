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

#ifndef DPMQ_AUDIT_H_
#define DPMQ_AUDIT_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpmq/core.h"
#include "dpmq/mechanisms.h"
#include "dpmq/sampler.h"

namespace dpmq {

// Empirical privacy loss. For a dataset X, a neighbor Y and an output q,
// L(X, Y, q) is the ratio of the mechanism's output densities at q, and
// eps_eff = sup_Y sup_q log L(X, Y, q) over discretized neighbors and outputs.
// Densities of JointExp and the inverse-sensitivity mechanism are exact. The
// density of HSJointExp is the Monte Carlo average, over noise draws, of the
// JointExp density on the noisy data; X and its neighbors share the same
// noise draws position by position.

enum class AuditedMechanism { kJointExp, kInverseSensitivity, kHsJointExp };

absl::string_view AuditedMechanismName(AuditedMechanism mechanism);
absl::StatusOr<AuditedMechanism> ParseAuditedMechanism(absl::string_view name);

struct AuditConfig {
  int64_t neighbor_grid_size = 64;  // replacement values per entry
  int64_t output_grid_size = 64;    // evaluation points per dimension
  int64_t mc_samples = 2000;        // noise draws per dataset (HSJointExp)
  int64_t bootstrap_resamples = 200;
  NoiseFamily noise_family = NoiseFamily::kLaplace;
  double noise_stddev = 1e-2;  // HSJointExp noise, absolute
  uint64_t seed = 0;
  int threads = 1;
};

absl::Status ValidateAuditConfig(const AuditConfig& config);

struct PrivacyLossReport {
  double epsilon_eff;
  Dataset argmax_neighbor;
  QuantileEstimate argmax_output;
  double std_error;  // 0 for exact densities
};

// Every dataset obtained by replacing one entry of X with one of `grid`
// equispaced values of [a, b]; replacements by an equal value are skipped.
std::vector<Dataset> Neighbors(const Dataset& x, int64_t grid);

// Outputs where log L is evaluated. For m = 1: midpoints of the cells cut by
// X, Y and the ends of `domain`, plus `size - 1` equispaced interior points.
// For m >= 2: non-decreasing tuples of the equispaced interior points.
// Doubling `size` yields a superset.
std::vector<QuantileEstimate> OutputGrid(const Dataset& x, const Dataset& y,
                                         const Bounds& domain, int m,
                                         int64_t size);

// Mechanism output density at arbitrary points of the output domain.
class AuditDensity {
 public:
  static absl::StatusOr<AuditDensity> Create(AuditedMechanism mechanism,
                                             const Dataset& x,
                                             const QuantileSpec& spec,
                                             PrivacyBudget budget,
                                             const AuditConfig& config);

  // Domain of the outputs (extended for HSJointExp).
  const Bounds& domain() const { return domain_; }

  absl::StatusOr<double> LogDensity(std::span<const double> q) const;
  // Per-draw log-densities (a single entry for exact mechanisms).
  absl::StatusOr<std::vector<double>> LogDensityPerDraw(
      std::span<const double> q) const;

 private:
  AuditDensity(std::vector<MechanismDensity> components, Bounds domain)
      : components_(std::move(components)), domain_(domain) {}

  std::vector<MechanismDensity> components_;
  Bounds domain_;
};

// log L(X, Y, q); +inf when the density under Y vanishes at q.
absl::StatusOr<double> LogPrivacyLoss(const Dataset& x, const Dataset& y,
                                      std::span<const double> q,
                                      AuditedMechanism mechanism,
                                      PrivacyBudget budget,
                                      const QuantileSpec& spec,
                                      const AuditConfig& config);

// L(X, Y, q) = exp(log L).
absl::StatusOr<double> PrivacyLoss(const Dataset& x, const Dataset& y,
                                   std::span<const double> q,
                                   AuditedMechanism mechanism,
                                   PrivacyBudget budget,
                                   const QuantileSpec& spec,
                                   const AuditConfig& config);

// Maximum of log L over Neighbors(X) x OutputGrid. For HSJointExp the
// standard error comes from a bootstrap over the noise draws at the argmax.
absl::StatusOr<PrivacyLossReport> EpsilonEff(const Dataset& x,
                                             AuditedMechanism mechanism,
                                             PrivacyBudget budget,
                                             const QuantileSpec& spec,
                                             const AuditConfig& config);

}  // namespace dpmq

#endif  // DPMQ_AUDIT_H_
