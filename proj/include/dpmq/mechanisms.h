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

#ifndef DPMQ_MECHANISMS_H_
#define DPMQ_MECHANISMS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpmq/core.h"
#include "dpmq/sampler.h"

namespace dpmq {

// All mechanisms are pure given the generator handle. Tests use seeded
// Mersenne Twister streams; a deployment needs a cryptographically secure
// source behind the same interface for the privacy analysis to apply.

// Exponential mechanism with the JointExp utility and scale 2/eps.
absl::StatusOr<QuantileEstimate> JointExp(const Dataset& x,
                                          const QuantileSpec& spec,
                                          PrivacyBudget budget, Rng& rng);

// Exponential mechanism with the (simplified) inverse-sensitivity utility.
absl::StatusOr<QuantileEstimate> InverseSensitivityMechanism(
    const Dataset& x, const QuantileSpec& spec, PrivacyBudget budget, Rng& rng);

// Block sampling followed by uniform draws inside the block.
absl::StatusOr<QuantileEstimate> SampleMechanism(MechanismFlavor flavor,
                                                 const Dataset& x,
                                                 const QuantileSpec& spec,
                                                 PrivacyBudget budget,
                                                 Rng& rng);

// Single quantile; identical draw-for-draw to JointExp with m = 1.
absl::StatusOr<double> ExponentialQuantile(const Dataset& x, double p,
                                           PrivacyBudget budget, Rng& rng);

// m independent single-quantile estimates at eps/m each, sorted.
absl::StatusOr<QuantileEstimate> ComposedSingleQuantiles(
    const Dataset& x, const QuantileSpec& spec, PrivacyBudget budget, Rng& rng);

enum class NoiseFamily { kUniform, kLaplace, kGaussian };

absl::string_view NoiseFamilyName(NoiseFamily family);
absl::StatusOr<NoiseFamily> ParseNoiseFamily(absl::string_view name);

// Pre-processing noise. `scale` is the half-width for uniform noise, the
// Laplace scale b, or the Gaussian standard deviation.
class NoiseConfig {
 public:
  static absl::StatusOr<NoiseConfig> Create(NoiseFamily family, double scale);
  // Config whose draws have standard deviation `stddev`.
  static absl::StatusOr<NoiseConfig> FromStddev(NoiseFamily family,
                                                double stddev);

  NoiseFamily family() const { return family_; }
  double scale() const { return scale_; }
  double stddev() const;

 private:
  NoiseConfig(NoiseFamily family, double scale)
      : family_(family), scale_(scale) {}

  NoiseFamily family_;
  double scale_;
};

// n i.i.d. draws.
std::vector<double> GenerateNoise(int64_t n, const NoiseConfig& noise,
                                  Rng& rng);

// Smallest scale the smoothing step uses for data in `bounds`. Noise much
// below the spacing of doubles near the data is absorbed by rounding, which
// would leave the atoms intact; 1e-12 of the data magnitude keeps thousands
// of representable values per unit of noise.
double MinimumNoiseScale(const Bounds& bounds);

// `noise` with its scale raised to MinimumNoiseScale(bounds) when smaller.
NoiseConfig EffectiveNoise(const Bounds& bounds, const NoiseConfig& noise);

// Domain that the noisy data is projected onto: [a - alpha, b + alpha] for
// uniform noise (nothing is clipped), [a - 5s, b + 5s] otherwise.
Bounds ExtendedBounds(const Bounds& bounds, const NoiseConfig& noise);

// proj(X + w) on ExtendedBounds(x.bounds(), EffectiveNoise(...)), carrying
// those bounds.
absl::StatusOr<Dataset> NoisyProjectedDataset(const Dataset& x,
                                              const NoiseConfig& noise,
                                              Rng& rng);

// Heuristically smoothed JointExp: JointExp on proj(X + w). The output lies in
// the extended bounds of the effective noise.
absl::StatusOr<QuantileEstimate> HsJointExp(const Dataset& x,
                                            const QuantileSpec& spec,
                                            PrivacyBudget budget,
                                            const NoiseConfig& noise, Rng& rng);

// sigma = (b - a) min{1e-2, exp(-n eps / (20 sqrt(m)))}.
double RecommendedSigma(int64_t n, double epsilon, int m, const Bounds& bounds);

}  // namespace dpmq

#endif  // DPMQ_MECHANISMS_H_
