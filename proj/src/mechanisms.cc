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

#include "dpmq/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "absl/strings/str_cat.h"

namespace dpmq {

absl::StatusOr<QuantileEstimate> SampleMechanism(MechanismFlavor flavor,
                                                 const Dataset& x,
                                                 const QuantileSpec& spec,
                                                 PrivacyBudget budget,
                                                 Rng& rng) {
  const Dataset sorted = x.Sorted();
  absl::StatusOr<BlockSampler> sampler =
      BlockSampler::Create(flavor, sorted, spec, budget.epsilon());
  if (!sampler.ok()) return sampler.status();
  const BlockIndex block = sampler->Sample(rng);
  return SampleWithinBlock(block, sorted, rng);
}

absl::StatusOr<QuantileEstimate> JointExp(const Dataset& x,
                                          const QuantileSpec& spec,
                                          PrivacyBudget budget, Rng& rng) {
  return SampleMechanism(MechanismFlavor::kJointExp, x, spec, budget, rng);
}

absl::StatusOr<QuantileEstimate> InverseSensitivityMechanism(
    const Dataset& x, const QuantileSpec& spec, PrivacyBudget budget,
    Rng& rng) {
  return SampleMechanism(MechanismFlavor::kInverseSensitivity, x, spec, budget,
                         rng);
}

absl::StatusOr<double> ExponentialQuantile(const Dataset& x, double p,
                                           PrivacyBudget budget, Rng& rng) {
  absl::StatusOr<QuantileSpec> spec = QuantileSpec::Create({p});
  if (!spec.ok()) return spec.status();
  absl::StatusOr<QuantileEstimate> q = JointExp(x, *spec, budget, rng);
  if (!q.ok()) return q.status();
  return q->front();
}

absl::StatusOr<QuantileEstimate> ComposedSingleQuantiles(
    const Dataset& x, const QuantileSpec& spec, PrivacyBudget budget,
    Rng& rng) {
  if (absl::Status s = Validate(spec, x.size()); !s.ok()) return s;
  absl::StatusOr<PrivacyBudget> share =
      PrivacyBudget::Create(budget.epsilon() / spec.m());
  if (!share.ok()) return share.status();
  QuantileEstimate q;
  q.reserve(spec.m());
  for (double p : spec.probabilities()) {
    absl::StatusOr<double> v = ExponentialQuantile(x, p, *share, rng);
    if (!v.ok()) return v.status();
    q.push_back(*v);
  }
  std::sort(q.begin(), q.end());
  return q;
}

absl::string_view NoiseFamilyName(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::kUniform:
      return "uniform";
    case NoiseFamily::kLaplace:
      return "laplace";
    case NoiseFamily::kGaussian:
      return "gaussian";
  }
  return "unknown";
}

absl::StatusOr<NoiseFamily> ParseNoiseFamily(absl::string_view name) {
  if (name == "uniform") return NoiseFamily::kUniform;
  if (name == "laplace") return NoiseFamily::kLaplace;
  if (name == "gaussian") return NoiseFamily::kGaussian;
  return absl::InvalidArgumentError(
      absl::StrCat("Unknown noise family '", name,
                   "' (expected uniform, laplace or gaussian)"));
}

absl::StatusOr<NoiseConfig> NoiseConfig::Create(NoiseFamily family,
                                                double scale) {
  if (!std::isfinite(scale) || !(scale > 0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Noise scale must be finite and positive, got ", scale));
  }
  return NoiseConfig(family, scale);
}

absl::StatusOr<NoiseConfig> NoiseConfig::FromStddev(NoiseFamily family,
                                                    double stddev) {
  switch (family) {
    case NoiseFamily::kUniform:
      return Create(family, std::sqrt(3.0) * stddev);
    case NoiseFamily::kLaplace:
      return Create(family, stddev / std::sqrt(2.0));
    case NoiseFamily::kGaussian:
      return Create(family, stddev);
  }
  return absl::InvalidArgumentError("Unknown noise family");
}

double NoiseConfig::stddev() const {
  switch (family_) {
    case NoiseFamily::kUniform:
      return scale_ / std::sqrt(3.0);
    case NoiseFamily::kLaplace:
      return scale_ * std::sqrt(2.0);
    case NoiseFamily::kGaussian:
      return scale_;
  }
  return scale_;
}

std::vector<double> GenerateNoise(int64_t n, const NoiseConfig& noise,
                                  Rng& rng) {
  std::vector<double> w(n);
  switch (noise.family()) {
    case NoiseFamily::kUniform: {
      std::uniform_real_distribution<double> dist(-noise.scale(),
                                                  noise.scale());
      for (double& v : w) v = dist(rng);
      break;
    }
    case NoiseFamily::kLaplace: {
      std::exponential_distribution<double> dist(1.0);
      for (double& v : w) v = noise.scale() * (dist(rng) - dist(rng));
      break;
    }
    case NoiseFamily::kGaussian: {
      std::normal_distribution<double> dist(0.0, noise.scale());
      for (double& v : w) v = dist(rng);
      break;
    }
  }
  return w;
}

double MinimumNoiseScale(const Bounds& bounds) {
  const double magnitude = std::max(
      {std::abs(bounds.lower()), std::abs(bounds.upper()), bounds.width()});
  return 1e-12 * magnitude;
}

NoiseConfig EffectiveNoise(const Bounds& bounds, const NoiseConfig& noise) {
  return *NoiseConfig::Create(
      noise.family(), std::max(noise.scale(), MinimumNoiseScale(bounds)));
}

Bounds ExtendedBounds(const Bounds& bounds, const NoiseConfig& noise) {
  const double reach = noise.family() == NoiseFamily::kUniform
                           ? noise.scale()
                           : 5.0 * noise.scale();
  return *Bounds::Create(bounds.lower() - reach, bounds.upper() + reach);
}

absl::StatusOr<Dataset> NoisyProjectedDataset(const Dataset& x,
                                              const NoiseConfig& noise,
                                              Rng& rng) {
  const NoiseConfig effective = EffectiveNoise(x.bounds(), noise);
  const Bounds extended = ExtendedBounds(x.bounds(), effective);
  const std::vector<double> w = GenerateNoise(x.size(), effective, rng);
  std::vector<double> noisy(x.values().begin(), x.values().end());
  for (size_t k = 0; k < noisy.size(); ++k) {
    noisy[k] = extended.Clamp(noisy[k] + w[k]);
  }
  return Dataset::Create(std::move(noisy), extended);
}

absl::StatusOr<QuantileEstimate> HsJointExp(const Dataset& x,
                                            const QuantileSpec& spec,
                                            PrivacyBudget budget,
                                            const NoiseConfig& noise,
                                            Rng& rng) {
  if (absl::Status s = Validate(spec, x.size()); !s.ok()) return s;
  absl::StatusOr<Dataset> noisy = NoisyProjectedDataset(x, noise, rng);
  if (!noisy.ok()) return noisy.status();
  return JointExp(*noisy, spec, budget, rng);
}

double RecommendedSigma(int64_t n, double epsilon, int m,
                        const Bounds& bounds) {
  const double decay =
      std::exp(-static_cast<double>(n) * epsilon / (20.0 * std::sqrt(m)));
  return bounds.width() * std::min(1e-2, decay);
}

}  // namespace dpmq
