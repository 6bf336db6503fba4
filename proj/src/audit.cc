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

#include "dpmq/audit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dpmq/parallel.h"

namespace dpmq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MechanismFlavor ExactFlavor(AuditedMechanism mechanism) {
  return mechanism == AuditedMechanism::kInverseSensitivity
             ? MechanismFlavor::kInverseSensitivity
             : MechanismFlavor::kJointExp;
}

// Noise draws are indexed by position, so X and any neighbor built from it
// see the same perturbation on every shared entry.
std::vector<std::vector<double>> NoiseDraws(int64_t n, const Bounds& bounds,
                                            const AuditConfig& config,
                                            NoiseConfig* effective) {
  const NoiseConfig requested =
      *NoiseConfig::FromStddev(config.noise_family, config.noise_stddev);
  *effective = EffectiveNoise(bounds, requested);
  std::vector<std::vector<double>> draws(config.mc_samples);
  for (int64_t k = 0; k < config.mc_samples; ++k) {
    Rng rng = MakeRng(config.seed, static_cast<uint64_t>(k));
    draws[k] = GenerateNoise(n, *effective, rng);
  }
  return draws;
}

// log L from per-draw log-densities; +inf when the denominator vanishes.
double LogRatio(std::span<const double> num, std::span<const double> den) {
  const double log_den = LogSumExp(den);
  if (log_den == -kInf) return kInf;
  return LogSumExp(num) - log_den;
}

// Interior points lower + k (upper - lower) / size, k = 1..size-1.
std::vector<double> InteriorGrid(const Bounds& domain, int64_t size) {
  std::vector<double> g;
  for (int64_t k = 1; k < size; ++k) {
    g.push_back(domain.lower() + domain.width() * static_cast<double>(k) /
                                     static_cast<double>(size));
  }
  return g;
}

void NonDecreasingTuples(std::span<const double> points, int m,
                         QuantileEstimate& prefix, size_t start,
                         std::vector<QuantileEstimate>& out) {
  if (static_cast<int>(prefix.size()) == m) {
    out.push_back(prefix);
    return;
  }
  for (size_t k = start; k < points.size(); ++k) {
    prefix.push_back(points[k]);
    NonDecreasingTuples(points, m, prefix, k, out);
    prefix.pop_back();
  }
}

double BootstrapStdError(std::span<const double> num,
                         std::span<const double> den, int64_t resamples,
                         uint64_t seed) {
  if (num.size() <= 1 || resamples < 2) return 0.0;
  Rng rng = MakeRng(seed, 0xb007);
  std::uniform_int_distribution<size_t> pick(0, num.size() - 1);
  std::vector<double> a(num.size()), b(den.size());
  std::vector<double> stats;
  stats.reserve(resamples);
  for (int64_t r = 0; r < resamples; ++r) {
    for (size_t k = 0; k < num.size(); ++k) {
      const size_t s = pick(rng);
      a[k] = num[s];
      b[k] = den[s];
    }
    const double v = LogRatio(a, b);
    if (std::isfinite(v)) stats.push_back(v);
  }
  if (stats.size() < 2) return 0.0;
  double mean = 0;
  for (double v : stats) mean += v;
  mean /= stats.size();
  double ss = 0;
  for (double v : stats) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (stats.size() - 1));
}

}  // namespace

absl::string_view AuditedMechanismName(AuditedMechanism mechanism) {
  switch (mechanism) {
    case AuditedMechanism::kJointExp:
      return "joint_exp";
    case AuditedMechanism::kInverseSensitivity:
      return "inverse_sensitivity";
    case AuditedMechanism::kHsJointExp:
      return "hs_joint_exp";
  }
  return "unknown";
}

absl::StatusOr<AuditedMechanism> ParseAuditedMechanism(absl::string_view name) {
  if (name == "joint_exp" || name == "jointexp") {
    return AuditedMechanism::kJointExp;
  }
  if (name == "inverse_sensitivity" || name == "is") {
    return AuditedMechanism::kInverseSensitivity;
  }
  if (name == "hs_joint_exp" || name == "hsjointexp") {
    return AuditedMechanism::kHsJointExp;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("Unknown mechanism '", name, "'"));
}

absl::Status ValidateAuditConfig(const AuditConfig& config) {
  if (config.neighbor_grid_size < 2) {
    return absl::InvalidArgumentError("neighbor_grid_size must be at least 2");
  }
  if (config.output_grid_size < 1) {
    return absl::InvalidArgumentError("output_grid_size must be at least 1");
  }
  if (config.mc_samples < 1) {
    return absl::InvalidArgumentError("mc_samples must be at least 1");
  }
  if (config.bootstrap_resamples < 0) {
    return absl::InvalidArgumentError("bootstrap_resamples must be >= 0");
  }
  if (!std::isfinite(config.noise_stddev) || !(config.noise_stddev > 0)) {
    return absl::InvalidArgumentError("noise_stddev must be positive");
  }
  return absl::OkStatus();
}

std::vector<Dataset> Neighbors(const Dataset& x, int64_t grid) {
  std::vector<Dataset> out;
  if (grid < 2) return out;
  const Bounds& b = x.bounds();
  for (int64_t i = 0; i < x.size(); ++i) {
    for (int64_t k = 0; k < grid; ++k) {
      const double v = k == grid - 1
                           ? b.upper()
                           : b.lower() + b.width() * static_cast<double>(k) /
                                             static_cast<double>(grid - 1);
      if (v == x.values()[i]) continue;
      std::vector<double> y(x.values().begin(), x.values().end());
      y[i] = v;
      out.push_back(*Dataset::Create(std::move(y), b));
    }
  }
  return out;
}

std::vector<QuantileEstimate> OutputGrid(const Dataset& x, const Dataset& y,
                                         const Bounds& domain, int m,
                                         int64_t size) {
  std::vector<double> points = InteriorGrid(domain, size);
  if (m == 1) {
    std::vector<double> cuts = {domain.lower(), domain.upper()};
    for (double v : x.values()) cuts.push_back(domain.Clamp(v));
    for (double v : y.values()) cuts.push_back(domain.Clamp(v));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
      points.push_back(0.5 * (cuts[k] + cuts[k + 1]));
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<QuantileEstimate> out;
  QuantileEstimate prefix;
  NonDecreasingTuples(points, m, prefix, 0, out);
  return out;
}

absl::StatusOr<AuditDensity> AuditDensity::Create(AuditedMechanism mechanism,
                                                  const Dataset& x,
                                                  const QuantileSpec& spec,
                                                  PrivacyBudget budget,
                                                  const AuditConfig& config) {
  if (absl::Status s = ValidateAuditConfig(config); !s.ok()) return s;
  if (mechanism != AuditedMechanism::kHsJointExp) {
    absl::StatusOr<MechanismDensity> d = MechanismDensity::Create(
        ExactFlavor(mechanism), x, spec, budget.epsilon());
    if (!d.ok()) return d.status();
    std::vector<MechanismDensity> components;
    components.push_back(*std::move(d));
    return AuditDensity(std::move(components), x.bounds());
  }
  NoiseConfig effective = *NoiseConfig::Create(NoiseFamily::kUniform, 1.0);
  const std::vector<std::vector<double>> draws =
      NoiseDraws(x.size(), x.bounds(), config, &effective);
  const Bounds extended = ExtendedBounds(x.bounds(), effective);
  std::vector<MechanismDensity> components;
  components.reserve(draws.size());
  for (const std::vector<double>& w : draws) {
    std::vector<double> noisy(x.values().begin(), x.values().end());
    for (size_t k = 0; k < noisy.size(); ++k) {
      noisy[k] = extended.Clamp(noisy[k] + w[k]);
    }
    absl::StatusOr<Dataset> xt = Dataset::Create(std::move(noisy), extended);
    if (!xt.ok()) return xt.status();
    absl::StatusOr<MechanismDensity> d = MechanismDensity::Create(
        MechanismFlavor::kJointExp, *xt, spec, budget.epsilon());
    if (!d.ok()) return d.status();
    components.push_back(*std::move(d));
  }
  return AuditDensity(std::move(components), extended);
}

absl::StatusOr<std::vector<double>> AuditDensity::LogDensityPerDraw(
    std::span<const double> q) const {
  std::vector<double> out;
  out.reserve(components_.size());
  for (const MechanismDensity& d : components_) {
    absl::StatusOr<double> v = d.LogDensity(q);
    if (!v.ok()) return v.status();
    out.push_back(*v);
  }
  return out;
}

absl::StatusOr<double> AuditDensity::LogDensity(
    std::span<const double> q) const {
  absl::StatusOr<std::vector<double>> per_draw = LogDensityPerDraw(q);
  if (!per_draw.ok()) return per_draw.status();
  return LogSumExp(*per_draw) - std::log(static_cast<double>(per_draw->size()));
}

absl::StatusOr<double> LogPrivacyLoss(const Dataset& x, const Dataset& y,
                                      std::span<const double> q,
                                      AuditedMechanism mechanism,
                                      PrivacyBudget budget,
                                      const QuantileSpec& spec,
                                      const AuditConfig& config) {
  if (x.size() != y.size() || !(x.bounds() == y.bounds())) {
    return absl::InvalidArgumentError(
        "X and Y must have the same size and bounds");
  }
  absl::StatusOr<int64_t> d = HammingDistance(x, y);
  if (!d.ok()) return d.status();
  if (*d > 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("X and Y are not neighbors (distance ", *d, ")"));
  }
  absl::StatusOr<AuditDensity> fx =
      AuditDensity::Create(mechanism, x, spec, budget, config);
  if (!fx.ok()) return fx.status();
  absl::StatusOr<AuditDensity> fy =
      AuditDensity::Create(mechanism, y, spec, budget, config);
  if (!fy.ok()) return fy.status();
  absl::StatusOr<std::vector<double>> a = fx->LogDensityPerDraw(q);
  if (!a.ok()) return a.status();
  absl::StatusOr<std::vector<double>> b = fy->LogDensityPerDraw(q);
  if (!b.ok()) return b.status();
  return LogRatio(*a, *b);
}

absl::StatusOr<double> PrivacyLoss(const Dataset& x, const Dataset& y,
                                   std::span<const double> q,
                                   AuditedMechanism mechanism,
                                   PrivacyBudget budget,
                                   const QuantileSpec& spec,
                                   const AuditConfig& config) {
  absl::StatusOr<double> log_l =
      LogPrivacyLoss(x, y, q, mechanism, budget, spec, config);
  if (!log_l.ok()) return log_l.status();
  return std::exp(*log_l);
}

absl::StatusOr<PrivacyLossReport> EpsilonEff(const Dataset& x,
                                             AuditedMechanism mechanism,
                                             PrivacyBudget budget,
                                             const QuantileSpec& spec,
                                             const AuditConfig& config) {
  if (absl::Status s = ValidateAuditConfig(config); !s.ok()) return s;
  if (absl::Status s = Validate(spec, x.size()); !s.ok()) return s;
  absl::StatusOr<AuditDensity> fx =
      AuditDensity::Create(mechanism, x, spec, budget, config);
  if (!fx.ok()) return fx.status();
  const std::vector<Dataset> neighbors =
      Neighbors(x, config.neighbor_grid_size);
  if (neighbors.empty()) {
    return absl::FailedPreconditionError("X has no neighbor on the grid");
  }

  struct Best {
    double value = -kInf;
    QuantileEstimate q;
    std::vector<double> num, den;
    absl::Status status;
  };
  std::vector<Best> best(neighbors.size());
  ParallelFor(neighbors.size(), config.threads, [&](size_t k) {
    Best& out = best[k];
    absl::StatusOr<AuditDensity> fy =
        AuditDensity::Create(mechanism, neighbors[k], spec, budget, config);
    if (!fy.ok()) {
      out.status = fy.status();
      return;
    }
    for (const QuantileEstimate& q :
         OutputGrid(x, neighbors[k], fx->domain(), spec.m(),
                    config.output_grid_size)) {
      absl::StatusOr<std::vector<double>> a = fx->LogDensityPerDraw(q);
      absl::StatusOr<std::vector<double>> b = fy->LogDensityPerDraw(q);
      if (!a.ok() || !b.ok()) {
        out.status = a.ok() ? b.status() : a.status();
        return;
      }
      const double v = LogRatio(*a, *b);
      if (v > out.value) {
        out.value = v;
        out.q = q;
        out.num = *std::move(a);
        out.den = *std::move(b);
      }
    }
  });

  size_t arg = 0;
  for (size_t k = 0; k < best.size(); ++k) {
    if (!best[k].status.ok()) return best[k].status;
    if (best[k].value > best[arg].value) arg = k;
  }
  PrivacyLossReport report{best[arg].value, neighbors[arg], best[arg].q, 0.0};
  if (mechanism == AuditedMechanism::kHsJointExp) {
    report.std_error = BootstrapStdError(
        best[arg].num, best[arg].den, config.bootstrap_resamples, config.seed);
  }
  if (!std::isfinite(report.epsilon_eff)) {
    return absl::InternalError(
        "Privacy loss is unbounded on the grid: an output has zero density "
        "under a neighbor");
  }
  return report;
}

}  // namespace dpmq
