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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "boost/math/special_functions/gamma.hpp"
#include "dpmq/audit.h"
#include "dpmq/cli.h"
#include "dpmq/core.h"
#include "dpmq/harness.h"
#include "dpmq/mechanisms.h"
#include "dpmq/sampler.h"
#include "dpmq/utility.h"

namespace dpmq {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

Dataset Data(std::vector<double> v, double lo, double hi) {
  return *Dataset::Create(std::move(v), *Bounds::Create(lo, hi));
}

std::vector<double> GridValues(std::mt19937_64& rng, int n, int levels) {
  std::uniform_int_distribution<int> level(0, levels);
  std::vector<double> v(n);
  for (double& x : v) x = static_cast<double>(level(rng)) / levels;
  return v;
}

QuantileSpec RandomSpec(std::mt19937_64& rng, int m, int64_t n) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> p(m);
    for (double& x : p) x = unif(rng);
    std::sort(p.begin(), p.end());
    absl::StatusOr<QuantileSpec> spec = QuantileSpec::Create(p);
    if (spec.ok() && Validate(*spec, n).ok()) return *spec;
  }
  return QuantileSpec::Uniform(m);
}

double KsPValue(double d, int64_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double KsStatistic(std::vector<double> sample,
                   const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (size_t k = 0; k < sample.size(); ++k) {
    const double f = cdf(sample[k]);
    d = std::max({d, (k + 1) / n - f, f - k / n});
  }
  return d;
}

double ChiSquarePValue(const std::vector<int64_t>& observed,
                       const std::vector<double>& probabilities) {
  int64_t total = std::accumulate(observed.begin(), observed.end(), int64_t{0});
  double stat = 0, pooled_expected = 0;
  int64_t pooled_observed = 0;
  int cells = 0;
  for (size_t k = 0; k < observed.size(); ++k) {
    const double e = probabilities[k] * total;
    if (e < 5) {
      pooled_expected += e;
      pooled_observed += observed[k];
      continue;
    }
    stat += (observed[k] - e) * (observed[k] - e) / e;
    ++cells;
  }
  if (pooled_expected > 0) {
    stat += (pooled_observed - pooled_expected) *
            (pooled_observed - pooled_expected) / pooled_expected;
    ++cells;
  }
  if (cells < 2) return 1.0;
  return boost::math::gamma_q((cells - 1) / 2.0, stat / 2.0);
}

double Mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t k = v.size() / 2;
  return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

double SquaredError(const QuantileEstimate& q, const QuantileEstimate& ref) {
  double s = 0;
  for (size_t j = 0; j < q.size(); ++j) s += (q[j] - ref[j]) * (q[j] - ref[j]);
  return s / q.size();
}

Outcome InverseSensitivityOracle() {
  const auto start = Clock::now();
  const VerifyResult r = VerifyInverseSensitivity(6, 2);
  const double t = Seconds(start);
  return {r.ok() && t < 600,
          absl::StrFormat("%d comparisons, %d mismatches, %.1f s", r.checks,
                          r.failures, t)};
}

Outcome SamplerCorrectness() {
  const VerifyResult z = VerifySamplerNormalizers(8, 2, 200, 2);
  std::mt19937_64 gen(5);
  int chi_pass = 0;
  double worst = 1;
  for (int t = 0; t < 20; ++t) {
    const int m = 1 + t % 2;
    const int n = std::uniform_int_distribution<int>(m + 1, 8)(gen);
    const QuantileSpec spec = RandomSpec(gen, m, n);
    const Dataset x = Data(GridValues(gen, n, 8), 0, 1);
    const MechanismFlavor flavor = t % 4 < 2
                                       ? MechanismFlavor::kJointExp
                                       : MechanismFlavor::kInverseSensitivity;
    const double eps = std::uniform_real_distribution<double>(0.3, 3)(gen);
    const auto brute = BruteForceDistribution(flavor, x, spec, eps);
    const auto dp = BlockSampler::Create(flavor, x, spec, eps);
    if (!brute.ok() || !dp.ok()) return {false, "construction failed"};
    std::map<BlockIndex, size_t> index;
    std::vector<double> prob;
    for (size_t k = 0; k < brute->blocks.size(); ++k) {
      index[brute->blocks[k]] = k;
      prob.push_back(brute->Probability(k));
    }
    std::vector<int64_t> counts(prob.size(), 0);
    Rng rng = MakeRng(100 + t);
    bool valid = true;
    for (int s = 0; s < 100000; ++s) {
      auto it = index.find(dp->Sample(rng));
      if (it == index.end() || prob[it->second] == 0) {
        valid = false;
        break;
      }
      ++counts[it->second];
    }
    const double p = valid ? ChiSquarePValue(counts, prob) : 0;
    worst = std::min(worst, p);
    chi_pass += p > 0.01;
  }
  return {z.ok() && chi_pass == 20,
          absl::StrFormat("normalizers %d/%d within 1e-9; chi-square %d/20 "
                          "with p > 0.01 (min p = %.3g)",
                          z.checks - z.failures, z.checks, chi_pass, worst)};
}

std::vector<double> ConstantDataOutputs(int n, int runs,
                                        std::optional<NoiseConfig> noise,
                                        uint64_t seed) {
  const Dataset x = Data(std::vector<double>(n, 0.0), -1, 1);
  const QuantileSpec spec = *QuantileSpec::Create({0.5});
  const PrivacyBudget budget = *PrivacyBudget::Create(1);
  std::vector<double> out;
  for (int r = 0; r < runs; ++r) {
    Rng rng = MakeRng(seed, r);
    out.push_back(noise ? (*HsJointExp(x, spec, budget, *noise, rng))[0]
                        : (*JointExp(x, spec, budget, rng))[0]);
  }
  return out;
}

double MeanSquare(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s / v.size();
}

double unsmoothed_mse = 1.0 / 3;

Outcome ConstantDataFailure() {
  const std::vector<double> q = ConstantDataOutputs(100, 10000, {}, 3);
  const double d = KsStatistic(q, [](double t) { return (t + 1) / 2; });
  const double p = KsPValue(d, q.size());
  unsmoothed_mse = MeanSquare(q);
  return {p > 0.01 && std::abs(unsmoothed_mse - 1.0 / 3) <= 0.02,
          absl::StrFormat("KS p = %.3f, mean square %.4f", p, unsmoothed_mse)};
}

Outcome SmoothingBound() {
  const double alpha = std::exp(-1000.0 / 48);
  const NoiseConfig noise = *NoiseConfig::Create(NoiseFamily::kUniform, alpha);
  const double mse = MeanSquare(ConstantDataOutputs(1000, 1000, noise, 4));
  const double factor = unsmoothed_mse / mse;
  return {mse <= 1e-4 && factor > 1e3,
          absl::StrFormat("alpha = %.3g, MSE %.3g, improvement %.3g", alpha,
                          mse, factor)};
}

Outcome Sensitivity() {
  std::mt19937_64 gen(6);
  int64_t pairs = 0, triples = 0, violations = 0;
  double worst_gap = 0;
  while (pairs < 10000) {
    const int m = std::uniform_int_distribution<int>(1, 3)(gen);
    const int n = std::uniform_int_distribution<int>(m + 1, 20)(gen);
    const QuantileSpec spec = RandomSpec(gen, m, n);
    std::vector<double> x = GridValues(gen, n, 10);
    std::vector<double> y = x;
    y[std::uniform_int_distribution<int>(0, n - 1)(gen)] =
        GridValues(gen, 1, 10)[0];
    std::vector<double> q = GridValues(gen, m, 40);
    std::sort(q.begin(), q.end());
    const Dataset dx = Data(x, 0, 1), dy = Data(y, 0, 1);
    ++pairs;
    violations += std::abs(JointExpUtility(dx, q, spec) -
                           JointExpUtility(dy, q, spec)) > 1 + 1e-12;
    violations +=
        std::abs(SimplifiedInverseSensitivityUtility(dx, q, spec) -
                 SimplifiedInverseSensitivityUtility(dy, q, spec)) > 1 + 1e-12;
  }
  while (triples < 10000) {
    const int m = std::uniform_int_distribution<int>(1, 3)(gen);
    const int n = std::uniform_int_distribution<int>(m + 1, 20)(gen);
    const QuantileSpec spec = RandomSpec(gen, m, n);
    const Dataset x = Data(GridValues(gen, n, 10), 0, 1);
    std::vector<double> q = GridValues(gen, m, 40);
    std::sort(q.begin(), q.end());
    const absl::StatusOr<double> exact = InverseSensitivityUtility(x, q, spec);
    if (!exact.ok()) continue;
    ++triples;
    const double gap =
        std::abs(SimplifiedInverseSensitivityUtility(x, q, spec) - *exact);
    worst_gap = std::max(worst_gap, gap / (2.0 * (m + 1)));
    violations += gap > 2.0 * (m + 1);
  }
  return {violations == 0,
          absl::StrFormat("%d neighbor pairs, %d valid triples, %d violations, "
                          "max gap / 2(m+1) = %.2f",
                          pairs, triples, violations, worst_gap)};
}

Outcome AuditSmoke() {
  std::mt19937_64 gen(7);
  AuditConfig config;
  config.neighbor_grid_size = 64;
  config.output_grid_size = 64;
  double worst = -1e9;
  int runs = 0;
  bool ok = true;
  for (int t = 0; t < 10; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 5)(gen);
    const QuantileSpec spec = RandomSpec(gen, 1, n);
    const Dataset x = Data(GridValues(gen, n, 10), 0, 1);
    for (double eps : {0.5, 1.0, 2.0}) {
      for (AuditedMechanism mech : {AuditedMechanism::kJointExp,
                                    AuditedMechanism::kInverseSensitivity}) {
        const auto report =
            EpsilonEff(x, mech, *PrivacyBudget::Create(eps), spec, config);
        if (!report.ok())
          return {false, std::string(report.status().message())};
        ++runs;
        worst = std::max(worst, report->epsilon_eff - eps);
        ok = ok && report->epsilon_eff <= eps + 1e-6;
      }
    }
  }
  return {ok,
          absl::StrFormat("%d audits, max(eps_eff - eps) = %.4f", runs, worst)};
}

Outcome InverseSensitivityCloseness() {
  const Bounds unit = *Bounds::Create(0, 1);
  const Dataset x =
      *Generate(*ParseSyntheticSpec("uniform:0:1", 1000, 8), unit);
  const QuantileSpec spec = QuantileSpec::Uniform(5);
  const QuantileEstimate ref = *EmpiricalQuantiles(x, spec);
  auto mean_mse = [&](SweepMechanism mech) {
    const auto cell = *RunCell(x, mech, spec, 1, std::nullopt, ref, 100, 9, 1);
    double s = 0;
    for (const Metrics& m : cell) s += m.mse;
    return s / cell.size();
  };
  const double je = mean_mse(SweepMechanism::kJointExp);
  const double is = mean_mse(SweepMechanism::kInverseSensitivity);
  const double ratio = is / je;
  return {ratio <= 2 && ratio >= 0.5,
          absl::StrFormat("JointExp MSE %.3g, inverse sensitivity MSE %.3g, "
                          "ratio %.2f",
                          je, is, ratio)};
}

Outcome AtomicData() {
  const Bounds unit = *Bounds::Create(0, 1);
  const Dataset x =
      *Generate(*ParseSyntheticSpec("mixture:0@0.5/0.5~1@0.5", 1000, 10), unit);
  SweepConfig config;
  config.dataset_id = "atomic";
  config.mechanisms = {SweepMechanism::kJointExp, SweepMechanism::kHsJointExp};
  config.noise_families = {NoiseFamily::kUniform};
  config.include_recommended = true;
  config.m_values = {5};
  config.eps_values = {1};
  config.replications = 100;
  config.seed = 11;
  const auto rows = RunSweep(x, config);
  if (!rows.ok()) return {false, std::string(rows.status().message())};
  const double recommended = RecommendedSigma(1000, 1, 5, unit);
  double je = 0, best = 1e300, best_ratio = 0, at_recommended = -1;
  for (const SweepRow& row : *rows) {
    if (row.mechanism == "joint_exp") {
      je = row.mse_mean;
    } else if (row.noise_ratio == recommended) {
      at_recommended = row.mse_mean;
    } else if (row.mse_mean < best) {
      best = row.mse_mean;
      best_ratio = row.noise_ratio;
    }
  }
  return {best <= je / 10 && at_recommended >= 0 && at_recommended <= je / 2,
          absl::StrFormat("JointExp MSE %.3g, best smoothed %.3g (ratio %.3g), "
                          "recommended sigma %.3g gives %.3g",
                          je, best, best_ratio, recommended, at_recommended)};
}

Outcome Consistency() {
  const Bounds unit = *Bounds::Create(0, 1);
  const PrivacyBudget budget = *PrivacyBudget::Create(1);
  // Piecewise continuous law: uniform data, JointExp.
  const SyntheticSpec uniform_law = *ParseSyntheticSpec("uniform:0:1", 1, 0);
  const QuantileSpec spec3 = QuantileSpec::Uniform(3);
  const QuantileEstimate truth3 =
      *PopulationQuantiles(uniform_law, unit, spec3);
  std::vector<double> medians;
  for (int64_t n : {100, 1000, 10000}) {
    std::vector<double> mse;
    for (int r = 0; r < 100; ++r) {
      SyntheticSpec law = uniform_law;
      law.n = n;
      law.seed = DeriveSeed(12, r);
      const Dataset x = *Generate(law, unit);
      Rng rng = MakeRng(13, r);
      mse.push_back(SquaredError(*JointExp(x, spec3, budget, rng), truth3));
    }
    medians.push_back(Median(mse));
  }
  const bool decreasing = medians[1] < medians[0] && medians[2] < medians[1];

  // Finite mixture with a point mass: smoothed JointExp at the recommended
  // noise level.
  const SyntheticSpec mixture =
      *ParseSyntheticSpec("mixture:0.3@0.5/0.5~1@0.5", 1, 0);
  const QuantileSpec spec = *QuantileSpec::Create({0.2, 0.4, 0.7});
  const QuantileEstimate truth = *PopulationQuantiles(mixture, unit, spec);
  const int64_t n = 10000;
  const NoiseConfig noise = *NoiseConfig::FromStddev(
      NoiseFamily::kUniform, RecommendedSigma(n, 1, spec.m(), unit));
  int hits = 0;
  for (int r = 0; r < 100; ++r) {
    SyntheticSpec law = mixture;
    law.n = n;
    law.seed = DeriveSeed(14, r);
    const Dataset x = *Generate(law, unit);
    Rng rng = MakeRng(15, r);
    const QuantileEstimate q = *HsJointExp(x, spec, budget, noise, rng);
    double linf = 0;
    for (size_t j = 0; j < q.size(); ++j) {
      linf = std::max(linf, std::abs(q[j] - truth[j]));
    }
    hits += linf <= 0.05;
  }
  return {decreasing && hits >= 90,
          absl::StrFormat("median MSE %.3g > %.3g > %.3g; L-inf <= 0.05 in "
                          "%d/100 runs",
                          medians[0], medians[1], medians[2], hits)};
}

double TimeSampler(int64_t n, int m) {
  Rng data_rng = MakeRng(16);
  std::uniform_real_distribution<double> unif(0, 1);
  std::vector<double> v(n);
  for (double& y : v) y = unif(data_rng);
  const Dataset x = Data(v, 0, 1).Sorted();
  const QuantileSpec spec = QuantileSpec::Uniform(m);
  std::vector<double> times;
  for (int rep = 0; rep < 3; ++rep) {
    const auto start = Clock::now();
    const auto sampler =
        BlockSampler::Create(MechanismFlavor::kJointExp, x, spec, 1);
    Rng rng = MakeRng(17, rep);
    const BlockIndex block = sampler->Sample(rng);
    times.push_back(Seconds(start));
    if (block.size() != static_cast<size_t>(m)) return 1e9;
  }
  return Median(times);
}

Outcome Performance() {
  const double t1 = TimeSampler(100000, 10);
  const double t2 = TimeSampler(200000, 10);
  return {t1 <= 10 && t2 <= 2.5 * t1,
          absl::StrFormat("n = 1e5: %.3f s, n = 2e5: %.3f s (x%.2f)", t1, t2,
                          t2 / t1)};
}

Outcome Determinism() {
  const std::vector<std::string> args = {"sweep",
                                         "--synthetic",
                                         "earnings-like",
                                         "--n",
                                         "500",
                                         "--bounds",
                                         "0",
                                         "1",
                                         "--m",
                                         "5",
                                         "--mechanisms",
                                         "joint_exp",
                                         "inverse_sensitivity",
                                         "hs_joint_exp",
                                         "composed_baseline",
                                         "--families",
                                         "uniform",
                                         "laplace",
                                         "gaussian",
                                         "--ratios",
                                         "1e-6",
                                         "1e-3",
                                         "--reps",
                                         "20",
                                         "--seed",
                                         "18",
                                         "--threads",
                                         "2"};
  std::ostringstream a, b, err;
  const int ca = RunCli(args, a, err);
  const int cb = RunCli(args, b, err);
  const bool same = ca == 0 && cb == 0 && a.str() == b.str();
  return {same, absl::StrFormat("%d bytes per run, %s", a.str().size(),
                                same ? "identical" : "different")};
}

}  // namespace
}  // namespace dpmq

int main() {
  using dpmq::Outcome;
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"inverse sensitivity formula vs exhaustive search",
       dpmq::InverseSensitivityOracle},
      {"sampler normalizers and block frequencies", dpmq::SamplerCorrectness},
      {"uniform output on constant data", dpmq::ConstantDataFailure},
      {"smoothing on constant data", dpmq::SmoothingBound},
      {"utility sensitivity", dpmq::Sensitivity},
      {"audited privacy loss of exact mechanisms", dpmq::AuditSmoke},
      {"inverse sensitivity close to JointExp", dpmq::InverseSensitivityCloseness},
      {"smoothing on atomic data", dpmq::AtomicData},
      {"consistency", dpmq::Consistency},
      {"sampler runtime", dpmq::Performance},
      {"sweep determinism", dpmq::Determinism},
  };
  int failures = 0;
  int id = 1;
  for (const Criterion& c : criteria) {
    const auto start = dpmq::Clock::now();
    const Outcome o = c.run();
    std::printf("%s C%d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id,
                c.name, o.detail.c_str(), dpmq::Seconds(start));
    std::fflush(stdout);
    failures += !o.pass;
    ++id;
  }
  return failures == 0 ? 0 : 1;
}
