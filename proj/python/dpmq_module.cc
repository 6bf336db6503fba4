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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "dpmq/audit.h"
#include "dpmq/core.h"
#include "dpmq/harness.h"
#include "dpmq/mechanisms.h"
#include "dpmq/utility.h"

namespace py = pybind11;

namespace dpmq {
namespace {

void ThrowIfError(const absl::Status& status) {
  if (status.ok()) return;
  const std::string message(status.message());
  switch (status.code()) {
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
    case absl::StatusCode::kFailedPrecondition:
      throw py::value_error(message);
    case absl::StatusCode::kNotFound:
      throw py::key_error(message);
    default:
      throw std::runtime_error(message);
  }
}

template <typename T>
T Value(absl::StatusOr<T> v) {
  ThrowIfError(v.status());
  return *std::move(v);
}

Dataset MakeData(std::vector<double> values, std::pair<double, double> bounds) {
  return Value(Dataset::Create(
      std::move(values), Value(Bounds::Create(bounds.first, bounds.second))));
}

// Explicit probabilities, or the m-uniform grid when only m is given.
QuantileSpec MakeSpec(std::optional<std::vector<double>> p,
                      std::optional<int> m) {
  if (p.has_value()) {
    QuantileSpec spec = Value(QuantileSpec::Create(*p));
    if (m.has_value() && *m != spec.m()) {
      throw py::value_error("m does not match the length of p");
    }
    return spec;
  }
  const int count = m.value_or(1);
  if (count < 1) throw py::value_error("m must be at least 1");
  return QuantileSpec::Uniform(count);
}

using Estimator = absl::StatusOr<QuantileEstimate> (*)(const Dataset&,
                                                       const QuantileSpec&,
                                                       PrivacyBudget, Rng&);

template <Estimator kEstimator>
QuantileEstimate Estimate(std::vector<double> values,
                          std::pair<double, double> bounds, double epsilon,
                          std::optional<std::vector<double>> p,
                          std::optional<int> m, uint64_t seed) {
  const Dataset x = MakeData(std::move(values), bounds);
  const QuantileSpec spec = MakeSpec(std::move(p), m);
  const PrivacyBudget budget = Value(PrivacyBudget::Create(epsilon));
  py::gil_scoped_release release;
  Rng rng = MakeRng(seed);
  return Value(kEstimator(x, spec, budget, rng));
}

QuantileEstimate HsEstimate(std::vector<double> values,
                            std::pair<double, double> bounds, double epsilon,
                            std::optional<std::vector<double>> p,
                            std::optional<int> m, std::optional<double> sigma,
                            const std::string& noise_family, uint64_t seed) {
  const Dataset x = MakeData(std::move(values), bounds);
  const QuantileSpec spec = MakeSpec(std::move(p), m);
  const PrivacyBudget budget = Value(PrivacyBudget::Create(epsilon));
  const double stddev =
      sigma.value_or(RecommendedSigma(x.size(), epsilon, spec.m(), x.bounds()));
  const NoiseConfig noise = Value(
      NoiseConfig::FromStddev(Value(ParseNoiseFamily(noise_family)), stddev));
  py::gil_scoped_release release;
  Rng rng = MakeRng(seed);
  return Value(HsJointExp(x, spec, budget, noise, rng));
}

py::dict EpsilonEffReport(std::vector<double> values,
                          std::pair<double, double> bounds,
                          const std::string& mechanism, double epsilon,
                          std::optional<std::vector<double>> p,
                          std::optional<int> m, int64_t neighbor_grid,
                          int64_t output_grid, int64_t mc_samples,
                          int64_t bootstrap, const std::string& noise_family,
                          double noise_std, uint64_t seed, int threads) {
  const Dataset x = MakeData(std::move(values), bounds);
  const QuantileSpec spec = MakeSpec(std::move(p), m);
  AuditConfig config;
  config.neighbor_grid_size = neighbor_grid;
  config.output_grid_size = output_grid;
  config.mc_samples = mc_samples;
  config.bootstrap_resamples = bootstrap;
  config.noise_family = Value(ParseNoiseFamily(noise_family));
  config.noise_stddev = noise_std;
  config.seed = seed;
  config.threads = threads;
  const AuditedMechanism mech = Value(ParseAuditedMechanism(mechanism));
  const PrivacyBudget budget = Value(PrivacyBudget::Create(epsilon));
  absl::StatusOr<PrivacyLossReport> report;
  {
    py::gil_scoped_release release;
    report = EpsilonEff(x, mech, budget, spec, config);
  }
  ThrowIfError(report.status());
  py::dict out;
  out["epsilon_eff"] = report->epsilon_eff;
  out["std_error"] = report->std_error;
  out["argmax_neighbor"] =
      std::vector<double>(report->argmax_neighbor.values().begin(),
                          report->argmax_neighbor.values().end());
  out["argmax_output"] = report->argmax_output;
  return out;
}

py::list Sweep(std::vector<double> values, std::pair<double, double> bounds,
               const std::vector<std::string>& mechanisms,
               const std::vector<std::string>& noise_families,
               std::optional<std::vector<double>> noise_ratios,
               bool include_recommended, const std::vector<int>& m_values,
               const std::vector<double>& eps_values, int64_t replications,
               uint64_t seed, int threads, const std::string& dataset_id) {
  const Dataset x = MakeData(std::move(values), bounds);
  SweepConfig config;
  config.dataset_id = dataset_id;
  config.mechanisms.clear();
  for (const std::string& name : mechanisms) {
    config.mechanisms.push_back(Value(ParseSweepMechanism(name)));
  }
  config.noise_families.clear();
  for (const std::string& name : noise_families) {
    config.noise_families.push_back(Value(ParseNoiseFamily(name)));
  }
  if (noise_ratios.has_value()) config.noise_ratios = *noise_ratios;
  config.include_recommended = include_recommended;
  config.m_values = m_values;
  config.eps_values = eps_values;
  config.replications = replications;
  config.seed = seed;
  config.threads = threads;
  absl::StatusOr<std::vector<SweepRow>> rows;
  {
    py::gil_scoped_release release;
    rows = RunSweep(x, config);
  }
  ThrowIfError(rows.status());
  py::list out;
  for (const SweepRow& row : *rows) {
    py::dict d;
    d["dataset_id"] = row.dataset_id;
    d["mechanism"] = row.mechanism;
    d["noise_family"] = row.noise_family;
    d["noise_ratio"] = row.noise_ratio;
    d["m"] = row.m;
    d["eps"] = row.eps;
    d["mse_mean"] = row.mse_mean;
    d["mse_std"] = row.mse_std;
    d["linf_mean"] = row.linf_mean;
    d["runtime_ms"] = row.runtime_ms;
    out.append(std::move(d));
  }
  return out;
}

}  // namespace
}  // namespace dpmq

PYBIND11_MODULE(_dpmq, m) {
  using namespace dpmq;
  using py::arg;
  m.doc() = "Differentially private joint estimation of several quantiles.";

  m.def("joint_exp", &Estimate<JointExp>, arg("values"), arg("bounds"),
        arg("epsilon"), arg("p") = py::none(), arg("m") = py::none(),
        arg("seed") = 0,
        "Samples all quantiles jointly from the JointExp mechanism.");
  m.def("inverse_sensitivity", &Estimate<InverseSensitivityMechanism>,
        arg("values"), arg("bounds"), arg("epsilon"), arg("p") = py::none(),
        arg("m") = py::none(), arg("seed") = 0,
        "Samples from the inverse-sensitivity mechanism.");
  m.def("composed_single_quantiles", &Estimate<ComposedSingleQuantiles>,
        arg("values"), arg("bounds"), arg("epsilon"), arg("p") = py::none(),
        arg("m") = py::none(), arg("seed") = 0,
        "Estimates each quantile separately with epsilon / m.");
  m.def(
      "exponential_quantile",
      [](std::vector<double> values, std::pair<double, double> bounds,
         double epsilon, double p, uint64_t seed) {
        const Dataset x = MakeData(std::move(values), bounds);
        const PrivacyBudget budget = Value(PrivacyBudget::Create(epsilon));
        Rng rng = MakeRng(seed);
        return Value(ExponentialQuantile(x, p, budget, rng));
      },
      arg("values"), arg("bounds"), arg("epsilon"), arg("p"), arg("seed") = 0,
      "Single-quantile exponential mechanism.");
  m.def("hs_joint_exp", &HsEstimate, arg("values"), arg("bounds"),
        arg("epsilon"), arg("p") = py::none(), arg("m") = py::none(),
        arg("sigma") = py::none(), arg("noise_family") = "uniform",
        arg("seed") = 0,
        "JointExp on noisy data. sigma is the absolute noise standard "
        "deviation; None selects recommended_sigma.");
  m.def(
      "recommended_sigma",
      [](int64_t n, double epsilon, int m, std::pair<double, double> bounds) {
        return RecommendedSigma(
            n, epsilon, m, Value(Bounds::Create(bounds.first, bounds.second)));
      },
      arg("n"), arg("epsilon"), arg("m"), arg("bounds"));
  m.def(
      "empirical_quantiles",
      [](std::vector<double> values, std::pair<double, double> bounds,
         std::optional<std::vector<double>> p, std::optional<int> m) {
        return Value(EmpiricalQuantiles(MakeData(std::move(values), bounds),
                                        MakeSpec(std::move(p), m)));
      },
      arg("values"), arg("bounds"), arg("p") = py::none(),
      arg("m") = py::none());
  m.def(
      "joint_exp_utility",
      [](std::vector<double> values, std::pair<double, double> bounds,
         std::vector<double> q, std::vector<double> p) {
        return JointExpUtility(MakeData(std::move(values), bounds), q,
                               MakeSpec(std::move(p), std::nullopt));
      },
      arg("values"), arg("bounds"), arg("q"), arg("p"));
  m.def(
      "inverse_sensitivity_utility",
      [](std::vector<double> values, std::pair<double, double> bounds,
         std::vector<double> q, std::vector<double> p, bool exact) {
        const Dataset x = MakeData(std::move(values), bounds);
        const QuantileSpec spec = MakeSpec(std::move(p), std::nullopt);
        return exact ? Value(InverseSensitivityUtility(x, q, spec))
                     : SimplifiedInverseSensitivityUtility(x, q, spec);
      },
      arg("values"), arg("bounds"), arg("q"), arg("p"), arg("exact") = false,
      "Simplified utility, or the exact one for collision-free q.");
  m.def(
      "hamming_distance",
      [](std::vector<double> x, std::vector<double> y) {
        return Value(HammingDistance(std::span<const double>(x),
                                     std::span<const double>(y)));
      },
      arg("x"), arg("y"));
  m.def("epsilon_eff", &EpsilonEffReport, arg("values"), arg("bounds"),
        arg("mechanism"), arg("epsilon"), arg("p") = py::none(),
        arg("m") = py::none(), arg("neighbor_grid") = 64,
        arg("output_grid") = 64, arg("mc_samples") = 2000,
        arg("bootstrap") = 200, arg("noise_family") = "laplace",
        arg("noise_std") = 1e-2, arg("seed") = 0, arg("threads") = 1,
        "Empirical privacy loss over discretized neighbors and outputs.");
  m.def(
      "sweep", &Sweep, arg("values"), arg("bounds"),
      arg("mechanisms") = std::vector<std::string>{"joint_exp", "hs_joint_exp"},
      arg("noise_families") = std::vector<std::string>{"uniform"},
      arg("noise_ratios") = py::none(), arg("include_recommended") = false,
      arg("m_values") = std::vector<int>{5},
      arg("eps_values") = std::vector<double>{1.0}, arg("replications") = 100,
      arg("seed") = 0, arg("threads") = 1, arg("dataset_id") = "data",
      "Monte Carlo accuracy sweep; one dict per cell.");
}
