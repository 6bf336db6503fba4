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

#include "dpmq/cli.h"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "dpmq/audit.h"
#include "dpmq/core.h"
#include "dpmq/harness.h"
#include "dpmq/mechanisms.h"
#include "dpmq/parallel.h"

namespace dpmq {

namespace {

constexpr int kUsageError = 2;
constexpr int kFailure = 1;

struct UsageError {
  std::string message;
};

struct DataOptions {
  std::string input;
  std::string column;
  std::string synthetic;
  std::string values;  // comma-separated literal data
  int64_t n = 0;
  std::vector<double> bounds;
};

void AddDataOptions(CLI::App* app, DataOptions& d) {
  app->add_option("--input", d.input, "CSV file with the data");
  app->add_option("--col", d.column, "Column name or 0-based index");
  app->add_option("--synthetic", d.synthetic,
                  "Synthetic law: constant:V, uniform:LO:HI, gaussian:MU:SD, "
                  "mixture:LOC@W,.../LO~HI@W,..., dividends-like, "
                  "earnings-like");
  app->add_option("--n", d.n,
                  "Subsample size for --input, sample size for --synthetic");
  app->add_option("--bounds", d.bounds, "Data range LO HI")
      ->expected(2)
      ->required();
}

struct LoadedInput {
  Dataset data;
  std::string id;
  std::optional<SyntheticSpec> law;
};

absl::StatusOr<LoadedInput> LoadInput(const DataOptions& d, uint64_t seed,
                                      std::ostream& err) {
  absl::StatusOr<Bounds> bounds = Bounds::Create(d.bounds[0], d.bounds[1]);
  if (!bounds.ok()) return bounds.status();
  if (!d.values.empty()) {
    std::vector<double> v;
    for (absl::string_view s : absl::StrSplit(d.values, ',')) {
      double x;
      if (!absl::SimpleAtod(s, &x)) {
        return absl::InvalidArgumentError(
            absl::StrCat("Bad value '", s, "' in --values"));
      }
      v.push_back(x);
    }
    absl::StatusOr<Dataset> data = Dataset::Create(std::move(v), *bounds);
    if (!data.ok()) return data.status();
    return LoadedInput{*std::move(data), "values", std::nullopt};
  }
  if (!d.synthetic.empty()) {
    absl::StatusOr<SyntheticSpec> law =
        ParseSyntheticSpec(d.synthetic, d.n > 0 ? d.n : 1000, seed);
    if (!law.ok()) return law.status();
    absl::StatusOr<Dataset> data = Generate(*law, *bounds);
    if (!data.ok()) return data.status();
    return LoadedInput{*std::move(data), d.synthetic, *law};
  }
  absl::StatusOr<LoadedData> loaded =
      LoadCsv(d.input, d.column, *bounds, d.n, seed);
  if (!loaded.ok()) return loaded.status();
  if (loaded->skipped > 0 || loaded->clamped > 0) {
    err << "read " << loaded->rows << " rows: skipped " << loaded->skipped
        << " non-numeric, clamped " << loaded->clamped << " to the bounds\n";
  }
  std::string id = d.input.substr(d.input.find_last_of('/') + 1);
  if (!d.column.empty()) absl::StrAppend(&id, ":", d.column);
  return LoadedInput{loaded->data, id, std::nullopt};
}

absl::StatusOr<QuantileSpec> MakeSpec(int m, const std::vector<double>& p) {
  if (!p.empty()) return QuantileSpec::Create(p);
  if (m < 1) return absl::InvalidArgumentError("--m must be positive");
  return QuantileSpec::Uniform(m);
}

void PrintVector(std::span<const double> v, std::ostream& out) {
  for (double x : v) out << FormatDouble(x) << '\n';
}

std::string JoinValues(std::span<const double> v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(FormatDouble(x));
  return absl::StrJoin(parts, " ");
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Differentially private multiple quantile estimation", "dpmq"};
  app.require_subcommand(1);
  uint64_t seed = 0;
  int threads = DefaultThreadCount();
  app.add_option("--seed", seed, "Root seed of every random draw")
      ->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (env DPMQ_THREADS)");

  // estimate
  CLI::App* estimate = app.add_subcommand("estimate", "One mechanism run");
  DataOptions est_data;
  AddDataOptions(estimate, est_data);
  estimate->add_option("--values", est_data.values,
                       "Comma-separated data instead of a file");
  int est_m = 0;
  std::vector<double> est_p;
  double est_eps = 1.0;
  std::string est_mech = "jointexp";
  std::string est_sigma = "auto";
  std::string est_family = "uniform";
  estimate->add_option("--m", est_m, "Number of quantiles, p_j = j/(m+1)");
  estimate->add_option("--p", est_p, "Explicit probabilities");
  estimate->add_option("--eps", est_eps, "Privacy budget")
      ->capture_default_str();
  estimate
      ->add_option("--mech", est_mech, "jointexp, is, hsjointexp or composed")
      ->capture_default_str();
  estimate
      ->add_option("--sigma", est_sigma,
                   "Noise standard deviation for hsjointexp, or auto")
      ->capture_default_str();
  estimate
      ->add_option("--noise-family", est_family, "uniform, laplace or gaussian")
      ->capture_default_str();
  estimate->add_option("--seed", seed, "Root seed");

  // sweep
  CLI::App* sweep = app.add_subcommand("sweep", "Noise-level sweep to CSV");
  DataOptions sweep_data;
  AddDataOptions(sweep, sweep_data);
  std::vector<std::string> sweep_mechs = {"joint_exp", "hs_joint_exp"};
  std::vector<std::string> sweep_families = {"uniform"};
  std::vector<double> sweep_ratios;
  bool sweep_auto = false;
  std::vector<int> sweep_m = {5};
  std::vector<double> sweep_eps = {1.0};
  std::vector<double> sweep_p;
  int64_t sweep_reps = 100;
  std::string sweep_out;
  std::string sweep_reference = "empirical";
  std::string sweep_id;
  bool sweep_timing = false;
  sweep->add_option("--mechanisms", sweep_mechs,
                    "joint_exp, inverse_sensitivity, hs_joint_exp, "
                    "composed_baseline");
  sweep->add_option("--families", sweep_families, "Noise families");
  sweep->add_option("--ratios", sweep_ratios,
                    "Noise std / (b - a); default 1e-8 ... 1 log-spaced");
  sweep->add_flag("--sigma-auto", sweep_auto,
                  "Add a row at the recommended noise level");
  sweep->add_option("--m", sweep_m, "Numbers of quantiles");
  sweep->add_option("--eps", sweep_eps, "Privacy budgets");
  sweep->add_option("--p", sweep_p, "Explicit probabilities (single m)");
  sweep->add_option("--reps", sweep_reps, "Replications per cell")
      ->capture_default_str();
  sweep->add_option("--output", sweep_out, "CSV path (default stdout)");
  sweep
      ->add_option("--reference", sweep_reference,
                   "empirical or population (synthetic data only)")
      ->capture_default_str();
  sweep->add_option("--dataset-id", sweep_id, "Value of the dataset_id column");
  sweep->add_flag("--timing", sweep_timing,
                  "Fill runtime_ms (output no longer reproducible)");
  sweep->add_option("--seed", seed, "Root seed");
  sweep->add_option("--threads", threads, "Worker threads");

  // audit
  CLI::App* audit = app.add_subcommand("audit", "Empirical privacy loss");
  DataOptions audit_data;
  AddDataOptions(audit, audit_data);
  audit->add_option("--values", audit_data.values,
                    "Comma-separated data instead of a file");
  std::string audit_mech = "jointexp";
  int audit_m = 1;
  std::vector<double> audit_p;
  std::vector<double> audit_eps = {1.0};
  AuditConfig audit_cfg;
  std::string audit_family = "laplace";
  std::vector<double> audit_std = {1e-2};
  std::string audit_out;
  audit->add_option("--mech", audit_mech, "jointexp, is or hsjointexp")
      ->capture_default_str();
  audit->add_option("--m", audit_m, "Number of quantiles")
      ->capture_default_str();
  audit->add_option("--p", audit_p, "Explicit probabilities");
  audit->add_option("--eps", audit_eps, "Privacy budgets");
  audit
      ->add_option("--neighbor-grid", audit_cfg.neighbor_grid_size,
                   "Replacement values per entry")
      ->capture_default_str();
  audit
      ->add_option("--output-grid", audit_cfg.output_grid_size,
                   "Evaluation points per dimension")
      ->capture_default_str();
  audit
      ->add_option("--mc", audit_cfg.mc_samples,
                   "Noise draws per dataset (hsjointexp)")
      ->capture_default_str();
  audit
      ->add_option("--bootstrap", audit_cfg.bootstrap_resamples,
                   "Bootstrap resamples for the standard error")
      ->capture_default_str();
  audit->add_option("--noise-family", audit_family, "Noise family")
      ->capture_default_str();
  audit->add_option("--noise-std", audit_std,
                    "Noise standard deviations (absolute)");
  audit->add_option("--output", audit_out, "CSV path (default stdout)");
  audit->add_option("--seed", seed, "Root seed");
  audit->add_option("--threads", threads, "Worker threads");

  // verify
  CLI::App* verify = app.add_subcommand("verify", "Run the oracle suites");
  int max_n = 6, max_m = 2, instances = 200, trials = 10000;
  verify->add_option("--max-n", max_n, "Largest dataset size")
      ->capture_default_str();
  verify->add_option("--max-m", max_m, "Largest number of quantiles")
      ->capture_default_str();
  verify->add_option("--instances", instances, "Random sampler instances")
      ->capture_default_str();
  verify->add_option("--trials", trials, "Random sensitivity trials")
      ->capture_default_str();
  verify->add_option("--seed", seed, "Root seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  auto usage = [&](CLI::App* sub, absl::string_view message) {
    err << message << "\n" << sub->help();
    return kUsageError;
  };
  auto fail = [&](const absl::Status& status) {
    err << "error: " << status.message() << "\n";
    return kFailure;
  };

  if (*estimate) {
    if (est_data.input.empty() && est_data.synthetic.empty() &&
        est_data.values.empty()) {
      return usage(estimate, "estimate needs --input, --synthetic or --values");
    }
    absl::StatusOr<SweepMechanism> mech = ParseSweepMechanism(est_mech);
    if (!mech.ok()) return usage(estimate, mech.status().message());
    absl::StatusOr<NoiseFamily> family = ParseNoiseFamily(est_family);
    if (!family.ok()) return usage(estimate, family.status().message());
    if (est_m == 0 && est_p.empty()) est_m = 1;
    absl::StatusOr<LoadedInput> input = LoadInput(est_data, seed, err);
    if (!input.ok()) return fail(input.status());
    absl::StatusOr<QuantileSpec> spec = MakeSpec(est_m, est_p);
    if (!spec.ok()) return fail(spec.status());
    absl::StatusOr<PrivacyBudget> budget = PrivacyBudget::Create(est_eps);
    if (!budget.ok()) return fail(budget.status());
    Rng rng = MakeRng(seed, 0);
    absl::StatusOr<QuantileEstimate> q;
    switch (*mech) {
      case SweepMechanism::kJointExp:
        q = JointExp(input->data, *spec, *budget, rng);
        break;
      case SweepMechanism::kInverseSensitivity:
        q = InverseSensitivityMechanism(input->data, *spec, *budget, rng);
        break;
      case SweepMechanism::kComposedBaseline:
        q = ComposedSingleQuantiles(input->data, *spec, *budget, rng);
        break;
      case SweepMechanism::kHsJointExp: {
        double sigma;
        if (est_sigma == "auto") {
          sigma = RecommendedSigma(input->data.size(), est_eps, spec->m(),
                                   input->data.bounds());
        } else if (!absl::SimpleAtod(est_sigma, &sigma)) {
          return usage(estimate, "--sigma takes a number or 'auto'");
        }
        absl::StatusOr<NoiseConfig> noise =
            NoiseConfig::FromStddev(*family, sigma);
        if (!noise.ok()) return fail(noise.status());
        q = HsJointExp(input->data, *spec, *budget, *noise, rng);
        break;
      }
    }
    if (!q.ok()) return fail(q.status());
    PrintVector(*q, out);
    return 0;
  }

  if (*sweep) {
    if (sweep_data.input.empty() && sweep_data.synthetic.empty()) {
      return usage(sweep, "sweep needs --input or --synthetic");
    }
    SweepConfig config;
    config.mechanisms.clear();
    for (const std::string& name : sweep_mechs) {
      absl::StatusOr<SweepMechanism> mech = ParseSweepMechanism(name);
      if (!mech.ok()) return usage(sweep, mech.status().message());
      config.mechanisms.push_back(*mech);
    }
    config.noise_families.clear();
    for (const std::string& name : sweep_families) {
      absl::StatusOr<NoiseFamily> family = ParseNoiseFamily(name);
      if (!family.ok()) return usage(sweep, family.status().message());
      config.noise_families.push_back(*family);
    }
    if (!sweep_ratios.empty()) config.noise_ratios = sweep_ratios;
    config.include_recommended = sweep_auto;
    config.m_values = sweep_m;
    config.eps_values = sweep_eps;
    config.probabilities = sweep_p;
    config.replications = sweep_reps;
    config.seed = seed;
    config.threads = threads;
    config.timing = sweep_timing;
    absl::StatusOr<LoadedInput> input = LoadInput(sweep_data, seed, err);
    if (!input.ok()) return fail(input.status());
    config.dataset_id = sweep_id.empty() ? input->id : sweep_id;
    if (sweep_reference == "population") {
      if (!input->law.has_value()) {
        return usage(sweep, "--reference population needs --synthetic");
      }
      const SyntheticSpec law = *input->law;
      const Bounds bounds = input->data.bounds();
      config.reference = ReferenceMode::kPopulation;
      config.population_quantiles = [law, bounds](const QuantileSpec& spec) {
        return PopulationQuantiles(law, bounds, spec);
      };
    } else if (sweep_reference != "empirical") {
      return usage(sweep, "--reference is empirical or population");
    }
    absl::StatusOr<std::vector<SweepRow>> rows = RunSweep(input->data, config);
    if (!rows.ok()) return fail(rows.status());
    if (sweep_out.empty()) {
      WriteSweepCsv(*rows, out);
    } else {
      std::ofstream file(sweep_out, std::ios::binary);
      if (!file) return fail(absl::NotFoundError("Cannot write " + sweep_out));
      WriteSweepCsv(*rows, file);
    }
    return 0;
  }

  if (*audit) {
    if (audit_data.input.empty() && audit_data.synthetic.empty() &&
        audit_data.values.empty()) {
      return usage(audit, "audit needs --input, --synthetic or --values");
    }
    absl::StatusOr<AuditedMechanism> mech = ParseAuditedMechanism(audit_mech);
    if (!mech.ok()) return usage(audit, mech.status().message());
    absl::StatusOr<NoiseFamily> family = ParseNoiseFamily(audit_family);
    if (!family.ok()) return usage(audit, family.status().message());
    audit_cfg.noise_family = *family;
    audit_cfg.seed = seed;
    audit_cfg.threads = threads;
    if (absl::Status s = ValidateAuditConfig(audit_cfg); !s.ok()) {
      return usage(audit, s.message());
    }
    absl::StatusOr<LoadedInput> input = LoadInput(audit_data, seed, err);
    if (!input.ok()) return fail(input.status());
    absl::StatusOr<QuantileSpec> spec = MakeSpec(audit_m, audit_p);
    if (!spec.ok()) return fail(spec.status());
    std::ofstream file;
    if (!audit_out.empty()) {
      file.open(audit_out, std::ios::binary);
      if (!file) return fail(absl::NotFoundError("Cannot write " + audit_out));
    }
    std::ostream& csv = audit_out.empty() ? out : file;
    csv << "mechanism,noise_family,noise_std,eps,epsilon_eff,std_error,"
           "argmax_neighbor,argmax_output\n";
    const std::vector<double> stds = *mech == AuditedMechanism::kHsJointExp
                                         ? audit_std
                                         : std::vector<double>{0.0};
    for (double eps : audit_eps) {
      absl::StatusOr<PrivacyBudget> budget = PrivacyBudget::Create(eps);
      if (!budget.ok()) return fail(budget.status());
      for (double sd : stds) {
        AuditConfig cfg = audit_cfg;
        if (sd > 0) cfg.noise_stddev = sd;
        absl::StatusOr<PrivacyLossReport> report =
            EpsilonEff(input->data, *mech, *budget, *spec, cfg);
        if (!report.ok()) return fail(report.status());
        const bool hs = *mech == AuditedMechanism::kHsJointExp;
        csv << AuditedMechanismName(*mech) << ','
            << (hs ? NoiseFamilyName(*family) : "none") << ','
            << FormatDouble(hs ? sd : 0.0) << ',' << FormatDouble(eps) << ','
            << FormatDouble(report->epsilon_eff) << ','
            << FormatDouble(report->std_error) << ','
            << JoinValues(report->argmax_neighbor.values()) << ','
            << JoinValues(report->argmax_output) << '\n';
      }
    }
    return 0;
  }

  if (*verify) {
    if (max_n < 1 || max_m < 1 || instances < 0 || trials < 0) {
      return usage(verify, "verify limits must be positive");
    }
    const std::vector<VerifyResult> results = {
        VerifyInverseSensitivity(max_n, max_m),
        VerifySamplerNormalizers(std::max(max_n, 2), max_m, instances, seed),
        VerifySensitivity(std::max(max_n, max_m + 1), max_m, trials, seed),
    };
    bool ok = true;
    for (const VerifyResult& r : results) {
      out << (r.ok() ? "PASS " : "FAIL ") << r.suite << ": " << r.checks
          << " checks, " << r.failures << " failures\n";
      for (const std::string& m : r.messages) out << "  " << m << '\n';
      ok = ok && r.ok();
    }
    return ok ? 0 : kFailure;
  }
  return kUsageError;
}

}  // namespace dpmq
