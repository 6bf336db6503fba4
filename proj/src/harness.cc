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

#include "dpmq/harness.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "dpmq/parallel.h"
#include "dpmq/sampler.h"
#include "dpmq/utility.h"

namespace dpmq {

namespace {

absl::StatusOr<double> ParseNumber(absl::string_view s) {
  double v;
  if (!absl::SimpleAtod(absl::StripAsciiWhitespace(s), &v) ||
      !std::isfinite(v)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Expected a number, got '", s, "'"));
  }
  return v;
}

double StandardNormalCdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double StandardNormalQuantile(double p) {
  double lo = -40, hi = 40;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (StandardNormalCdf(mid) >= p ? hi : lo) = mid;
  }
  return hi;
}

// Splits one CSV line, honoring double quotes.
std::vector<std::string> SplitCsvLine(absl::string_view line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cells.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else if (c != '\r') {
      cells.back() += c;
    }
  }
  return cells;
}

double MixtureCdf(const SyntheticSpec& spec, double x) {
  double f = 0;
  for (const Atom& a : spec.atoms) {
    if (a.location <= x) f += a.weight;
  }
  for (const Piece& p : spec.pieces) {
    f += p.weight * std::clamp((x - p.lo) / (p.hi - p.lo), 0.0, 1.0);
  }
  return f;
}

}  // namespace

absl::Status ValidateSyntheticSpec(const SyntheticSpec& spec,
                                   const Bounds& bounds) {
  if (spec.n < 1) return absl::InvalidArgumentError("n must be positive");
  switch (spec.kind) {
    case DistributionKind::kConstant:
      if (!bounds.Contains(spec.value)) {
        return absl::InvalidArgumentError("Constant lies outside the bounds");
      }
      break;
    case DistributionKind::kUniform:
      if (!(spec.lo < spec.hi) || !bounds.Contains(spec.lo) ||
          !bounds.Contains(spec.hi)) {
        return absl::InvalidArgumentError(
            "Uniform range must be a non-empty interval inside the bounds");
      }
      break;
    case DistributionKind::kGaussian:
      if (!std::isfinite(spec.mean) || !(spec.stddev > 0)) {
        return absl::InvalidArgumentError(
            "Gaussian needs a finite mean and a positive standard deviation");
      }
      break;
    case DistributionKind::kDiracMixture: {
      double total = 0;
      for (const Atom& a : spec.atoms) {
        if (!(a.weight >= 0) || !bounds.Contains(a.location)) {
          return absl::InvalidArgumentError(
              absl::StrCat("Invalid atom at ", a.location));
        }
        total += a.weight;
      }
      for (const Piece& p : spec.pieces) {
        if (!(p.weight >= 0) || !(p.lo < p.hi) || !bounds.Contains(p.lo) ||
            !bounds.Contains(p.hi)) {
          return absl::InvalidArgumentError(
              absl::StrCat("Invalid piece [", p.lo, ", ", p.hi, "]"));
        }
        total += p.weight;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        return absl::InvalidArgumentError(
            absl::StrCat("Mixture weights sum to ", total, ", not 1"));
      }
      break;
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<SyntheticSpec> ParseSyntheticSpec(absl::string_view text,
                                                 int64_t n, uint64_t seed) {
  SyntheticSpec spec;
  spec.n = n;
  spec.seed = seed;
  if (text == "dividends-like") {
    // Half the records pay nothing; the rest spread over the upper range.
    spec.kind = DistributionKind::kDiracMixture;
    spec.atoms = {{0.0, 0.5}};
    spec.pieces = {{0.5, 1.0, 0.5}};
    return spec;
  }
  if (text == "earnings-like") {
    // Zero earners plus round-number spikes over a continuous bulk.
    spec.kind = DistributionKind::kDiracMixture;
    spec.atoms = {{0.0, 0.3}, {0.25, 0.1}, {0.5, 0.1}, {1.0, 0.05}};
    spec.pieces = {{0.0, 1.0, 0.45}};
    return spec;
  }
  const std::vector<absl::string_view> parts =
      absl::StrSplit(text, absl::MaxSplits(':', 1));
  const absl::string_view kind = parts[0];
  const absl::string_view args = parts.size() > 1 ? parts[1] : "";
  auto numbers = [&](size_t expected) -> absl::StatusOr<std::vector<double>> {
    std::vector<double> out;
    if (!args.empty()) {
      for (absl::string_view s : absl::StrSplit(args, ':')) {
        absl::StatusOr<double> v = ParseNumber(s);
        if (!v.ok()) return v.status();
        out.push_back(*v);
      }
    }
    if (out.size() != expected) {
      return absl::InvalidArgumentError(absl::StrCat(
          "'", kind, "' takes ", expected, " parameters, got ", out.size()));
    }
    return out;
  };
  if (kind == "constant") {
    absl::StatusOr<std::vector<double>> v = numbers(1);
    if (!v.ok()) return v.status();
    spec.kind = DistributionKind::kConstant;
    spec.value = (*v)[0];
    return spec;
  }
  if (kind == "uniform") {
    absl::StatusOr<std::vector<double>> v = numbers(2);
    if (!v.ok()) return v.status();
    spec.kind = DistributionKind::kUniform;
    spec.lo = (*v)[0];
    spec.hi = (*v)[1];
    return spec;
  }
  if (kind == "gaussian") {
    absl::StatusOr<std::vector<double>> v = numbers(2);
    if (!v.ok()) return v.status();
    spec.kind = DistributionKind::kGaussian;
    spec.mean = (*v)[0];
    spec.stddev = (*v)[1];
    return spec;
  }
  if (kind == "mixture") {
    spec.kind = DistributionKind::kDiracMixture;
    const std::vector<absl::string_view> halves =
        absl::StrSplit(args, absl::MaxSplits('/', 1));
    auto parse_weighted = [](absl::string_view item)
        -> absl::StatusOr<std::pair<absl::string_view, double>> {
      const std::vector<absl::string_view> kv =
          absl::StrSplit(item, absl::MaxSplits('@', 1));
      if (kv.size() != 2) {
        return absl::InvalidArgumentError(
            absl::StrCat("Expected VALUE@WEIGHT, got '", item, "'"));
      }
      absl::StatusOr<double> w = ParseNumber(kv[1]);
      if (!w.ok()) return w.status();
      return std::make_pair(kv[0], *w);
    };
    for (absl::string_view item :
         absl::StrSplit(halves[0], ',', absl::SkipEmpty())) {
      auto kv = parse_weighted(item);
      if (!kv.ok()) return kv.status();
      absl::StatusOr<double> loc = ParseNumber(kv->first);
      if (!loc.ok()) return loc.status();
      spec.atoms.push_back({*loc, kv->second});
    }
    if (halves.size() > 1) {
      for (absl::string_view item :
           absl::StrSplit(halves[1], ',', absl::SkipEmpty())) {
        auto kv = parse_weighted(item);
        if (!kv.ok()) return kv.status();
        const std::vector<absl::string_view> range =
            absl::StrSplit(kv->first, '~');
        if (range.size() != 2) {
          return absl::InvalidArgumentError(
              absl::StrCat("Expected LO~HI, got '", kv->first, "'"));
        }
        absl::StatusOr<double> lo = ParseNumber(range[0]);
        absl::StatusOr<double> hi = ParseNumber(range[1]);
        if (!lo.ok()) return lo.status();
        if (!hi.ok()) return hi.status();
        spec.pieces.push_back({*lo, *hi, kv->second});
      }
    }
    return spec;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("Unknown distribution '", text, "'"));
}

absl::StatusOr<Dataset> Generate(const SyntheticSpec& spec,
                                 const Bounds& bounds) {
  if (absl::Status s = ValidateSyntheticSpec(spec, bounds); !s.ok()) return s;
  Rng rng = MakeRng(spec.seed, 0);
  std::vector<double> v(spec.n);
  switch (spec.kind) {
    case DistributionKind::kConstant:
      std::fill(v.begin(), v.end(), spec.value);
      break;
    case DistributionKind::kUniform: {
      std::uniform_real_distribution<double> dist(spec.lo, spec.hi);
      for (double& x : v) x = dist(rng);
      break;
    }
    case DistributionKind::kGaussian: {
      std::normal_distribution<double> dist(spec.mean, spec.stddev);
      for (double& x : v) x = bounds.Clamp(dist(rng));
      break;
    }
    case DistributionKind::kDiracMixture: {
      std::vector<double> weights;
      for (const Atom& a : spec.atoms) weights.push_back(a.weight);
      for (const Piece& p : spec.pieces) weights.push_back(p.weight);
      std::discrete_distribution<size_t> component(weights.begin(),
                                                   weights.end());
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (double& x : v) {
        const size_t c = component(rng);
        if (c < spec.atoms.size()) {
          x = spec.atoms[c].location;
        } else {
          const Piece& p = spec.pieces[c - spec.atoms.size()];
          x = bounds.Clamp(p.lo + (p.hi - p.lo) * unit(rng));
        }
      }
      break;
    }
  }
  return Dataset::Create(std::move(v), bounds);
}

absl::StatusOr<QuantileEstimate> PopulationQuantiles(const SyntheticSpec& spec,
                                                     const Bounds& bounds,
                                                     const QuantileSpec& q) {
  if (absl::Status s = ValidateSyntheticSpec(spec, bounds); !s.ok()) return s;
  QuantileEstimate out;
  for (double p : q.probabilities()) {
    switch (spec.kind) {
      case DistributionKind::kConstant:
        out.push_back(spec.value);
        break;
      case DistributionKind::kUniform:
        out.push_back(spec.lo + p * (spec.hi - spec.lo));
        break;
      case DistributionKind::kGaussian:
        out.push_back(
            bounds.Clamp(spec.mean + spec.stddev * StandardNormalQuantile(p)));
        break;
      case DistributionKind::kDiracMixture: {
        // An atom whose cumulative mass first reaches p is the answer;
        // otherwise bisect the continuous part.
        double best = bounds.upper();
        for (const Atom& a : spec.atoms) {
          if (MixtureCdf(spec, a.location) >= p) {
            best = std::min(best, a.location);
          }
        }
        double lo = bounds.lower(), hi = best;
        if (MixtureCdf(spec, lo) >= p) {
          out.push_back(lo);
          break;
        }
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          (MixtureCdf(spec, mid) >= p ? hi : lo) = mid;
        }
        out.push_back(hi);
        break;
      }
    }
  }
  return out;
}

absl::StatusOr<LoadedData> LoadCsv(const std::string& path,
                                   absl::string_view column,
                                   const Bounds& bounds, int64_t subsample_n,
                                   uint64_t seed) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("Cannot open ", path));
  std::string line;
  size_t col = 0;
  bool named = false;
  if (!column.empty()) {
    int index;
    if (absl::SimpleAtoi(column, &index) && index >= 0) {
      col = static_cast<size_t>(index);
    } else {
      named = true;
    }
  }

  std::vector<double> values;
  int64_t rows = 0, skipped = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (absl::StripAsciiWhitespace(line).empty()) continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (first) {
      first = false;
      if (named) {
        auto it =
            std::find_if(cells.begin(), cells.end(), [&](const std::string& c) {
              return absl::StripAsciiWhitespace(c) == column;
            });
        if (it == cells.end()) {
          return absl::NotFoundError(
              absl::StrCat("Column '", column, "' not found in ", path));
        }
        col = static_cast<size_t>(it - cells.begin());
        continue;
      }
      if (col < cells.size() && !ParseNumber(cells[col]).ok()) continue;
      if (col >= cells.size()) {
        return absl::NotFoundError(
            absl::StrCat("Column ", col, " not found in ", path));
      }
    }
    ++rows;
    if (col >= cells.size()) {
      ++skipped;
      continue;
    }
    absl::StatusOr<double> v = ParseNumber(cells[col]);
    if (!v.ok()) {
      ++skipped;
      continue;
    }
    values.push_back(*v);
  }
  if (named && first) {
    return absl::NotFoundError(absl::StrCat(path, " is empty"));
  }

  if (subsample_n > 0) {
    if (subsample_n > static_cast<int64_t>(values.size())) {
      return absl::InvalidArgumentError(
          absl::StrCat("Requested a subsample of ", subsample_n, " from ",
                       values.size(), " numeric rows"));
    }
    Rng rng = MakeRng(seed, 0x5ab5);
    // Partial Fisher-Yates.
    for (int64_t k = 0; k < subsample_n; ++k) {
      std::uniform_int_distribution<size_t> pick(k, values.size() - 1);
      std::swap(values[k], values[pick(rng)]);
    }
    values.resize(subsample_n);
  }
  if (values.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("No numeric values in ", path));
  }
  int64_t clamped = 0;
  for (double& v : values) {
    if (!bounds.Contains(v)) {
      v = bounds.Clamp(v);
      ++clamped;
    }
  }
  absl::StatusOr<Dataset> data = Dataset::Create(std::move(values), bounds);
  if (!data.ok()) return data.status();
  return LoadedData{*std::move(data), rows, skipped, clamped};
}

absl::StatusOr<Metrics> ComputeMetrics(std::span<const double> q,
                                       std::span<const double> reference) {
  if (q.size() != reference.size() || q.empty()) {
    return absl::InvalidArgumentError(absl::StrCat("Estimate has ", q.size(),
                                                   " entries, reference has ",
                                                   reference.size()));
  }
  double ss = 0, linf = 0;
  for (size_t j = 0; j < q.size(); ++j) {
    const double d = q[j] - reference[j];
    ss += d * d;
    linf = std::max(linf, std::abs(d));
  }
  return Metrics{ss / static_cast<double>(q.size()), linf};
}

absl::string_view SweepMechanismName(SweepMechanism mechanism) {
  switch (mechanism) {
    case SweepMechanism::kJointExp:
      return "joint_exp";
    case SweepMechanism::kInverseSensitivity:
      return "inverse_sensitivity";
    case SweepMechanism::kHsJointExp:
      return "hs_joint_exp";
    case SweepMechanism::kComposedBaseline:
      return "composed_baseline";
  }
  return "unknown";
}

absl::StatusOr<SweepMechanism> ParseSweepMechanism(absl::string_view name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "joint_exp" || lower == "jointexp") {
    return SweepMechanism::kJointExp;
  }
  if (lower == "inverse_sensitivity" || lower == "is") {
    return SweepMechanism::kInverseSensitivity;
  }
  if (lower == "hs_joint_exp" || lower == "hsjointexp") {
    return SweepMechanism::kHsJointExp;
  }
  if (lower == "composed_baseline" || lower == "composed") {
    return SweepMechanism::kComposedBaseline;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "Unknown mechanism '", name,
      "' (expected joint_exp, inverse_sensitivity, hs_joint_exp or "
      "composed_baseline)"));
}

std::vector<double> DefaultNoiseRatios() {
  std::vector<double> r;
  for (int k = -8; k <= 0; ++k) {
    r.push_back(std::pow(10.0, k));
    if (k < 0) r.push_back(std::pow(10.0, k + 0.5));
  }
  return r;
}

absl::Status ValidateSweepConfig(const SweepConfig& config) {
  if (config.replications < 1) {
    return absl::InvalidArgumentError("replications must be at least 1");
  }
  if (config.mechanisms.empty() || config.m_values.empty() ||
      config.eps_values.empty()) {
    return absl::InvalidArgumentError(
        "Sweep needs at least one mechanism, m and eps");
  }
  for (double r : config.noise_ratios) {
    if (!std::isfinite(r) || !(r > 0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("Noise ratio ", r, " is not positive"));
    }
  }
  for (int m : config.m_values) {
    if (m < 1) return absl::InvalidArgumentError("m must be positive");
  }
  for (double e : config.eps_values) {
    if (!std::isfinite(e) || !(e > 0)) {
      return absl::InvalidArgumentError("eps must be positive");
    }
  }
  if (!config.probabilities.empty() &&
      (config.m_values.size() != 1 ||
       config.m_values[0] != static_cast<int>(config.probabilities.size()))) {
    return absl::InvalidArgumentError(
        "Explicit probabilities require a single matching m");
  }
  if (config.reference == ReferenceMode::kPopulation &&
      !config.population_quantiles) {
    return absl::InvalidArgumentError(
        "Population reference mode needs population quantiles");
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<Metrics>> RunCell(
    const Dataset& data, SweepMechanism mechanism, const QuantileSpec& spec,
    double epsilon, std::optional<NoiseConfig> noise,
    const QuantileEstimate& reference, int64_t replications, uint64_t seed,
    int threads) {
  absl::StatusOr<PrivacyBudget> budget = PrivacyBudget::Create(epsilon);
  if (!budget.ok()) return budget.status();
  if (absl::Status s = Validate(spec, data.size()); !s.ok()) return s;
  if (mechanism == SweepMechanism::kHsJointExp && !noise.has_value()) {
    return absl::InvalidArgumentError("hs_joint_exp needs a noise config");
  }
  const Dataset sorted = data.Sorted();
  // The block tables of the noiseless mechanisms do not depend on the draw.
  std::optional<BlockSampler> sampler;
  if (mechanism == SweepMechanism::kJointExp ||
      mechanism == SweepMechanism::kInverseSensitivity) {
    absl::StatusOr<BlockSampler> s =
        BlockSampler::Create(mechanism == SweepMechanism::kJointExp
                                 ? MechanismFlavor::kJointExp
                                 : MechanismFlavor::kInverseSensitivity,
                             sorted, spec, epsilon);
    if (!s.ok()) return s.status();
    sampler = *std::move(s);
  }

  std::vector<Metrics> out(replications);
  std::vector<absl::Status> status(replications);
  ParallelFor(replications, threads, [&](size_t r) {
    Rng rng = MakeRng(seed, r);
    absl::StatusOr<QuantileEstimate> q;
    switch (mechanism) {
      case SweepMechanism::kJointExp:
      case SweepMechanism::kInverseSensitivity:
        q = SampleWithinBlock(sampler->Sample(rng), sorted, rng);
        break;
      case SweepMechanism::kHsJointExp:
        q = HsJointExp(sorted, spec, *budget, *noise, rng);
        break;
      case SweepMechanism::kComposedBaseline:
        q = ComposedSingleQuantiles(sorted, spec, *budget, rng);
        break;
    }
    if (!q.ok()) {
      status[r] = q.status();
      return;
    }
    absl::StatusOr<Metrics> metrics = ComputeMetrics(*q, reference);
    if (!metrics.ok()) {
      status[r] = metrics.status();
      return;
    }
    out[r] = *metrics;
  });
  for (const absl::Status& s : status) {
    if (!s.ok()) return s;
  }
  return out;
}

absl::StatusOr<std::vector<SweepRow>> RunSweep(const Dataset& data,
                                               const SweepConfig& config) {
  if (absl::Status s = ValidateSweepConfig(config); !s.ok()) return s;
  const double width = data.bounds().width();
  std::vector<SweepRow> rows;
  uint64_t cell = 0;
  for (int m : config.m_values) {
    absl::StatusOr<QuantileSpec> spec =
        config.probabilities.empty()
            ? absl::StatusOr<QuantileSpec>(QuantileSpec::Uniform(m))
            : QuantileSpec::Create(config.probabilities);
    if (!spec.ok()) return spec.status();
    absl::StatusOr<QuantileEstimate> reference =
        config.reference == ReferenceMode::kEmpirical
            ? EmpiricalQuantiles(data, *spec)
            : config.population_quantiles(*spec);
    if (!reference.ok()) return reference.status();
    for (double eps : config.eps_values) {
      for (SweepMechanism mechanism : config.mechanisms) {
        struct Setting {
          std::string family;
          double ratio;
          std::optional<NoiseConfig> noise;
        };
        std::vector<Setting> settings;
        if (mechanism != SweepMechanism::kHsJointExp) {
          settings.push_back({"none", 0.0, std::nullopt});
        } else {
          for (NoiseFamily family : config.noise_families) {
            std::vector<double> ratios = config.noise_ratios;
            if (config.include_recommended) {
              ratios.push_back(
                  RecommendedSigma(data.size(), eps, m, data.bounds()) / width);
            }
            for (double ratio : ratios) {
              absl::StatusOr<NoiseConfig> noise =
                  NoiseConfig::FromStddev(family, ratio * width);
              if (!noise.ok()) return noise.status();
              settings.push_back(
                  {std::string(NoiseFamilyName(family)), ratio, *noise});
            }
          }
        }
        for (const Setting& setting : settings) {
          const auto start = std::chrono::steady_clock::now();
          absl::StatusOr<std::vector<Metrics>> metrics =
              RunCell(data, mechanism, *spec, eps, setting.noise, *reference,
                      config.replications, DeriveSeed(config.seed, cell),
                      config.threads);
          const auto stop = std::chrono::steady_clock::now();
          ++cell;
          if (!metrics.ok()) return metrics.status();
          const double k = static_cast<double>(metrics->size());
          double mse_mean = 0, linf_mean = 0;
          for (const Metrics& x : *metrics) {
            mse_mean += x.mse / k;
            linf_mean += x.linf / k;
          }
          double ss = 0;
          for (const Metrics& x : *metrics) {
            ss += (x.mse - mse_mean) * (x.mse - mse_mean);
          }
          const double mse_std = k > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
          const double runtime_ms =
              config.timing
                  ? std::chrono::duration<double, std::milli>(stop - start)
                            .count() /
                        k
                  : 0.0;
          rows.push_back(SweepRow{config.dataset_id,
                                  std::string(SweepMechanismName(mechanism)),
                                  setting.family, setting.ratio, m, eps,
                                  mse_mean, mse_std, linf_mean, runtime_ms});
        }
      }
    }
  }
  return rows;
}

std::string CsvField(absl::string_view s) {
  if (s.find_first_of(",\"\r\n") == absl::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

void WriteSweepCsv(std::span<const SweepRow> rows, std::ostream& out) {
  out << kSweepHeader << '\n';
  for (const SweepRow& r : rows) {
    out << CsvField(r.dataset_id) << ',' << CsvField(r.mechanism) << ','
        << CsvField(r.noise_family) << ',' << FormatDouble(r.noise_ratio) << ','
        << r.m << ',' << FormatDouble(r.eps) << ',' << FormatDouble(r.mse_mean)
        << ',' << FormatDouble(r.mse_std) << ',' << FormatDouble(r.linf_mean)
        << ',' << FormatDouble(r.runtime_ms) << '\n';
  }
}

namespace {

void RecordFailure(VerifyResult& result, std::string message) {
  ++result.failures;
  if (result.messages.size() < 10)
    result.messages.push_back(std::move(message));
}

// All multisets of size n over `values`, as sorted vectors.
void Multisets(std::span<const double> values, int n, size_t start,
               std::vector<double>& prefix,
               const std::function<void(const std::vector<double>&)>& visit) {
  if (static_cast<int>(prefix.size()) == n) {
    visit(prefix);
    return;
  }
  for (size_t k = start; k < values.size(); ++k) {
    prefix.push_back(values[k]);
    Multisets(values, n, k, prefix, visit);
    prefix.pop_back();
  }
}

void IncreasingTuples(std::span<const double> values, int m, size_t start,
                      std::vector<double>& prefix,
                      std::vector<std::vector<double>>& out) {
  if (static_cast<int>(prefix.size()) == m) {
    out.push_back(prefix);
    return;
  }
  for (size_t k = start; k < values.size(); ++k) {
    prefix.push_back(values[k]);
    IncreasingTuples(values, m, k + 1, prefix, out);
    prefix.pop_back();
  }
}

std::vector<QuantileSpec> ProbabilityChoices(int m) {
  std::vector<QuantileSpec> out;
  if (m == 1) {
    for (double p : {0.3, 0.5, 0.8}) out.push_back(*QuantileSpec::Create({p}));
  } else if (m == 2) {
    out.push_back(*QuantileSpec::Create({0.25, 0.75}));
    out.push_back(*QuantileSpec::Create({0.4, 0.9}));
  } else {
    out.push_back(QuantileSpec::Uniform(m));
  }
  return out;
}

std::string Describe(std::span<const double> v) {
  std::string s = "(";
  for (size_t k = 0; k < v.size(); ++k) {
    absl::StrAppend(&s, k ? ", " : "", v[k]);
  }
  return s + ")";
}

}  // namespace

VerifyResult VerifyInverseSensitivity(int max_n, int max_m) {
  VerifyResult result{"inverse_sensitivity_formula"};
  const Bounds unit = *Bounds::Create(0.0, 1.0);
  std::vector<double> values, shifted;
  for (int k = 1; k <= 9; ++k) values.push_back(k / 10.0);
  for (int k = 0; k < 10; ++k) shifted.push_back(0.05 + k / 10.0);
  for (int m = 1; m <= max_m; ++m) {
    std::vector<std::vector<double>> candidates;
    std::vector<double> prefix;
    IncreasingTuples(shifted, m, 0, prefix, candidates);
    for (const QuantileSpec& spec : ProbabilityChoices(m)) {
      for (int n = 1; n <= max_n; ++n) {
        if (!Validate(spec, n).ok()) continue;
        std::vector<double> data_prefix;
        Multisets(values, n, 0, data_prefix, [&](const std::vector<double>& x) {
          const Dataset data = *Dataset::Create(x, unit);
          for (const std::vector<double>& q : candidates) {
            ++result.checks;
            absl::StatusOr<double> exact =
                InverseSensitivityUtility(data, q, spec);
            absl::StatusOr<int64_t> brute =
                BruteForceInverseSensitivity(data, q, spec);
            if (!exact.ok() || !brute.ok() ||
                -*exact != static_cast<double>(*brute)) {
              RecordFailure(
                  result,
                  absl::StrCat("X = ", Describe(x), ", q = ", Describe(q),
                               ", p = ", Describe(spec.probabilities()),
                               ": formula ",
                               exact.ok() ? absl::StrCat(-*exact)
                                          : exact.status().ToString(),
                               ", search ",
                               brute.ok() ? absl::StrCat(*brute)
                                          : brute.status().ToString()));
            }
          }
        });
      }
    }
  }
  return result;
}

VerifyResult VerifySamplerNormalizers(int max_n, int max_m, int instances,
                                      uint64_t seed) {
  VerifyResult result{"sampler_normalizers"};
  Rng rng = MakeRng(seed, 0x5a3);
  const Bounds unit = *Bounds::Create(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_real_distribution<double> eps_dist(0.1, 3.0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int t = 0; t < instances; ++t) {
    const int m = std::uniform_int_distribution<int>(1, max_m)(rng);
    const int n =
        std::uniform_int_distribution<int>(std::max(m, 1), max_n)(rng);
    // Some instances carry ties to exercise zero-length gaps.
    std::vector<double> x(n);
    for (double& v : x) v = std::round(unif(rng) * 8.0) / 8.0;
    const Dataset data = *Dataset::Create(x, unit);
    // Sorted uniforms, rejected until the spacing constraint holds.
    absl::StatusOr<QuantileSpec> spec = QuantileSpec::Uniform(m);
    for (int attempt = 0; attempt < 50; ++attempt) {
      std::vector<double> p(m);
      for (double& v : p) v = unif(rng);
      std::sort(p.begin(), p.end());
      absl::StatusOr<QuantileSpec> s = QuantileSpec::Create(p);
      if (s.ok() && Validate(*s, n).ok()) {
        spec = s;
        break;
      }
    }
    if (!Validate(*spec, n).ok()) continue;
    const double eps = eps_dist(rng);
    const MechanismFlavor flavor = coin(rng)
                                       ? MechanismFlavor::kJointExp
                                       : MechanismFlavor::kInverseSensitivity;
    ++result.checks;
    absl::StatusOr<BlockDistribution> brute =
        BruteForceDistribution(flavor, data, *spec, eps);
    absl::StatusOr<BlockSampler> sampler =
        BlockSampler::Create(flavor, data, *spec, eps);
    if (!brute.ok() || !sampler.ok()) {
      RecordFailure(result,
                    absl::StrCat("Instance ", t, " failed to build: ",
                                 brute.ok() ? sampler.status().ToString()
                                            : brute.status().ToString()));
      continue;
    }
    const double diff =
        std::abs(brute->log_normalizer - sampler->log_normalizer());
    if (!(diff <= 1e-9)) {
      RecordFailure(result,
                    absl::StrCat("X = ", Describe(x),
                                 ", p = ", Describe(spec->probabilities()),
                                 ", eps = ", eps, ": log Z differs by ", diff));
    }
  }
  return result;
}

VerifyResult VerifySensitivity(int max_n, int max_m, int trials,
                               uint64_t seed) {
  VerifyResult result{"sensitivity"};
  Rng rng = MakeRng(seed, 0x5e5);
  const Bounds unit = *Bounds::Create(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto grid_value = [&](int levels) {
    return std::round(unif(rng) * levels) / levels;
  };
  for (int t = 0; t < trials; ++t) {
    const int m = std::uniform_int_distribution<int>(1, max_m)(rng);
    const int n = std::uniform_int_distribution<int>(m + 1, max_n)(rng);
    const QuantileSpec spec = QuantileSpec::Uniform(m);
    if (!Validate(spec, n).ok()) continue;
    std::vector<double> x(n);
    for (double& v : x) v = grid_value(10);
    std::vector<double> y = x;
    y[std::uniform_int_distribution<int>(0, n - 1)(rng)] = grid_value(10);
    std::vector<double> q(m);
    for (double& v : q) v = grid_value(20);
    std::sort(q.begin(), q.end());
    const Dataset dx = *Dataset::Create(x, unit);
    const Dataset dy = *Dataset::Create(y, unit);
    ++result.checks;
    const double dje =
        std::abs(JointExpUtility(dx, q, spec) - JointExpUtility(dy, q, spec));
    const double dis =
        std::abs(SimplifiedInverseSensitivityUtility(dx, q, spec) -
                 SimplifiedInverseSensitivityUtility(dy, q, spec));
    if (dje > 1 + 1e-12 || dis > 1 + 1e-12) {
      RecordFailure(result,
                    absl::StrCat("X = ", Describe(x), ", Y = ", Describe(y),
                                 ", q = ", Describe(q), ": |du_je| = ", dje,
                                 ", |du_is| = ", dis));
    }
    absl::StatusOr<double> exact = InverseSensitivityUtility(dx, q, spec);
    if (exact.ok()) {
      const double gap =
          std::abs(SimplifiedInverseSensitivityUtility(dx, q, spec) - *exact);
      if (gap > 2.0 * (m + 1)) {
        RecordFailure(result,
                      absl::StrCat("X = ", Describe(x), ", q = ", Describe(q),
                                   ": simplified-exact gap ", gap));
      }
    }
  }
  return result;
}

}  // namespace dpmq
