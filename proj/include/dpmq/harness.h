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

#ifndef DPMQ_HARNESS_H_
#define DPMQ_HARNESS_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dpmq/core.h"
#include "dpmq/mechanisms.h"

namespace dpmq {

// --- Synthetic data -------------------------------------------------------

enum class DistributionKind { kConstant, kUniform, kGaussian, kDiracMixture };

struct Atom {
  double location;
  double weight;
};

struct Piece {
  double lo;
  double hi;
  double weight;
};

// Law of i.i.d. draws. Gaussian draws are clipped to the bounds; a Dirac
// mixture combines point masses with uniform pieces.
struct SyntheticSpec {
  DistributionKind kind = DistributionKind::kUniform;
  double value = 0;  // constant
  double lo = 0;     // uniform
  double hi = 1;
  double mean = 0;  // gaussian
  double stddev = 1;
  std::vector<Atom> atoms;
  std::vector<Piece> pieces;
  int64_t n = 1000;
  uint64_t seed = 0;
};

absl::Status ValidateSyntheticSpec(const SyntheticSpec& spec,
                                   const Bounds& bounds);

// Parses "constant:V", "uniform:LO:HI", "gaussian:MEAN:STD",
// "mixture:ATOMS/PIECES" (ATOMS = loc@w,... and PIECES = lo~hi@w,...) or one
// of the presets "dividends-like" and "earnings-like". Presets live on [0, 1].
absl::StatusOr<SyntheticSpec> ParseSyntheticSpec(absl::string_view text,
                                                 int64_t n, uint64_t seed);

absl::StatusOr<Dataset> Generate(const SyntheticSpec& spec,
                                 const Bounds& bounds);

// Population quantiles F^{-1}(p_j) = inf{x : F(x) >= p_j} of the law.
absl::StatusOr<QuantileEstimate> PopulationQuantiles(const SyntheticSpec& spec,
                                                     const Bounds& bounds,
                                                     const QuantileSpec& q);

// --- CSV input ------------------------------------------------------------

struct LoadedData {
  Dataset data;
  int64_t rows = 0;     // data rows read
  int64_t skipped = 0;  // non-numeric or empty cells
  int64_t clamped = 0;  // values moved onto the bounds (in the subsample)
};

// Reads one numeric column. `column` is a header name, a 0-based index, or
// empty for the first column; a header row is detected when its cell in the
// column does not parse as a number. subsample_n = 0 keeps every row;
// otherwise a uniform subsample without replacement is drawn with `seed`.
absl::StatusOr<LoadedData> LoadCsv(const std::string& path,
                                   absl::string_view column,
                                   const Bounds& bounds, int64_t subsample_n,
                                   uint64_t seed);

// --- Metrics --------------------------------------------------------------

struct Metrics {
  double mse;
  double linf;
};

absl::StatusOr<Metrics> ComputeMetrics(std::span<const double> q,
                                       std::span<const double> reference);

// --- Sweeps ---------------------------------------------------------------

enum class SweepMechanism {
  kJointExp,
  kInverseSensitivity,
  kHsJointExp,
  kComposedBaseline,
};

absl::string_view SweepMechanismName(SweepMechanism mechanism);
absl::StatusOr<SweepMechanism> ParseSweepMechanism(absl::string_view name);

enum class ReferenceMode { kEmpirical, kPopulation };

// Log-spaced noise ratios 10^-8 ... 10^0, 17 points.
std::vector<double> DefaultNoiseRatios();

struct SweepConfig {
  std::string dataset_id = "data";
  std::vector<SweepMechanism> mechanisms = {SweepMechanism::kJointExp};
  std::vector<NoiseFamily> noise_families = {NoiseFamily::kUniform};
  // sigma / (b - a).
  std::vector<double> noise_ratios = DefaultNoiseRatios();
  // Adds one row per family at RecommendedSigma.
  bool include_recommended = false;
  std::vector<int> m_values = {5};
  std::vector<double> eps_values = {1.0};
  // Overrides p = (1/(m+1), ..., m/(m+1)); requires a single m of that size.
  std::vector<double> probabilities;
  int64_t replications = 100;
  uint64_t seed = 0;
  ReferenceMode reference = ReferenceMode::kEmpirical;
  // Required for ReferenceMode::kPopulation.
  std::function<absl::StatusOr<QuantileEstimate>(const QuantileSpec&)>
      population_quantiles;
  int threads = 1;
  // Records wall-clock time; rows are then no longer reproducible.
  bool timing = false;
};

absl::Status ValidateSweepConfig(const SweepConfig& config);

struct SweepRow {
  std::string dataset_id;
  std::string mechanism;
  std::string noise_family;  // "none" for mechanisms without pre-noise
  double noise_ratio;
  int m;
  double eps;
  double mse_mean;
  double mse_std;
  double linf_mean;
  double runtime_ms;  // mean per replication; 0 unless timing is on
};

// One row per (m, eps, mechanism, family, ratio) cell, in that nesting order.
// Replication r of cell c draws from MakeRng(DeriveSeed(seed, c), r).
absl::StatusOr<std::vector<SweepRow>> RunSweep(const Dataset& data,
                                               const SweepConfig& config);

// Raw per-replication metrics of a single cell.
absl::StatusOr<std::vector<Metrics>> RunCell(
    const Dataset& data, SweepMechanism mechanism, const QuantileSpec& spec,
    double epsilon, std::optional<NoiseConfig> noise,
    const QuantileEstimate& reference, int64_t replications, uint64_t seed,
    int threads);

inline constexpr absl::string_view kSweepHeader =
    "dataset_id,mechanism,noise_family,noise_ratio,m,eps,mse_mean,mse_std,"
    "linf_mean,runtime_ms";

void WriteSweepCsv(std::span<const SweepRow> rows, std::ostream& out);

// Quotes a CSV field when it contains a comma, quote or line break.
std::string CsvField(absl::string_view s);

// Shortest round-trip decimal representation.
std::string FormatDouble(double v);

// --- Verification suites --------------------------------------------------

struct VerifyResult {
  std::string suite;
  int64_t checks = 0;
  int64_t failures = 0;
  std::vector<std::string> messages;  // first few failures

  bool ok() const { return failures == 0; }
};

// Exact inverse-sensitivity formula against exhaustive search, for every
// multiset of size 1..max_n on {0.1, ..., 0.9} in [0, 1] and every strictly
// increasing q on {0.05, ..., 0.95}, with m = 1..max_m.
VerifyResult VerifyInverseSensitivity(int max_n, int max_m);

// Dynamic-programming normalizers against full enumeration on random
// instances with n <= max_n and m <= max_m, both flavors.
VerifyResult VerifySamplerNormalizers(int max_n, int max_m, int instances,
                                      uint64_t seed);

// Utility sensitivity on random neighbors and the gap between the simplified
// and exact inverse-sensitivity utilities.
VerifyResult VerifySensitivity(int max_n, int max_m, int trials, uint64_t seed);

}  // namespace dpmq

#endif  // DPMQ_HARNESS_H_
