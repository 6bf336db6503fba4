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

#ifndef DPMQ_SAMPLER_H_
#define DPMQ_SAMPLER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dpmq/core.h"

namespace dpmq {

// The exponential-mechanism densities of JointExp and of the inverse
// sensitivity mechanism are constant on the blocks
//   ([X_{i_1}, X_{i_1+1}) x ... x [X_{i_m}, X_{i_m+1})) restricted to
// non-decreasing vectors, indexed by non-decreasing tuples i in {0..n}^m.
// Sampling picks a block with probability
//   P(i) ~ (1 / gamma(i)) prod_{j=1}^{m+1} phi(i_{j-1}, i_j, j)
//          prod_{j=1}^{m} tau(i_j),   i_0 = 0, i_{m+1} = n,
// then draws uniform points inside it. All weights live in natural-log space.

enum class MechanismFlavor { kJointExp, kInverseSensitivity };

// Non-decreasing gap indices (i_1, ..., i_m), each in {0, ..., n}.
using BlockIndex = std::vector<int64_t>;

double LogSumExp(std::span<const double> values);
double LogAddExp(double a, double b);

// tau(i) = X_{i+1} - X_i with X_0 = a and X_{n+1} = b. Requires sorted X.
double Tau(int64_t i, const Dataset& x);

// prod over distinct values of (multiplicity)!.
int64_t Gamma(std::span<const int64_t> block);

// log phi(i, i', j). -inf when i' < i. Bins j <= m of the inverse-sensitivity
// flavor carry the extra unit penalty when the gap count reaches its target.
double LogPhi(MechanismFlavor flavor, int64_t i, int64_t i_next, int j,
              int64_t n, const QuantileSpec& spec, double epsilon);

// Unnormalized log P(i); -inf for zero-volume blocks.
double BlockLogWeight(MechanismFlavor flavor, std::span<const int64_t> block,
                      const Dataset& x, const QuantileSpec& spec,
                      double epsilon);

// Exhaustive table of block log-weights in lexicographic order.
struct BlockDistribution {
  std::vector<BlockIndex> blocks;
  std::vector<double> log_weights;
  double log_normalizer;

  double Probability(size_t k) const;
};

// Enumerates every block. Fails with ResourceExhausted when (n+1)^m > 1e6.
absl::StatusOr<BlockDistribution> BruteForceDistribution(
    MechanismFlavor flavor, const Dataset& x, const QuantileSpec& spec,
    double epsilon);

// Exact sampler over blocks by dynamic programming.
//
// The forward pass keeps, for layer j and state (gap index i, run length r of
// the trailing repeated index), the log-sum of all prefix weights. Extending a
// run to length r multiplies by 1/r, which rebuilds 1/gamma(i) one step at a
// time. phi depends on (i, i') only through i' - i and is piecewise
// exponential in it, so the transition into a new gap index is a convolution
// computed in O(n) per layer with log-space running sums. Time and memory are
// O(n m^2). Draws replay the tables backwards with inverse-CDF categorical
// sampling, so a fixed seed reproduces the same blocks.
class BlockSampler {
 public:
  static absl::StatusOr<BlockSampler> Create(MechanismFlavor flavor,
                                             const Dataset& x,
                                             const QuantileSpec& spec,
                                             double epsilon);

  double log_normalizer() const { return log_normalizer_; }
  int m() const { return m_; }
  int64_t n() const { return n_; }

  BlockIndex Sample(Rng& rng) const;

 private:
  BlockSampler() = default;

  // Forward table for layer j (1-based) and run length r (1-based, r <= j).
  std::span<const double> Layer(int j, int r) const;
  std::span<double> MutableLayer(int j, int r);
  // logsumexp over run lengths of layer j.
  std::span<const double> Collapsed(int j) const;
  double TransitionLogWeight(int j, int64_t from, int64_t to) const;

  MechanismFlavor flavor_;
  int m_ = 0;
  int64_t n_ = 0;
  double epsilon_ = 0;
  std::vector<double> centers_;  // per bin j: target gap count
  std::vector<double> extras_;   // per bin j: penalty once the target is met
  std::vector<double> log_tau_;
  std::vector<double> table_;
  std::vector<size_t> layer_offsets_;
  std::vector<double> collapsed_;
  double log_normalizer_ = 0;
};

// Convenience wrapper: builds the tables and draws one block.
absl::StatusOr<BlockIndex> DpSampleBlock(MechanismFlavor flavor,
                                         const Dataset& x,
                                         const QuantileSpec& spec,
                                         double epsilon, Rng& rng);

// Uniform point in each selected gap [X_{i_j}, X_{i_j+1}), sorted ascending.
absl::StatusOr<QuantileEstimate> SampleWithinBlock(
    std::span<const int64_t> block, const Dataset& x, Rng& rng);

// Output density of the mechanism, (eps/2) u(X, q) - log Z, where u is the
// JointExp or simplified inverse-sensitivity utility. Z is computed once.
class MechanismDensity {
 public:
  static absl::StatusOr<MechanismDensity> Create(MechanismFlavor flavor,
                                                 const Dataset& x,
                                                 const QuantileSpec& spec,
                                                 double epsilon);

  double log_normalizer() const { return log_normalizer_; }
  const Dataset& dataset() const { return x_; }

  // Fails when q has the wrong length, leaves the bounds or decreases.
  absl::StatusOr<double> LogDensity(std::span<const double> q) const;

 private:
  MechanismDensity(MechanismFlavor flavor, Dataset x, QuantileSpec spec,
                   double epsilon, double log_normalizer)
      : flavor_(flavor),
        x_(std::move(x)),
        spec_(std::move(spec)),
        epsilon_(epsilon),
        log_normalizer_(log_normalizer) {}

  MechanismFlavor flavor_;
  Dataset x_;
  QuantileSpec spec_;
  double epsilon_;
  double log_normalizer_;
};

absl::StatusOr<double> MechanismLogDensity(MechanismFlavor flavor,
                                           const Dataset& x,
                                           const QuantileSpec& spec,
                                           double epsilon,
                                           std::span<const double> q);

}  // namespace dpmq

#endif  // DPMQ_SAMPLER_H_
