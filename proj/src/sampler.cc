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

#include "dpmq/sampler.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <utility>

#include "absl/strings/str_cat.h"
#include "dpmq/utility.h"

namespace dpmq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMaxBruteForceBlocks = 1e6;

// Index of a draw from the categorical law with the given log-weights.
// Inverse CDF on max-shifted weights; never returns a -inf entry.
size_t SampleLogCategorical(std::span<const double> log_weights, Rng& rng) {
  const double max = *std::max_element(log_weights.begin(), log_weights.end());
  assert(max > kNegInf);
  double total = 0.0;
  for (double w : log_weights) total += std::exp(w - max);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double target = unif(rng) * total;
  double cumulative = 0.0;
  size_t last_positive = 0;
  for (size_t k = 0; k < log_weights.size(); ++k) {
    if (log_weights[k] == kNegInf) continue;
    cumulative += std::exp(log_weights[k] - max);
    last_positive = k;
    if (target < cumulative) return k;
  }
  return last_positive;
}

// out[i] = logsumexp over i' with i - i' >= min_gap of
//   src[i'] + kernel(i - i'),
// kernel(d) = -beta |d - center| + (d >= center ? extra : 0).
//
// The part d >= center is a geometric running sum. The part d < center is a
// sliding window of a geometric weight; it is evaluated without subtraction
// through per-block prefix and suffix log-sums, blocks being as wide as the
// window.
std::vector<double> ConvolveExpKernel(std::span<const double> src, double beta,
                                      double center, double extra,
                                      int64_t min_gap) {
  const int64_t len = static_cast<int64_t>(src.size());
  std::vector<double> out(len, kNegInf);
  const int64_t split = static_cast<int64_t>(std::ceil(center));

  // d >= max(min_gap, split).
  const int64_t far = std::max(min_gap, split);
  if (far < len) {
    const double first = -beta * (static_cast<double>(far) - center) + extra;
    double running = kNegInf;
    for (int64_t i = far; i < len; ++i) {
      running = LogAddExp(running - beta, src[i - far] + first);
      out[i] = running;
    }
  }

  // min_gap <= d <= split - 1.
  const int64_t near_hi = std::min(split - 1, len - 1);
  if (near_hi >= min_gap) {
    const int64_t width = near_hi - min_gap + 1;
    std::vector<double> prefix(len), suffix(len);
    for (int64_t start = 0; start < len; start += width) {
      const int64_t end = std::min(start + width, len) - 1;
      double acc = kNegInf;
      for (int64_t k = start; k <= end; ++k) {
        acc = LogAddExp(acc, src[k] - beta * static_cast<double>(k - start));
        prefix[k] = acc;
      }
      acc = kNegInf;
      for (int64_t k = end; k >= start; --k) {
        acc = LogAddExp(acc, src[k] - beta * static_cast<double>(k - start));
        suffix[k] = acc;
      }
    }
    for (int64_t i = min_gap; i < len; ++i) {
      const int64_t hi = i - min_gap;
      const int64_t lo = std::max<int64_t>(0, i - near_hi);
      const int64_t block_lo = lo / width;
      const int64_t block_hi = hi / width;
      const double start_lo = static_cast<double>(block_lo * width);
      const double start_hi = static_cast<double>(block_hi * width);
      const double shift = center - static_cast<double>(i);
      double near;
      if (block_lo == block_hi) {
        assert(lo == block_lo * width);
        near = prefix[hi] - beta * (shift + start_hi);
      } else {
        near = LogAddExp(suffix[lo] - beta * (shift + start_lo),
                         prefix[hi] - beta * (shift + start_hi));
      }
      out[i] = LogAddExp(out[i], near);
    }
  }
  return out;
}

}  // namespace

double LogAddExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

double LogSumExp(std::span<const double> values) {
  if (values.empty()) return kNegInf;
  const double max = *std::max_element(values.begin(), values.end());
  if (max == kNegInf) return kNegInf;
  if (std::isinf(max)) return max;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

double Tau(int64_t i, const Dataset& x) {
  assert(x.is_sorted());
  return x.OrderStatistic(i + 1) - x.OrderStatistic(i);
}

int64_t Gamma(std::span<const int64_t> block) {
  int64_t gamma = 1;
  int64_t run = 0;
  for (size_t k = 0; k < block.size(); ++k) {
    run = (k > 0 && block[k] == block[k - 1]) ? run + 1 : 1;
    gamma *= run;
  }
  return gamma;
}

double LogPhi(MechanismFlavor flavor, int64_t i, int64_t i_next, int j,
              int64_t n, const QuantileSpec& spec, double epsilon) {
  if (i_next < i) return kNegInf;
  const double gap_count = static_cast<double>(i_next - i);
  if (flavor == MechanismFlavor::kJointExp) {
    const double expected = n * (spec.p(j) - spec.p(j - 1));
    return -(epsilon / 2.0) * (0.5 * std::abs(gap_count - expected));
  }
  const int64_t delta_hat =
      (i_next - i) - (spec.Rank(j, n) - spec.Rank(j - 1, n));
  double penalty = 0.5 * std::abs(static_cast<double>(delta_hat));
  if (j <= spec.m() && delta_hat >= 0) penalty += 1.0;
  return -(epsilon / 2.0) * penalty;
}

double BlockLogWeight(MechanismFlavor flavor, std::span<const int64_t> block,
                      const Dataset& x, const QuantileSpec& spec,
                      double epsilon) {
  const int m = spec.m();
  const int64_t n = x.size();
  assert(static_cast<int>(block.size()) == m);
  double log_weight = -std::log(static_cast<double>(Gamma(block)));
  int64_t previous = 0;
  for (int j = 1; j <= m + 1; ++j) {
    const int64_t current = j <= m ? block[j - 1] : n;
    log_weight += LogPhi(flavor, previous, current, j, n, spec, epsilon);
    previous = current;
  }
  for (int j = 0; j < m; ++j) log_weight += std::log(Tau(block[j], x));
  return log_weight;
}

double BlockDistribution::Probability(size_t k) const {
  return std::exp(log_weights[k] - log_normalizer);
}

absl::StatusOr<BlockDistribution> BruteForceDistribution(
    MechanismFlavor flavor, const Dataset& x, const QuantileSpec& spec,
    double epsilon) {
  const int m = spec.m();
  const int64_t n = x.size();
  if (std::pow(static_cast<double>(n + 1), m) > kMaxBruteForceBlocks) {
    return absl::ResourceExhaustedError(
        absl::StrCat("(n+1)^m = (", n + 1, ")^", m,
                     " exceeds the enumeration limit of 1e6 blocks"));
  }
  const Dataset sorted = x.Sorted();
  BlockDistribution dist;
  BlockIndex block(m, 0);
  while (true) {
    dist.blocks.push_back(block);
    dist.log_weights.push_back(
        BlockLogWeight(flavor, block, sorted, spec, epsilon));
    // Next non-decreasing tuple in lexicographic order.
    int k = m - 1;
    while (k >= 0 && block[k] == n) --k;
    if (k < 0) break;
    ++block[k];
    for (int l = k + 1; l < m; ++l) block[l] = block[k];
  }
  dist.log_normalizer = LogSumExp(dist.log_weights);
  return dist;
}

absl::StatusOr<BlockSampler> BlockSampler::Create(MechanismFlavor flavor,
                                                  const Dataset& x,
                                                  const QuantileSpec& spec,
                                                  double epsilon) {
  if (absl::Status s = Validate(spec, x.size()); !s.ok()) return s;
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError("Epsilon must be finite and positive");
  }
  const Dataset sorted = x.Sorted();
  BlockSampler sampler;
  sampler.flavor_ = flavor;
  sampler.m_ = spec.m();
  sampler.n_ = x.size();
  sampler.epsilon_ = epsilon;
  const int m = sampler.m_;
  const int64_t n = sampler.n_;
  const int64_t len = n + 1;

  sampler.centers_.resize(m + 2);
  sampler.extras_.resize(m + 2, 0.0);
  for (int j = 1; j <= m + 1; ++j) {
    if (flavor == MechanismFlavor::kJointExp) {
      sampler.centers_[j] = n * (spec.p(j) - spec.p(j - 1));
    } else {
      sampler.centers_[j] =
          static_cast<double>(spec.Rank(j, n) - spec.Rank(j - 1, n));
      if (j <= m) sampler.extras_[j] = -epsilon / 2.0;
    }
  }
  sampler.log_tau_.resize(len);
  for (int64_t i = 0; i < len; ++i) {
    sampler.log_tau_[i] = std::log(Tau(i, sorted));
  }

  sampler.layer_offsets_.resize(m + 2);
  size_t total = 0;
  for (int j = 1; j <= m; ++j) {
    sampler.layer_offsets_[j] = total;
    total += static_cast<size_t>(j) * len;
  }
  sampler.table_.assign(total, kNegInf);

  const double beta = epsilon / 4.0;
  for (int64_t i = 0; i < len; ++i) {
    sampler.MutableLayer(1, 1)[i] =
        sampler.TransitionLogWeight(1, 0, i) + sampler.log_tau_[i];
  }
  sampler.collapsed_.assign(static_cast<size_t>(m) * len, kNegInf);
  for (int j = 1; j <= m; ++j) {
    if (j >= 2) {
      const std::span<const double> collapsed = sampler.Collapsed(j - 1);
      const std::vector<double> fresh =
          ConvolveExpKernel(collapsed, beta, sampler.centers_[j],
                            sampler.extras_[j], /*min_gap=*/1);
      std::span<double> start = sampler.MutableLayer(j, 1);
      for (int64_t i = 0; i < len; ++i)
        start[i] = fresh[i] + sampler.log_tau_[i];
      const double stay = sampler.TransitionLogWeight(j, 0, 0);
      for (int r = 2; r <= j; ++r) {
        std::span<const double> prev = sampler.Layer(j - 1, r - 1);
        std::span<double> cur = sampler.MutableLayer(j, r);
        const double log_r = std::log(static_cast<double>(r));
        for (int64_t i = 0; i < len; ++i) {
          cur[i] = prev[i] + stay + sampler.log_tau_[i] - log_r;
        }
      }
    }
    std::span<double> sum = std::span<double>(sampler.collapsed_)
                                .subspan(static_cast<size_t>(j - 1) * len, len);
    for (int r = 1; r <= j; ++r) {
      std::span<const double> layer = sampler.Layer(j, r);
      for (int64_t i = 0; i < len; ++i) sum[i] = LogAddExp(sum[i], layer[i]);
    }
  }

  double log_z = kNegInf;
  for (int r = 1; r <= m; ++r) {
    std::span<const double> last = sampler.Layer(m, r);
    for (int64_t i = 0; i < len; ++i) {
      log_z =
          LogAddExp(log_z, last[i] + sampler.TransitionLogWeight(m + 1, i, n));
    }
  }
  if (!(log_z > kNegInf) || std::isnan(log_z)) {
    return absl::FailedPreconditionError(
        "Every block has zero weight; the bounds leave no volume");
  }
  sampler.log_normalizer_ = log_z;
  return sampler;
}

std::span<const double> BlockSampler::Layer(int j, int r) const {
  const size_t len = static_cast<size_t>(n_ + 1);
  return std::span<const double>(table_).subspan(
      layer_offsets_[j] + static_cast<size_t>(r - 1) * len, len);
}

std::span<const double> BlockSampler::Collapsed(int j) const {
  const size_t len = static_cast<size_t>(n_ + 1);
  return std::span<const double>(collapsed_)
      .subspan(static_cast<size_t>(j - 1) * len, len);
}

std::span<double> BlockSampler::MutableLayer(int j, int r) {
  const size_t len = static_cast<size_t>(n_ + 1);
  return std::span<double>(table_).subspan(
      layer_offsets_[j] + static_cast<size_t>(r - 1) * len, len);
}

double BlockSampler::TransitionLogWeight(int j, int64_t from,
                                         int64_t to) const {
  if (to < from) return kNegInf;
  const double d = static_cast<double>(to - from);
  const double center = centers_[j];
  double w = -(epsilon_ / 4.0) * std::abs(d - center);
  if (d >= center) w += extras_[j];
  return w;
}

BlockIndex BlockSampler::Sample(Rng& rng) const {
  const int64_t len = n_ + 1;
  BlockIndex block(m_);

  std::vector<double> weights(static_cast<size_t>(len) * m_);
  for (int r = 1; r <= m_; ++r) {
    std::span<const double> last = Layer(m_, r);
    for (int64_t i = 0; i < len; ++i) {
      weights[(r - 1) * len + i] = last[i] + TransitionLogWeight(m_ + 1, i, n_);
    }
  }
  size_t pick = SampleLogCategorical(weights, rng);
  int64_t gap = static_cast<int64_t>(pick % len);
  int run = static_cast<int>(pick / len) + 1;

  std::vector<double> prev_weights(len);
  std::vector<double> run_weights(m_);
  for (int j = m_; j >= 1; --j) {
    block[j - 1] = gap;
    if (j == 1) break;
    if (run >= 2) {
      --run;
      continue;
    }
    // A fresh run at layer j: the previous gap index is strictly smaller.
    for (int64_t i = 0; i < len; ++i) {
      if (i >= gap) {
        prev_weights[i] = kNegInf;
        continue;
      }
      prev_weights[i] = Collapsed(j - 1)[i] + TransitionLogWeight(j, i, gap);
    }
    const int64_t prev_gap = static_cast<int64_t>(SampleLogCategorical(
        std::span<const double>(prev_weights).first(gap), rng));
    run_weights.assign(j - 1, kNegInf);
    for (int r = 1; r < j; ++r) run_weights[r - 1] = Layer(j - 1, r)[prev_gap];
    run = static_cast<int>(SampleLogCategorical(run_weights, rng)) + 1;
    gap = prev_gap;
  }
  return block;
}

absl::StatusOr<BlockIndex> DpSampleBlock(MechanismFlavor flavor,
                                         const Dataset& x,
                                         const QuantileSpec& spec,
                                         double epsilon, Rng& rng) {
  absl::StatusOr<BlockSampler> sampler =
      BlockSampler::Create(flavor, x, spec, epsilon);
  if (!sampler.ok()) return sampler.status();
  return sampler->Sample(rng);
}

absl::StatusOr<QuantileEstimate> SampleWithinBlock(
    std::span<const int64_t> block, const Dataset& x, Rng& rng) {
  const Dataset sorted = x.Sorted();
  QuantileEstimate q(block.size());
  for (size_t j = 0; j < block.size(); ++j) {
    const int64_t i = block[j];
    if (i < 0 || i > sorted.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("Gap index ", i, " out of range"));
    }
    const double lo = sorted.OrderStatistic(i);
    const double hi = sorted.OrderStatistic(i + 1);
    if (!(hi > lo)) {
      return absl::FailedPreconditionError(
          absl::StrCat("Selected gap ", i, " has zero length"));
    }
    std::uniform_real_distribution<double> unif(lo, hi);
    double v = unif(rng);
    if (v >= hi) v = std::nextafter(hi, lo);
    q[j] = v;
  }
  std::sort(q.begin(), q.end());
  return q;
}

absl::StatusOr<MechanismDensity> MechanismDensity::Create(
    MechanismFlavor flavor, const Dataset& x, const QuantileSpec& spec,
    double epsilon) {
  absl::StatusOr<BlockSampler> sampler =
      BlockSampler::Create(flavor, x, spec, epsilon);
  if (!sampler.ok()) return sampler.status();
  return MechanismDensity(flavor, x.Sorted(), spec, epsilon,
                          sampler->log_normalizer());
}

absl::StatusOr<double> MechanismDensity::LogDensity(
    std::span<const double> q) const {
  if (static_cast<int>(q.size()) != spec_.m()) {
    return absl::InvalidArgumentError(
        absl::StrCat("Expected ", spec_.m(), " quantiles, got ", q.size()));
  }
  for (size_t j = 0; j < q.size(); ++j) {
    if (!x_.bounds().Contains(q[j])) {
      return absl::OutOfRangeError(
          absl::StrCat("q_", j + 1, " = ", q[j], " lies outside the bounds"));
    }
    if (j > 0 && q[j] < q[j - 1]) {
      return absl::InvalidArgumentError("Quantile candidate is decreasing");
    }
  }
  const double u = flavor_ == MechanismFlavor::kJointExp
                       ? JointExpUtility(x_, q, spec_)
                       : SimplifiedInverseSensitivityUtility(x_, q, spec_);
  return (epsilon_ / 2.0) * u - log_normalizer_;
}

absl::StatusOr<double> MechanismLogDensity(MechanismFlavor flavor,
                                           const Dataset& x,
                                           const QuantileSpec& spec,
                                           double epsilon,
                                           std::span<const double> q) {
  absl::StatusOr<MechanismDensity> density =
      MechanismDensity::Create(flavor, x, spec, epsilon);
  if (!density.ok()) return density.status();
  return density->LogDensity(q);
}

}  // namespace dpmq
