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

#include "dpmq/utility.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "absl/strings/str_cat.h"

namespace dpmq {

namespace {

// Number of points in each of the m+1 bins delimited by q.
std::vector<int64_t> BinCounts(const Dataset& x, std::span<const double> q) {
  const size_t m = q.size();
  std::vector<int64_t> counts(m + 1);
  int64_t previous = 0;
  for (size_t i = 0; i < m; ++i) {
    const int64_t at_most = x.CountAtMost(q[i]);
    counts[i] = at_most - previous;
    previous = at_most;
  }
  counts[m] = x.size() - previous;
  return counts;
}

absl::Status CheckCandidate(const Dataset& x, std::span<const double> q,
                            const QuantileSpec& spec) {
  if (static_cast<int>(q.size()) != spec.m()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Candidate has ", q.size(), " entries, expected ", spec.m()));
  }
  for (size_t j = 0; j < q.size(); ++j) {
    if (!x.bounds().Contains(q[j])) {
      return absl::InvalidArgumentError(
          absl::StrCat("q_", j + 1, " = ", q[j], " lies outside the bounds"));
    }
    if (j > 0 && q[j] < q[j - 1]) {
      return absl::InvalidArgumentError(
          absl::StrCat("Candidate is decreasing at j = ", j + 1));
    }
  }
  return absl::OkStatus();
}

}  // namespace

double JointExpUtility(const Dataset& x, std::span<const double> q,
                       const QuantileSpec& spec) {
  const int64_t n = x.size();
  const std::vector<int64_t> counts = BinCounts(x, q);
  double penalty = 0.0;
  for (int i = 1; i <= spec.m() + 1; ++i) {
    const double expected = n * (spec.p(i) - spec.p(i - 1));
    penalty += std::abs(expected - static_cast<double>(counts[i - 1]));
  }
  return -0.5 * penalty;
}

double SimplifiedInverseSensitivityUtility(const Dataset& x,
                                           std::span<const double> q,
                                           const QuantileSpec& spec) {
  const int64_t n = x.size();
  const int m = spec.m();
  const std::vector<int64_t> counts = BinCounts(x, q);
  double penalty = 0.0;
  for (int i = 1; i <= m + 1; ++i) {
    const int64_t delta =
        counts[i - 1] - (spec.Rank(i, n) - spec.Rank(i - 1, n));
    penalty += 0.5 * std::abs(static_cast<double>(delta));
    if (i <= m && delta >= 0) penalty += 1.0;
  }
  return -penalty;
}

absl::StatusOr<double> InverseSensitivityUtility(const Dataset& x,
                                                 std::span<const double> q,
                                                 const QuantileSpec& spec) {
  if (absl::Status s = CheckCandidate(x, q, spec); !s.ok()) return s;
  const int m = spec.m();
  const int64_t n = x.size();
  for (int j = 1; j < m; ++j) {
    if (!(q[j] > q[j - 1])) {
      return absl::InvalidArgumentError(
          absl::StrCat("Candidate has a collision at j = ", j + 1));
    }
  }
  for (double v : x.values()) {
    if (std::find(q.begin(), q.end(), v) != q.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("Candidate shares the point ", v, " with the data"));
    }
  }
  const double a = x.bounds().lower();
  const double b = x.bounds().upper();
  auto q_at = [&](int i) { return i <= 0 ? a : (i > m ? b : q[i - 1]); };
  auto required = [&](int i) { return spec.Rank(i, n) - spec.Rank(i - 1, n); };

  // First bin [q_0, q_1], closed on both sides.
  int64_t closed_count = 0;
  for (double v : x.values()) {
    if (v >= a && v <= q_at(1)) ++closed_count;
  }
  const int64_t delta_closed = closed_count - required(1);
  double penalty = 0.5 * std::abs(static_cast<double>(delta_closed)) +
                   (delta_closed >= 0 ? 1.0 : 0.0);

  for (int i = 2; i <= m + 1; ++i) {
    int64_t count = 0;
    for (double v : x.values()) {
      if (v > q_at(i - 1) && v <= q_at(i)) ++count;
    }
    const int64_t delta = count - required(i);
    penalty += 0.5 * std::abs(static_cast<double>(delta));
    if (i <= m && delta >= 0) penalty += 1.0;
  }
  return -penalty;
}

absl::StatusOr<int64_t> BruteForceInverseSensitivity(const Dataset& x,
                                                     std::span<const double> q,
                                                     const QuantileSpec& spec) {
  if (absl::Status s = CheckCandidate(x, q, spec); !s.ok()) return s;
  if (absl::Status s = Validate(spec, x.size()); !s.ok()) return s;
  const int m = spec.m();
  const int64_t n = x.size();
  const double a = x.bounds().lower();
  const double b = x.bounds().upper();

  // Replacement candidates: the q_j themselves plus one point strictly inside
  // every open interval delimited by X, q, a and b. The empirical quantiles
  // only depend on how values order against q, so this set reaches every
  // achievable Y up to relabeling.
  std::vector<double> knots(x.values().begin(), x.values().end());
  knots.insert(knots.end(), q.begin(), q.end());
  knots.push_back(a);
  knots.push_back(b);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  std::vector<double> candidates(q.begin(), q.end());
  for (size_t k = 0; k + 1 < knots.size(); ++k) {
    candidates.push_back(0.5 * (knots[k] + knots[k + 1]));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  // below[v][j] = 1{v < q_j}, at_most[v][j] = 1{v <= q_j}.
  auto indicators = [&](double v, std::vector<int>& below,
                        std::vector<int>& at_most) {
    below.assign(m, 0);
    at_most.assign(m, 0);
    for (int j = 0; j < m; ++j) {
      below[j] = v < q[j] ? 1 : 0;
      at_most[j] = v <= q[j] ? 1 : 0;
    }
  };

  std::vector<double> sorted_x(x.values().begin(), x.values().end());
  std::sort(sorted_x.begin(), sorted_x.end());
  std::vector<std::vector<int>> x_below(n), x_at_most(n);
  for (int64_t k = 0; k < n; ++k) {
    indicators(sorted_x[k], x_below[k], x_at_most[k]);
  }
  std::vector<std::vector<int>> c_below(candidates.size()),
      c_at_most(candidates.size());
  for (size_t k = 0; k < candidates.size(); ++k) {
    indicators(candidates[k], c_below[k], c_at_most[k]);
  }
  std::vector<int64_t> ranks(m);
  for (int j = 1; j <= m; ++j) ranks[j - 1] = spec.Rank(j, n);

  std::vector<int64_t> below(m, 0), at_most(m, 0);
  for (int64_t k = 0; k < n; ++k) {
    for (int j = 0; j < m; ++j) {
      below[j] += x_below[k][j];
      at_most[j] += x_at_most[k][j];
    }
  }

  auto maps_to_q = [&]() {
    for (int j = 0; j < m; ++j) {
      if (!(below[j] < ranks[j] && ranks[j] <= at_most[j])) return false;
    }
    return true;
  };

  // Adds `remaining` candidates with index >= start.
  std::function<bool(size_t, int64_t)> add = [&](size_t start,
                                                 int64_t remaining) {
    if (remaining == 0) return maps_to_q();
    for (size_t c = start; c < candidates.size(); ++c) {
      for (int j = 0; j < m; ++j) {
        below[j] += c_below[c][j];
        at_most[j] += c_at_most[c][j];
      }
      const bool found = add(c, remaining - 1);
      for (int j = 0; j < m; ++j) {
        below[j] -= c_below[c][j];
        at_most[j] -= c_at_most[c][j];
      }
      if (found) return true;
    }
    return false;
  };

  // Removes `remaining` points of sorted X with index >= start, skipping
  // duplicate sub-multisets.
  std::function<bool(int64_t, int64_t, int64_t)> remove =
      [&](int64_t start, int64_t remaining, int64_t k) {
        if (remaining == 0) return add(0, k);
        for (int64_t r = start; r < n; ++r) {
          if (r > start && sorted_x[r] == sorted_x[r - 1]) continue;
          for (int j = 0; j < m; ++j) {
            below[j] -= x_below[r][j];
            at_most[j] -= x_at_most[r][j];
          }
          const bool found = remove(r + 1, remaining - 1, k);
          for (int j = 0; j < m; ++j) {
            below[j] += x_below[r][j];
            at_most[j] += x_at_most[r][j];
          }
          if (found) return true;
        }
        return false;
      };

  for (int64_t k = 0; k <= n; ++k) {
    if (remove(0, k, k)) return k;
  }
  return absl::FailedPreconditionError(
      "No dataset of this size has the requested empirical quantiles");
}

}  // namespace dpmq
