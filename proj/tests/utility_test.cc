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
#include <random>
#include <vector>

#include "dpmq/core.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpmq {
namespace {

using ::dpmq::testing::MakeDataset;
using ::dpmq::testing::MakeSpec;
using ::dpmq::testing::StatusIs;
using ::testing::HasSubstr;

// Bin counts by direct scanning: bin 1 is [a, q_1], bin i is (q_{i-1}, q_i].
std::vector<int64_t> CountBins(const std::vector<double>& x,
                               const std::vector<double>& q) {
  std::vector<int64_t> c(q.size() + 1, 0);
  for (double v : x) {
    size_t i = 0;
    while (i < q.size() && v > q[i]) ++i;
    ++c[i];
  }
  return c;
}

TEST(JointExpUtilityTest, Examples) {
  EXPECT_DOUBLE_EQ(JointExpUtility(MakeDataset({0.2, 0.4, 0.6}, 0, 1),
                                   std::vector<double>{0.4}, MakeSpec({0.5})),
                   -0.5);
  EXPECT_DOUBLE_EQ(JointExpUtility(MakeDataset({0, 0, 0, 0}, -1, 1),
                                   std::vector<double>{0.7}, MakeSpec({0.5})),
                   -2.0);
  // Exact counts in every interval.
  EXPECT_DOUBLE_EQ(
      JointExpUtility(MakeDataset({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, 0, 1),
                      std::vector<double>{0.2, 0.4},
                      MakeSpec({1.0 / 3, 2.0 / 3})),
      0.0);
}

TEST(JointExpUtilityTest, MatchesDirectCountsAndIsHalfInteger) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 2000; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    const int m = std::uniform_int_distribution<int>(1, 3)(rng);
    const auto x = testing::RandomGridValues(rng, n, 6);
    auto q = testing::RandomGridValues(rng, m, 12);
    std::sort(q.begin(), q.end());
    const QuantileSpec spec = QuantileSpec::Uniform(m);
    const double u = JointExpUtility(MakeDataset(x, 0, 1), q, spec);
    const std::vector<int64_t> c = CountBins(x, q);
    double oracle = 0;
    for (int i = 0; i <= m; ++i) {
      oracle -= 0.5 * std::abs(n * (spec.p(i + 1) - spec.p(i)) - c[i]);
    }
    EXPECT_NEAR(u, oracle, 1e-12);
    EXPECT_LE(u, 0);
  }
}

TEST(SimplifiedInverseSensitivityTest, Examples) {
  EXPECT_DOUBLE_EQ(SimplifiedInverseSensitivityUtility(
                       MakeDataset({1, 2, 3, 4}, 0, 5),
                       std::vector<double>{2.5}, MakeSpec({0.5})),
                   -1.0);
  EXPECT_DOUBLE_EQ(SimplifiedInverseSensitivityUtility(
                       MakeDataset({0.2, 0.4, 0.6}, 0, 1),
                       std::vector<double>{0.5}, MakeSpec({0.5})),
                   -1.0);
  EXPECT_DOUBLE_EQ(SimplifiedInverseSensitivityUtility(
                       MakeDataset({0, 0, 0, 0}, -1, 1),
                       std::vector<double>{0.7}, MakeSpec({0.5})),
                   -3.0);
}

TEST(InverseSensitivityTest, ExampleMatchesOracle) {
  const Dataset x = MakeDataset({0.5, 0.5}, 0, 1);
  const QuantileSpec spec = MakeSpec({0.5});
  EXPECT_DOUBLE_EQ(
      *InverseSensitivityUtility(x, std::vector<double>{0.25}, spec), -1.0);
  EXPECT_EQ(*BruteForceInverseSensitivity(x, std::vector<double>{0.25}, spec),
            1);
}

TEST(InverseSensitivityTest, RejectsCollisionWithData) {
  EXPECT_THAT(
      InverseSensitivityUtility(MakeDataset({0.25, 0.5}, 0, 1),
                                std::vector<double>{0.25}, MakeSpec({0.5})),
      StatusIs(absl::StatusCode::kInvalidArgument,
               HasSubstr("shares the point")));
}

TEST(InverseSensitivityTest, RejectsCollisionWithinCandidate) {
  EXPECT_THAT(
      InverseSensitivityUtility(MakeDataset({0.1, 0.2, 0.3, 0.4}, 0, 1),
                                std::vector<double>{0.25, 0.25},
                                MakeSpec({0.25, 0.75})),
      StatusIs(absl::StatusCode::kInvalidArgument, HasSubstr("collision")));
}

TEST(InverseSensitivityTest, JustAboveDataPointAgreesWithOracle) {
  const Dataset x = MakeDataset({0.1, 0.9}, 0, 1);
  const QuantileSpec spec = MakeSpec({0.5});
  const std::vector<double> q = {0.1 + 1e-9};
  EXPECT_EQ(-*InverseSensitivityUtility(x, q, spec),
            static_cast<double>(*BruteForceInverseSensitivity(x, q, spec)));
}

TEST(BruteForceTest, EmpiricalQuantilesCostNothing) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 200; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 7)(rng);
    const int m = std::uniform_int_distribution<int>(1, 2)(rng);
    const QuantileSpec spec = testing::RandomSpec(rng, m, n);
    if (!Validate(spec, n).ok()) continue;
    const Dataset x = MakeDataset(testing::RandomGridValues(rng, n, 5), 0, 1);
    const QuantileEstimate q = *EmpiricalQuantiles(x, spec);
    EXPECT_EQ(*BruteForceInverseSensitivity(x, q, spec), 0);
  }
}

TEST(BruteForceTest, ConstantDataFarCandidate) {
  // At most one zero may stay below the median: one point moves onto 0.7
  // and two move above it.
  const Dataset x = MakeDataset({0, 0, 0, 0}, -1, 1);
  const QuantileSpec spec = MakeSpec({0.5});
  const std::vector<double> q = {0.7};
  EXPECT_EQ(*BruteForceInverseSensitivity(x, q, spec), 3);
  EXPECT_EQ(-*InverseSensitivityUtility(x, q, spec), 3.0);
}

TEST(InverseSensitivityTest, FormulaMatchesOracleOnTinyGrid) {
  // A reduced version of the exhaustive acceptance sweep.
  const std::vector<double> values = {0.2, 0.4, 0.6, 0.8};
  const std::vector<double> cands = {0.1, 0.3, 0.5, 0.7, 0.9};
  for (const auto& p : std::vector<std::vector<double>>{
           {0.3}, {0.5}, {0.8}, {0.25, 0.75}, {0.4, 0.9}}) {
    const QuantileSpec spec = MakeSpec(p);
    for (int n = 2; n <= 4; ++n) {
      if (!Validate(spec, n).ok()) continue;
      std::vector<int> idx(n, 0);
      while (true) {
        std::vector<double> x;
        for (int k : idx) x.push_back(values[k]);
        const Dataset data = MakeDataset(x, 0, 1);
        for (size_t a = 0; a < cands.size(); ++a) {
          for (size_t b = a + 1; b <= cands.size(); ++b) {
            std::vector<double> q = {cands[a]};
            if (spec.m() == 2) {
              if (b == cands.size()) continue;
              q.push_back(cands[b]);
            } else if (b != a + 1) {
              continue;
            }
            EXPECT_EQ(-*InverseSensitivityUtility(data, q, spec),
                      static_cast<double>(
                          *BruteForceInverseSensitivity(data, q, spec)));
          }
        }
        int k = n - 1;
        while (k >= 0 && idx[k] == static_cast<int>(values.size()) - 1) --k;
        if (k < 0) break;
        ++idx[k];
        for (int r = k + 1; r < n; ++r) idx[r] = idx[k];
      }
    }
  }
}

TEST(SensitivityTest, NeighborsChangeUtilitiesByAtMostOne) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 10000; ++t) {
    const int m = std::uniform_int_distribution<int>(1, 3)(rng);
    const int n = std::uniform_int_distribution<int>(m + 1, 15)(rng);
    const QuantileSpec spec = testing::RandomSpec(rng, m, n);
    if (!Validate(spec, n).ok()) continue;
    auto x = testing::RandomGridValues(rng, n, 8);
    auto y = x;
    y[std::uniform_int_distribution<int>(0, n - 1)(rng)] =
        testing::RandomGridValues(rng, 1, 8)[0];
    auto q = testing::RandomGridValues(rng, m, 16);
    std::sort(q.begin(), q.end());
    const Dataset dx = MakeDataset(x, 0, 1), dy = MakeDataset(y, 0, 1);
    EXPECT_LE(
        std::abs(JointExpUtility(dx, q, spec) - JointExpUtility(dy, q, spec)),
        1.0 + 1e-12);
    EXPECT_LE(std::abs(SimplifiedInverseSensitivityUtility(dx, q, spec) -
                       SimplifiedInverseSensitivityUtility(dy, q, spec)),
              1.0);
  }
}

TEST(SensitivityTest, SimplifiedStaysCloseToExact) {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int t = 0; t < 10000; ++t) {
    const int m = std::uniform_int_distribution<int>(1, 3)(rng);
    const int n = std::uniform_int_distribution<int>(m + 1, 12)(rng);
    const QuantileSpec spec = testing::RandomSpec(rng, m, n);
    if (!Validate(spec, n).ok()) continue;
    const auto x = testing::RandomGridValues(rng, n, 10);
    auto q = testing::RandomGridValues(rng, m, 20);
    std::sort(q.begin(), q.end());
    absl::StatusOr<double> exact =
        InverseSensitivityUtility(MakeDataset(x, 0, 1), q, spec);
    if (!exact.ok()) continue;  // collision
    ++checked;
    const double simplified =
        SimplifiedInverseSensitivityUtility(MakeDataset(x, 0, 1), q, spec);
    EXPECT_LE(std::abs(simplified - *exact), 2.0 * (m + 1));
  }
  EXPECT_GT(checked, 1000);
}

TEST(UtilityTest, PermutationInvariance) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 500; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const QuantileSpec spec = testing::RandomSpec(rng, 1, n);
    auto x = testing::RandomGridValues(rng, n, 10);
    const std::vector<double> q = {0.05 + 0.1 * (t % 10)};
    const Dataset a = MakeDataset(x, 0, 1);
    std::shuffle(x.begin(), x.end(), rng);
    const Dataset b = MakeDataset(x, 0, 1);
    EXPECT_EQ(JointExpUtility(a, q, spec), JointExpUtility(b, q, spec));
    EXPECT_EQ(SimplifiedInverseSensitivityUtility(a, q, spec),
              SimplifiedInverseSensitivityUtility(b, q, spec));
    EXPECT_EQ(*InverseSensitivityUtility(a, q, spec),
              *InverseSensitivityUtility(b, q, spec));
    EXPECT_EQ(*BruteForceInverseSensitivity(a, q, spec),
              *BruteForceInverseSensitivity(b, q, spec));
  }
}

}  // namespace
}  // namespace dpmq
