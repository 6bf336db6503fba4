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
#include <vector>

#include "dpmq/core.h"
#include "dpmq/sampler.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpmq {
namespace {

using ::dpmq::testing::MakeBudget;
using ::dpmq::testing::MakeDataset;
using ::dpmq::testing::MakeSpec;
using ::dpmq::testing::StatusIs;
using ::dpmq::testing::Unwrap;
using ::testing::IsSupersetOf;

AuditConfig SmallConfig() {
  AuditConfig config;
  config.neighbor_grid_size = 9;
  config.output_grid_size = 16;
  config.mc_samples = 200;
  config.bootstrap_resamples = 20;
  return config;
}

TEST(AuditTest, ParseNames) {
  for (AuditedMechanism m :
       {AuditedMechanism::kJointExp, AuditedMechanism::kInverseSensitivity,
        AuditedMechanism::kHsJointExp}) {
    EXPECT_EQ(Unwrap(ParseAuditedMechanism(AuditedMechanismName(m))), m);
  }
  EXPECT_EQ(Unwrap(ParseAuditedMechanism("is")),
            AuditedMechanism::kInverseSensitivity);
  EXPECT_THAT(ParseAuditedMechanism("laplace"),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

TEST(AuditTest, ValidateConfig) {
  AuditConfig config;
  EXPECT_TRUE(ValidateAuditConfig(config).ok());
  config.neighbor_grid_size = 1;
  EXPECT_THAT(ValidateAuditConfig(config),
              StatusIs(absl::StatusCode::kInvalidArgument));
  config = AuditConfig();
  config.noise_stddev = 0;
  EXPECT_THAT(ValidateAuditConfig(config),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

TEST(NeighborsTest, CountAndDistance) {
  const Dataset x = MakeDataset({0.25, 0.3, 1.0}, 0, 1);
  const std::vector<Dataset> ys = Neighbors(x, 5);
  // 0.25 and 1.0 lie on the grid {0, 0.25, 0.5, 0.75, 1}.
  EXPECT_EQ(ys.size(), 4u + 5u + 4u);
  for (const Dataset& y : ys) {
    EXPECT_EQ(Unwrap(HammingDistance(x, y)), 1);
    EXPECT_EQ(y.bounds().lower(), 0);
    EXPECT_EQ(y.bounds().upper(), 1);
  }
}

TEST(OutputGridTest, SingleQuantileIncludesCellMidpoints) {
  const Dataset x = MakeDataset({0.2, 0.6}, 0, 1);
  const Dataset y = MakeDataset({0.2, 0.9}, 0, 1);
  const auto grid = OutputGrid(x, y, x.bounds(), 1, 2);
  std::vector<double> points;
  for (const auto& q : grid) points.push_back(q[0]);
  EXPECT_THAT(points, IsSupersetOf({0.1, 0.4, 0.5, 0.75, 0.95}));
  EXPECT_TRUE(std::is_sorted(points.begin(), points.end()));
}

TEST(OutputGridTest, DoublingGivesSuperset) {
  const Dataset x = MakeDataset({0.2, 0.6, 0.7}, 0, 1);
  for (int m : {1, 2}) {
    const auto coarse = OutputGrid(x, x, x.bounds(), m, 8);
    const auto fine = OutputGrid(x, x, x.bounds(), m, 16);
    EXPECT_THAT(fine, IsSupersetOf(coarse));
    for (const auto& q : fine) {
      EXPECT_TRUE(std::is_sorted(q.begin(), q.end()));
    }
  }
  // Interior points 1/4, 1/2, 3/4 give 6 non-decreasing pairs.
  EXPECT_EQ(OutputGrid(x, x, x.bounds(), 2, 4).size(), 6u);
}

TEST(PrivacyLossTest, IdenticalDatasetsGiveOne) {
  const Dataset x = MakeDataset({0.1, 0.4, 0.5, 0.9}, 0, 1);
  const QuantileSpec spec = MakeSpec({0.5});
  for (AuditedMechanism m :
       {AuditedMechanism::kJointExp, AuditedMechanism::kInverseSensitivity,
        AuditedMechanism::kHsJointExp}) {
    for (double q : {0.05, 0.45, 0.7}) {
      EXPECT_NEAR(Unwrap(PrivacyLoss(x, x, std::vector<double>{q}, m,
                                     MakeBudget(1), spec, SmallConfig())),
                  1.0, 1e-12);
    }
  }
}

TEST(PrivacyLossTest, Antisymmetric) {
  const Dataset x = MakeDataset({0.1, 0.4, 0.5, 0.9}, 0, 1);
  const Dataset y = MakeDataset({0.1, 0.4, 0.8, 0.9}, 0, 1);
  const QuantileSpec spec = MakeSpec({0.3, 0.7});
  for (AuditedMechanism m :
       {AuditedMechanism::kJointExp, AuditedMechanism::kInverseSensitivity,
        AuditedMechanism::kHsJointExp}) {
    const std::vector<double> q = {0.45, 0.6};
    EXPECT_NEAR(
        Unwrap(LogPrivacyLoss(x, y, q, m, MakeBudget(1), spec, SmallConfig())),
        -Unwrap(LogPrivacyLoss(y, x, q, m, MakeBudget(1), spec, SmallConfig())),
        1e-12);
  }
}

TEST(PrivacyLossTest, MatchesDensityRatio) {
  const Dataset x = MakeDataset({0.1, 0.4, 0.5, 0.9}, 0, 1);
  const Dataset y = MakeDataset({0.1, 0.4, 0.5, 0.2}, 0, 1);
  const QuantileSpec spec = MakeSpec({0.5});
  const std::vector<double> q = {0.3};
  EXPECT_NEAR(
      Unwrap(LogPrivacyLoss(x, y, q, AuditedMechanism::kJointExp, MakeBudget(2),
                            spec, SmallConfig())),
      Unwrap(MechanismLogDensity(MechanismFlavor::kJointExp, x, spec, 2, q)) -
          Unwrap(
              MechanismLogDensity(MechanismFlavor::kJointExp, y, spec, 2, q)),
      1e-12);
}

TEST(PrivacyLossTest, RejectsDistantDatasets) {
  const Dataset x = MakeDataset({0.1, 0.4, 0.5}, 0, 1);
  const Dataset y = MakeDataset({0.2, 0.3, 0.5}, 0, 1);
  EXPECT_THAT(LogPrivacyLoss(x, y, std::vector<double>{0.3},
                             AuditedMechanism::kJointExp, MakeBudget(1),
                             MakeSpec({0.5}), SmallConfig()),
              StatusIs(absl::StatusCode::kInvalidArgument));
}

// Direct maximization of the exact log-density difference.
double OracleEpsilonEff(const Dataset& x, MechanismFlavor flavor,
                        const QuantileSpec& spec, double eps,
                        const AuditConfig& config) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Dataset& y : Neighbors(x, config.neighbor_grid_size)) {
    for (const QuantileEstimate& q :
         OutputGrid(x, y, x.bounds(), spec.m(), config.output_grid_size)) {
      best = std::max(best, *MechanismLogDensity(flavor, x, spec, eps, q) -
                                *MechanismLogDensity(flavor, y, spec, eps, q));
    }
  }
  return best;
}

TEST(EpsilonEffTest, ExactMechanismsRespectBudget) {
  std::mt19937_64 rng(41);
  const AuditConfig config = SmallConfig();
  for (int t = 0; t < 10; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 5)(rng);
    const int m = 1 + t % 2;
    if (n <= m) continue;
    const QuantileSpec spec = testing::RandomSpec(rng, m, n);
    const Dataset x = MakeDataset(testing::RandomGridValues(rng, n, 10), 0, 1);
    for (double eps : {0.5, 1.0, 2.0}) {
      for (auto [audited, flavor] :
           {std::pair{AuditedMechanism::kJointExp, MechanismFlavor::kJointExp},
            std::pair{AuditedMechanism::kInverseSensitivity,
                      MechanismFlavor::kInverseSensitivity}}) {
        const PrivacyLossReport report =
            Unwrap(EpsilonEff(x, audited, MakeBudget(eps), spec, config));
        EXPECT_LE(report.epsilon_eff, eps + 1e-6);
        EXPECT_GT(report.epsilon_eff, 0);
        EXPECT_EQ(report.std_error, 0);
        EXPECT_NEAR(report.epsilon_eff,
                    OracleEpsilonEff(x, flavor, spec, eps, config), 1e-12);
        EXPECT_EQ(Unwrap(HammingDistance(x, report.argmax_neighbor)), 1);
      }
    }
  }
}

TEST(EpsilonEffTest, MonotoneInGridRefinement) {
  const Dataset x = MakeDataset({0.15, 0.4, 0.45, 0.8}, 0, 1);
  const QuantileSpec spec = MakeSpec({0.5});
  AuditConfig coarse = SmallConfig();
  AuditConfig fine = coarse;
  fine.neighbor_grid_size = 17;
  fine.output_grid_size = 32;
  for (AuditedMechanism m :
       {AuditedMechanism::kJointExp, AuditedMechanism::kInverseSensitivity}) {
    EXPECT_LE(Unwrap(EpsilonEff(x, m, MakeBudget(1), spec, coarse)).epsilon_eff,
              Unwrap(EpsilonEff(x, m, MakeBudget(1), spec, fine)).epsilon_eff);
  }
}

TEST(EpsilonEffTest, ThreadCountDoesNotChangeResult) {
  const Dataset x = MakeDataset({0.15, 0.4, 0.45, 0.8}, 0, 1);
  AuditConfig one = SmallConfig();
  AuditConfig four = one;
  four.threads = 4;
  const auto a = Unwrap(EpsilonEff(x, AuditedMechanism::kHsJointExp,
                                   MakeBudget(1), MakeSpec({0.5}), one));
  const auto b = Unwrap(EpsilonEff(x, AuditedMechanism::kHsJointExp,
                                   MakeBudget(1), MakeSpec({0.5}), four));
  EXPECT_EQ(a.epsilon_eff, b.epsilon_eff);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.argmax_output, b.argmax_output);
}

TEST(EpsilonEffTest, SmoothingWithTinyNoiseTracksJointExp) {
  const Dataset x = MakeDataset({0.1, 0.4, 0.5, 0.9}, 0, 1);
  const QuantileSpec spec = MakeSpec({0.5});
  AuditConfig config = SmallConfig();
  config.noise_stddev = 1e-7;
  const double je = Unwrap(EpsilonEff(x, AuditedMechanism::kJointExp,
                                      MakeBudget(1), spec, config))
                        .epsilon_eff;
  const PrivacyLossReport hs = Unwrap(EpsilonEff(
      x, AuditedMechanism::kHsJointExp, MakeBudget(1), spec, config));
  EXPECT_NEAR(hs.epsilon_eff, je, 1e-3);
  EXPECT_LE(hs.epsilon_eff, 1 + 1e-3);
  EXPECT_GE(hs.std_error, 0);
}

TEST(EpsilonEffTest, LargeNoiseReducesLoss) {
  const Dataset x = MakeDataset({0.1, 0.4, 0.5, 0.9}, 0, 1);
  const QuantileSpec spec = MakeSpec({0.5});
  AuditConfig config = SmallConfig();
  config.noise_stddev = 0.3;
  const PrivacyLossReport hs = Unwrap(EpsilonEff(
      x, AuditedMechanism::kHsJointExp, MakeBudget(1), spec, config));
  EXPECT_LT(hs.epsilon_eff, 0.8);
  EXPECT_GT(hs.std_error, 0);
  EXPECT_LT(hs.std_error, 0.1);
}

}  // namespace
}  // namespace dpmq
