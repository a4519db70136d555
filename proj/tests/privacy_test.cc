//
// Copyright 2026 The fedvt Authors
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

#include "fedvt/privacy.h"

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

namespace fedvt {
namespace {

GaussianOutputMechanism SumMechanism(double noise_std) {
  return GaussianOutputMechanism(
      [](const Dataset& x) -> Eigen::VectorXd { return x.colwise().sum().transpose(); },
      noise_std);
}

AdjacentPair UnitGapPair() {
  Dataset a(1, 1), b(1, 1);
  a << 0.0;
  b << 1.0;
  return {a, b};
}

TEST(RenyiOrderTest, RejectsOrdersAtOrBelowOne) {
  EXPECT_THROW(RenyiOrder(1.0), Error);
  EXPECT_THROW(RenyiOrder(0.5), Error);
  EXPECT_THROW(RenyiOrder(std::numeric_limits<double>::infinity()), Error);
  try {
    RenyiOrder bad(1.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidOrder);
  }
  EXPECT_DOUBLE_EQ(RenyiOrder(2.0).value(), 2.0);
}

TEST(ZcdpBudgetTest, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(ZcdpBudget(-0.1), Error);
  EXPECT_THROW(ZcdpBudget(std::nan("")), Error);
  EXPECT_EQ((ZcdpBudget(0.1) + ZcdpBudget(0.2)).rho(), 0.1 + 0.2);
}

TEST(RenyiDivergenceGaussianTest, ClosedFormValues) {
  EXPECT_EQ(RenyiDivergenceGaussian(0.0, 1.0, RenyiOrder(2.0)), 0.0);
  EXPECT_NEAR(RenyiDivergenceGaussian(1.0, 1.0, RenyiOrder(2.0)), 1.0, 1e-15);
  EXPECT_NEAR(RenyiDivergenceGaussian(2.0, 1.0, RenyiOrder(3.0)), 6.0, 1e-15);
  EXPECT_NEAR(RenyiDivergenceGaussian<float>(1.0f, 1.0f, RenyiOrder(2.0)), 1.0f, 1e-6f);
}

TEST(RenyiDivergenceGaussianTest, MatchesQuadrature) {
  const auto log_n = [](double mu) {
    return [mu](double x) {
      return -0.5 * (x - mu) * (x - mu) - 0.5 * std::log(2.0 * std::numbers::pi);
    };
  };
  for (double alpha : DefaultAuditGrid()) {
    const double numeric =
        RenyiDivergenceByQuadrature(log_n(1.0), log_n(0.0), -20.0, 60.0, RenyiOrder(alpha));
    EXPECT_NEAR(numeric, RenyiDivergenceGaussian(1.0, 1.0, RenyiOrder(alpha)), 1e-6)
        << "alpha=" << alpha;
  }
}

TEST(NumericRenyiDivergenceTest, IdenticalDensitiesGiveZero) {
  const GridDensity p = TabulateGaussian(0.0, 1.0, -10.0, 10.0, 4097);
  EXPECT_NEAR(NumericRenyiDivergence(p, p, RenyiOrder(2.0)), 0.0, 1e-10);
}

TEST(NumericRenyiDivergenceTest, BernoulliTwoPointSum) {
  GridDensity p{Eigen::Vector2d(0, 1), Eigen::Vector2d(0.25, 0.75), true};
  GridDensity q{Eigen::Vector2d(0, 1), Eigen::Vector2d(0.75, 0.25), true};
  const double expected = std::log(0.75 * 0.75 / 0.25 + 0.25 * 0.25 / 0.75);
  EXPECT_NEAR(NumericRenyiDivergence(p, q, RenyiOrder(2.0)), expected, 1e-12);
  EXPECT_NEAR(expected, 0.8473, 1e-4);
}

TEST(NumericRenyiDivergenceTest, UnitGaussiansGapOne) {
  const GridDensity p = TabulateGaussian(1.0, 1.0, -11.0, 12.0, 8193);
  const GridDensity q = TabulateGaussian(0.0, 1.0, -11.0, 12.0, 8193);
  EXPECT_NEAR(NumericRenyiDivergence(p, q, RenyiOrder(2.0)), 1.0, 1e-6);
}

TEST(NumericRenyiDivergenceTest, SupportViolationIsInfinite) {
  GridDensity p{Eigen::Vector2d(0, 1), Eigen::Vector2d(0.5, 0.5), true};
  GridDensity q{Eigen::Vector2d(0, 1), Eigen::Vector2d(1.0, 0.0), true};
  EXPECT_TRUE(IsInfiniteDivergence(NumericRenyiDivergence(p, q, RenyiOrder(2.0))));
}

TEST(NumericRenyiDivergenceTest, GridMismatchIsRejected) {
  GridDensity p{Eigen::Vector2d(0, 1), Eigen::Vector2d(0.5, 0.5), true};
  GridDensity q{Eigen::Vector3d(0, 1, 2), Eigen::Vector3d(0.2, 0.3, 0.5), true};
  EXPECT_THROW(NumericRenyiDivergence(p, q, RenyiOrder(2.0)), Error);
}

TEST(NumericRenyiDivergenceTest, NondecreasingInOrder) {
  GridDensity p{Eigen::Vector3d(0, 1, 2), Eigen::Vector3d(0.2, 0.3, 0.5), true};
  GridDensity q{Eigen::Vector3d(0, 1, 2), Eigen::Vector3d(0.5, 0.3, 0.2), true};
  double previous = 0.0;
  for (double alpha : DefaultAuditGrid()) {
    const double d = NumericRenyiDivergence(p, q, RenyiOrder(alpha));
    EXPECT_GE(d, previous - 1e-12);
    previous = d;
  }
}

TEST(GaussianMechanismRhoTest, CalibrationValues) {
  EXPECT_DOUBLE_EQ(GaussianMechanismRho(1.0, 1.0).rho(), 0.5);
  EXPECT_DOUBLE_EQ(GaussianMechanismRho(0.0, 1.0).rho(), 0.0);
  EXPECT_DOUBLE_EQ(GaussianMechanismRho(2.0, 1.0).rho(), 2.0);
  EXPECT_NEAR(GaussianNoiseForRho(1.0, 0.5), 1.0, 1e-15);
  EXPECT_THROW(GaussianNoiseForRho(1.0, 0.0), Error);
}

TEST(GaussianMechanismRhoTest, TightOnAuditGrid) {
  for (double sens : {0.5, 1.0, 2.0}) {
    for (double noise : {0.7, 1.0, 3.0}) {
      const double rho = GaussianMechanismRho(sens, noise).rho();
      for (double alpha : DefaultAuditGrid()) {
        EXPECT_NEAR(RenyiDivergenceGaussian(sens, noise, RenyiOrder(alpha)),
                    alpha * rho, 1e-6);
      }
    }
  }
}

TEST(ComposeRoundsTest, SumsBudgets) {
  const std::vector<double> two = {0.1, 0.2};
  EXPECT_NEAR(ComposeRounds(two).rho(), 0.3, 1e-15);
  EXPECT_EQ(ComposeRounds(std::vector<double>{}).rho(), 0.0);
  const std::vector<double> with_gap = {0.5, 0.0, 0.5};
  EXPECT_EQ(ComposeRounds(with_gap).rho(), 1.0);
}

TEST(ComposeRoundsTest, OrderInvariantAndAdditive) {
  std::vector<double> a = {0.125, 0.25, 0.5, 0.0625};
  std::vector<double> b = {0.5, 0.0625, 0.25, 0.125};
  EXPECT_EQ(ComposeRounds(a), ComposeRounds(b));
  std::vector<double> joined = a;
  joined.insert(joined.end(), b.begin(), b.end());
  EXPECT_EQ(ComposeRounds(joined), ComposeRounds(a) + ComposeRounds(b));
  EXPECT_THROW(ComposeRounds(std::vector<double>{0.1, -0.2}), Error);
}

TEST(PureDpToZcdpTest, HalfEpsilonSquared) {
  EXPECT_DOUBLE_EQ(PureDpToZcdp(1.0).rho(), 0.5);
  EXPECT_DOUBLE_EQ(PureDpToZcdp(0.0).rho(), 0.0);
  EXPECT_DOUBLE_EQ(PureDpToZcdp(2.0).rho(), 2.0);
  EXPECT_THROW(PureDpToZcdp(-1.0), Error);
}

TEST(AuditMechanismTest, CalibratedGaussianPasses) {
  const auto mech = SumMechanism(1.0);
  const auto audit = AuditMechanism(mech, UnitGapPair(), ZcdpBudget(0.5), DefaultAuditGrid());
  EXPECT_TRUE(audit.passed);
  for (std::size_t k = 0; k < audit.alpha_grid.size(); ++k) {
    EXPECT_NEAR(audit.divergences[k], 0.5 * audit.alpha_grid[k], 1e-12);
  }
}

TEST(AuditMechanismTest, UnderClaimedGaussianFails) {
  const auto mech = SumMechanism(1.0);
  EXPECT_FALSE(
      AuditMechanism(mech, UnitGapPair(), ZcdpBudget(0.49), DefaultAuditGrid()).passed);
}

TEST(AuditMechanismTest, ConstantMechanismPassesAtZero) {
  ConstantMechanism mech;
  EXPECT_TRUE(AuditMechanism(mech, UnitGapPair(), ZcdpBudget(0.0), DefaultAuditGrid()).passed);
}

TEST(AuditMechanismTest, RandomizedResponseUnderPureDpConversion) {
  RandomizedResponse rr(0.25);
  EXPECT_NEAR(rr.epsilon(), std::log(3.0), 1e-12);
  const ZcdpBudget rho = PureDpToZcdp(rr.epsilon());
  EXPECT_NEAR(rho.rho(), 0.6035, 1e-4);
  const auto audit = AuditMechanism(rr, UnitGapPair(), rho, DefaultAuditGrid());
  EXPECT_TRUE(audit.passed);
  const auto it = std::find(audit.alpha_grid.begin(), audit.alpha_grid.end(), 2.0);
  ASSERT_NE(it, audit.alpha_grid.end());
  EXPECT_NEAR(audit.divergences[it - audit.alpha_grid.begin()], 0.8473, 1e-4);
}

TEST(AuditMechanismTest, MonotoneInClaimedBudget) {
  const auto mech = SumMechanism(1.3);
  bool passed_before = false;
  for (double rho = 0.0; rho <= 1.0; rho += 0.01) {
    const bool passed =
        AuditMechanism(mech, UnitGapPair(), ZcdpBudget(rho), DefaultAuditGrid()).passed;
    if (passed_before) {
      EXPECT_TRUE(passed) << rho;
    }
    passed_before = passed_before || passed;
  }
  EXPECT_TRUE(passed_before);
}

TEST(AuditMechanismTest, ChecksBothDirections) {
  RandomizedResponse rr(0.1);
  const auto forward = AuditMechanism(rr, UnitGapPair(), ZcdpBudget(10.0), DefaultAuditGrid());
  AdjacentPair flipped{UnitGapPair().second, UnitGapPair().first};
  const auto backward = AuditMechanism(rr, flipped, ZcdpBudget(10.0), DefaultAuditGrid());
  EXPECT_EQ(forward.divergences, backward.divergences);
}

TEST(AuditMechanismTest, RejectsNonAdjacentPair) {
  Dataset a = Dataset::Zero(2, 1);
  Dataset b = Dataset::Ones(2, 1);
  const auto mech = SumMechanism(1.0);
  EXPECT_FALSE(IsAdjacent({a, b}));
  EXPECT_THROW(AuditMechanism(mech, AdjacentPair{a, b}, ZcdpBudget(1.0), DefaultAuditGrid()),
               Error);
}

TEST(AuditMechanismTest, EnumeratedPairsCoverAllNeighbours) {
  const std::vector<Eigen::VectorXd> support = {Eigen::VectorXd::Zero(1),
                                                Eigen::VectorXd::Ones(1)};
  const auto pairs = EnumerateAdjacentPairs(support, 3);
  // 2^3 datasets, 3 positions, one alternative value each.
  EXPECT_EQ(pairs.size(), 24u);
  for (const auto& p : pairs) EXPECT_TRUE(IsAdjacent(p));
}

TEST(AuditMechanismTest, GridIsTheDefault) {
  EXPECT_EQ(DefaultAuditGrid(), (std::vector<double>{1.1, 1.5, 2, 4, 8, 16, 32}));
}

}  // namespace
}  // namespace fedvt
