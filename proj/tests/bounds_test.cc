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

#include "fedvt/bounds.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace fedvt {
namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

std::vector<ClientSpec> Homogeneous(int m, int n, double rho) {
  std::vector<ClientSpec> out;
  for (int l = 1; l <= m; ++l) out.push_back({l, n, ZcdpBudget(rho)});
  return out;
}

std::vector<ClientSpec> RandomClients(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> m_dist(1, 6), n_dist(1, 500);
  std::uniform_real_distribution<double> log_rho(-4.0, 1.0);
  std::vector<ClientSpec> out;
  const int m = m_dist(gen);
  for (int l = 1; l <= m; ++l) {
    out.push_back({l, n_dist(gen), ZcdpBudget(std::pow(10.0, log_rho(gen)))});
  }
  return out;
}

double LogLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

TEST(BoundVariantTest, NamesRoundTrip) {
  EXPECT_EQ(BoundVariantName(BoundVariant::kExact), "exact");
  EXPECT_EQ(ParseBoundVariant("rho-linear"), BoundVariant::kRhoLinear);
  EXPECT_EQ(ParseBoundVariant("rho_linear"), BoundVariant::kRhoLinear);
  EXPECT_THROW(ParseBoundVariant("linear"), Error);
  EXPECT_EQ(BranchName(Branch::kSampleLimited), "sample_limited");
}

TEST(InfoProfileTest, RejectsTraceAboveDimensionTimesNorm) {
  EXPECT_NO_THROW(MakeInfoProfile(1.0, 3.0, 3));
  EXPECT_THROW(MakeInfoProfile(1.0, 3.5, 3), Error);
  EXPECT_THROW(MakeInfoProfile(-1.0, 0.0, 3), Error);
}

TEST(ClientwiseInfoTest, SingleClientSampleSide) {
  const auto clients = Homogeneous(1, 100, 0.5);
  const auto info =
      ClientwiseInfoTerm(MakeInfoProfile(1.0, 1.0, 1), std::span(clients), BoundVariant::kRhoLinear);
  EXPECT_EQ(info.total, 100.0);
  EXPECT_EQ(info.branches[0], Branch::kSampleLimited);
}

TEST(ClientwiseInfoTest, ZeroBudgetContributesNothing) {
  const auto clients = Homogeneous(1, 100, 0.0);
  const auto info =
      ClientwiseInfoTerm(MakeInfoProfile(1.0, 1.0, 1), std::span(clients), BoundVariant::kExact);
  EXPECT_EQ(info.total, 0.0);
  EXPECT_EQ(info.branches[0], Branch::kPrivacyLimited);
}

TEST(ClientwiseInfoTest, HomogeneousTotal) {
  const auto clients = Homogeneous(10, 100, 0.1);
  const auto info =
      ClientwiseInfoTerm(MakeInfoProfile(1.0, 5.0, 5), std::span(clients), BoundVariant::kRhoLinear);
  EXPECT_NEAR(info.total, 5000.0, 1e-9);
  for (double c : info.contributions) EXPECT_NEAR(c, 500.0, 1e-12);
}

TEST(ClientwiseInfoTest, TiesResolveToPrivacyBranch) {
  // rho * n^2 * op == n * trace with rho = 0.5, n = 2, op = 1, trace = 1.
  const auto clients = Homogeneous(1, 2, 0.5);
  const auto info =
      ClientwiseInfoTerm(MakeInfoProfile(1.0, 1.0, 1), std::span(clients), BoundVariant::kRhoLinear);
  EXPECT_EQ(info.branches[0], Branch::kPrivacyLimited);
}

TEST(ClientwiseInfoTest, EmptyClientListIsInvalidInput) {
  try {
    ClientwiseInfoTerm(MakeInfoProfile(1.0, 1.0, 1), std::span<const ClientSpec>(),
                       BoundVariant::kExact);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(ClientwiseInfoTest, BranchMatchesDirectComparison) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 200; ++rep) {
    const auto clients = RandomClients(gen);
    for (BoundVariant v : {BoundVariant::kExact, BoundVariant::kRhoLinear}) {
      const auto profile = MakeInfoProfile(2.0, 3.0, 2);
      const auto info = ClientwiseInfoTerm(profile, std::span(clients), v);
      double sum = 0.0;
      for (std::size_t l = 0; l < clients.size(); ++l) {
        const double n = clients[l].n;
        const double privacy = PrivacyGain(clients[l].rho_budget.rho(), v) * n * n * 2.0;
        const double sample = n * 3.0;
        EXPECT_EQ(info.branches[l] == Branch::kPrivacyLimited, privacy <= sample);
        EXPECT_EQ(info.contributions[l], std::min(privacy, sample));
        sum += info.contributions[l];
      }
      EXPECT_NEAR(info.total, sum, 1e-12 * sum);
    }
  }
}

TEST(ClientwiseInfoTest, LocalScalingWithSingleSampleClients) {
  const auto clients = Homogeneous(20, 1, 0.05);
  const auto info =
      ClientwiseInfoTerm(MakeInfoProfile(1.0, 3.0, 3), std::span(clients), BoundVariant::kExact);
  for (Branch b : info.branches) EXPECT_EQ(b, Branch::kPrivacyLimited);
}

TEST(VanTreesBoundTest, PointValues) {
  EXPECT_NEAR(VanTreesBound(1, 100.0, kPi2), 0.009101698376462753, 1e-15);
  EXPECT_NEAR(VanTreesBound(5, 5000.0, 5 * kPi2), 0.004951134263482746, 1e-15);
  EXPECT_DOUBLE_EQ(VanTreesBound(2, 0.0, 3.0), 4.0 / 3.0);
  EXPECT_FLOAT_EQ(VanTreesBound<float>(1, 100.0f, static_cast<float>(kPi2)), 0.0091016984f);
}

TEST(VanTreesBoundTest, ZeroDenominatorIsInvalidInput) {
  try {
    VanTreesBound(1, 0.0, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(MeanEstimationBoundTest, PointValues) {
  for (BoundVariant v : {BoundVariant::kExact, BoundVariant::kRhoLinear}) {
    const auto one = Homogeneous(1, 100, 0.5);
    const BoundReport a = MeanEstimationBound(1, 1.0, one, 1.0, v);
    EXPECT_NEAR(a.value, 1.0 / (100.0 + kPi2), 1e-15);
    EXPECT_EQ(a.branches[0], Branch::kSampleLimited);
    const auto ten = Homogeneous(10, 100, 0.1);
    const BoundReport b = MeanEstimationBound(5, 1.0, ten, 1.0, v);
    EXPECT_NEAR(b.value, 25.0 / (5000.0 + 5 * kPi2), 1e-15);
    EXPECT_NEAR(b.info_total + b.prior_trace, 5000.0 + 5 * kPi2, 1e-9);
  }
  EXPECT_TRUE(MeanEstimationBound(1, 1.0, Homogeneous(1, 100, 0.5), 1.0, BoundVariant::kExact)
                  .certified);
  EXPECT_FALSE(
      MeanEstimationBound(1, 1.0, Homogeneous(1, 100, 0.5), 1.0, BoundVariant::kRhoLinear)
          .certified);
}

TEST(MeanEstimationBoundTest, HarmonicDisplay) {
  const auto clients = Homogeneous(4, 50, 0.2);
  const BoundReport r = MeanEstimationBound(3, 2.0, clients, 1.0, BoundVariant::kExact);
  const double g = std::expm1(0.4);
  const double per = 1.0 / (3.0 / 50 + 9.0 / (g * 2500));
  ASSERT_TRUE(r.harmonic_display.has_value());
  EXPECT_NEAR(*r.harmonic_display, 4.0 / (4 * per), 1e-12);
}

TEST(MeanEstimationBoundTest, SigmaScalingUnderPrivacyBranch) {
  const auto clients = Homogeneous(3, 1000, 1e-5);
  const BoundReport a = MeanEstimationBound(2, 1.0, clients, 1e6, BoundVariant::kExact);
  const BoundReport b = MeanEstimationBound(2, 2.0, clients, 1e6, BoundVariant::kExact);
  for (Branch br : a.branches) EXPECT_EQ(br, Branch::kPrivacyLimited);
  EXPECT_NEAR(b.value / a.value, 4.0, 1e-9);
}

TEST(LinregBoundTest, IdentityDesignMatchesMean) {
  const auto clients = Homogeneous(3, 40, 0.3);
  for (BoundVariant v : {BoundVariant::kExact, BoundVariant::kRhoLinear}) {
    const BoundReport lin =
        LinregBound(LinRegDesign(Eigen::MatrixXd::Identity(3, 3)), 1.5, clients, 2.0, v);
    const BoundReport mean = MeanEstimationBound(3, 1.5, clients, 2.0, v);
    EXPECT_NEAR(lin.value, mean.value, 1e-15 * mean.value);
  }
}

TEST(LinregBoundTest, DiagonalDesignContribution) {
  const auto clients = Homogeneous(1, 10, 10.0);
  const Eigen::MatrixXd cov = Eigen::Vector2d(4, 1).asDiagonal();
  const BoundReport r = LinregBound(LinRegDesign(cov), 1.0, clients, 1.0, BoundVariant::kRhoLinear);
  EXPECT_NEAR(r.contributions[0], 50.0, 1e-12);
  EXPECT_NEAR(r.value, 4.0 / (50.0 + 2 * kPi2), 1e-15);
}

TEST(LinregBoundTest, ScalingDesignScalesInformation) {
  const auto clients = Homogeneous(2, 5, 0.01);
  Eigen::Matrix2d cov;
  cov << 2, 0.5, 0.5, 1;
  const BoundReport a = LinregBound(LinRegDesign(cov), 1.0, clients, 1.0, BoundVariant::kExact);
  const BoundReport b = LinregBound(LinRegDesign(3.0 * cov), 1.0, clients, 1.0, BoundVariant::kExact);
  EXPECT_NEAR(b.info_total, 3.0 * a.info_total, 1e-12 * b.info_total);
}

TEST(BoundPropertiesTest, Monotonicity) {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 200; ++rep) {
    const auto clients = RandomClients(gen);
    for (BoundVariant v : {BoundVariant::kExact, BoundVariant::kRhoLinear}) {
      const double base = MeanEstimationBound(2, 1.0, clients, 1.0, v).value;
      auto more_n = clients;
      more_n[rep % clients.size()].n += 7;
      EXPECT_LE(MeanEstimationBound(2, 1.0, more_n, 1.0, v).value, base);
      auto more_rho = clients;
      more_rho[rep % clients.size()].rho_budget = ZcdpBudget(clients[rep % clients.size()].rho_budget.rho() * 1.5);
      EXPECT_LE(MeanEstimationBound(2, 1.0, more_rho, 1.0, v).value, base);
      auto more_m = clients;
      more_m.push_back({static_cast<int>(clients.size()) + 1, 3, ZcdpBudget(0.2)});
      EXPECT_LE(MeanEstimationBound(2, 1.0, more_m, 1.0, v).value, base);
      EXPECT_GE(MeanEstimationBound(2, 1.3, clients, 1.0, v).value, base);
      EXPECT_GE(MeanEstimationBound(2, 1.0, clients, 1.4, v).value, base);
    }
  }
}

TEST(BoundPropertiesTest, ExactVariantIsNeverLarger) {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 200; ++rep) {
    const auto clients = RandomClients(gen);
    EXPECT_LE(MeanEstimationBound(3, 1.0, clients, 1.0, BoundVariant::kExact).value,
              MeanEstimationBound(3, 1.0, clients, 1.0, BoundVariant::kRhoLinear).value);
  }
}

TEST(BoundPropertiesTest, ContributionsSumToDenominatorMinusPrior) {
  std::mt19937_64 gen(13);
  for (int rep = 0; rep < 100; ++rep) {
    const auto clients = RandomClients(gen);
    const BoundReport r = MeanEstimationBound(4, 0.7, clients, 1.2, BoundVariant::kExact);
    double sum = 0.0;
    for (double c : r.contributions) sum += c;
    EXPECT_NEAR(sum, 16.0 / r.value - r.prior_trace, 1e-9 * sum + 1e-9);
    EXPECT_GT(r.value, 0.0);
  }
}

TEST(SampleLimitedBoundTest, IgnoresPrivacy) {
  const auto clients = Homogeneous(2, 10, 1e-6);
  const BoundReport r = SampleLimitedBound("mean", 1, MakeInfoProfile(1.0, 1.0, 1), clients, 1.0);
  EXPECT_NEAR(r.value, 1.0 / (20.0 + kPi2), 1e-15);
  EXPECT_TRUE(r.certified);
}

TEST(NonparamBoundTest, PointValue) {
  const auto clients = Homogeneous(1, 1000, 1.0);
  for (BoundVariant v : {BoundVariant::kExact, BoundVariant::kRhoLinear}) {
    const BoundReport r = NonparamBound(1.0, 1, 1.0, 1.0, clients, v);
    ASSERT_TRUE(r.p_star.has_value());
    EXPECT_EQ(*r.p_star, 8);
    EXPECT_NEAR(r.value, 1.0 / 189.0, 1e-15);
    EXPECT_FALSE(r.boundary_warning);
    EXPECT_FALSE(r.certified);
  }
}

TEST(NonparamBoundTest, ArgmaxIsLocalMaximum) {
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> alpha(0.5, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto clients = RandomClients(gen);
    const double a = alpha(gen);
    const BoundReport r = NonparamBound(a, 1 + rep % 3, 1.0, 1.0, clients, BoundVariant::kExact, 5000);
    const int64_t p = *r.p_star;
    if (p > 1) {
      EXPECT_GE(r.value, NonparamBound(a, 1 + rep % 3, 1.0, 1.0, clients, BoundVariant::kExact, p - 1).value);
    }
  }
}

TEST(NonparamBoundTest, BoundaryWarning) {
  const auto clients = Homogeneous(1, 1000, 1.0);
  const BoundReport r = NonparamBound(1.0, 1, 1.0, 1.0, clients, BoundVariant::kExact, 4);
  EXPECT_EQ(*r.p_star, 4);
  EXPECT_TRUE(r.boundary_warning);
}

TEST(NonparamBoundTest, IdenticalClientsGroupExactly) {
  const auto grouped = Homogeneous(50, 200, 0.3);
  const BoundReport r = NonparamBound(1.0, 1, 1.0, 1.0, grouped, BoundVariant::kExact, 2000);
  const double g = std::expm1(0.6);
  double best = 0.0;
  for (int p = 1; p <= 2000; ++p) {
    const double cost = std::max(p / 200.0, 1.0 * p * p / (g * 200.0 * 200.0));
    best = std::max(best, 1.0 / (1.0 * p * p + 50.0 / cost));
  }
  EXPECT_NEAR(r.value, best, 1e-12 * best);
}

TEST(NonparamBoundTest, SampleLimitedSlope) {
  std::vector<double> mn, value;
  for (int m : {10, 100, 1000, 10000}) {
    const auto clients = Homogeneous(m, 100, 1e9);
    mn.push_back(100.0 * m);
    value.push_back(NonparamBound(1.0, 1, 1.0, 1.0, clients, BoundVariant::kExact).value);
  }
  EXPECT_NEAR(LogLogSlope(mn, value), -2.0 / 3.0, 0.02);
}

TEST(HomogeneousReductionTest, PointValueAndSandwich) {
  EXPECT_NEAR(HomogeneousReduction(1, 1.0, 10, 100, 1.0, BoundVariant::kRhoLinear), 1e-3, 1e-18);
  EXPECT_NEAR(HomogeneousReduction(1, 1.0, 10, 100, 1e-6, BoundVariant::kRhoLinear), 1.0 / (1e-6 * 10 * 1e4),
              1e-9);
  for (int d : {1, 3}) {
    for (int m : {1, 5, 50}) {
      for (int n : {50, 200, 1000}) {
        for (double rho : {0.01, 0.1, 1.0}) {
          const double h = HomogeneousReduction(d, 1.0, m, n, rho, BoundVariant::kExact);
          const BoundReport b =
              MeanEstimationBound(d, 1.0, Homogeneous(m, n, rho), 1.0, BoundVariant::kExact);
          if (b.prior_trace > b.info_total) continue;
          EXPECT_LE(b.value, h * (1 + 1e-12));
          EXPECT_GE(b.value, h / 2);
          EXPECT_LE(*b.harmonic_display, 2 * h * (1 + 1e-12));
          EXPECT_GE(*b.harmonic_display, h * (1 - 1e-12));
        }
      }
    }
  }
}

}  // namespace
}  // namespace fedvt
