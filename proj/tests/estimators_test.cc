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

#include "fedvt/estimators.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fedvt/bounds.h"
#include "fedvt/priors.h"

namespace fedvt {
namespace {

std::vector<ClientSpec> Homogeneous(int m, int n, double rho) {
  std::vector<ClientSpec> out;
  for (int l = 1; l <= m; ++l) out.push_back({l, n, ZcdpBudget(rho)});
  return out;
}

EstimatorContext MeanContext(int d) { return {d, 1.0, 1.0, std::nullopt}; }

Eigen::VectorXd PooledMean(std::span<const Dataset> data) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(data[0].cols());
  int count = 0;
  for (const Dataset& x : data) {
    sum += x.colwise().sum().transpose();
    count += static_cast<int>(x.rows());
  }
  return sum / count;
}

TEST(EstimatorKindTest, NamesRoundTrip) {
  for (EstimatorKind k : {EstimatorKind::kNonprivateMean, EstimatorKind::kFedGaussianMean,
                          EstimatorKind::kFedGaussianMeanAdaptive, EstimatorKind::kFedLinreg}) {
    EXPECT_EQ(ParseEstimatorKind(EstimatorKindName(k)), k);
  }
  EXPECT_THROW(ParseEstimatorKind("median"), Error);
}

TEST(EstimatorTest, DefaultClips) {
  EXPECT_DOUBLE_EQ(DefaultMeanClip({1, 2.0, 1.5, std::nullopt}), 13.5);
  EstimatorContext ctx{2, 1.0, 1.0, Eigen::MatrixXd(Eigen::Vector2d(4, 1).asDiagonal())};
  const auto clips = DefaultLinregClips(ctx);
  EXPECT_DOUBLE_EQ(clips[0], std::sqrt(5.0) + 8.0);
  EXPECT_DOUBLE_EQ(clips[1], std::sqrt(2.0) * clips[0] + 6.0);
}

TEST(EstimatorTest, NonprivateMeanIsPooledMean) {
  const auto clients = Homogeneous(3, 7, 0.0);
  const Estimator est({EstimatorKind::kNonprivateMean}, MeanContext(2), clients);
  EXPECT_EQ(est.protocol(), nullptr);
  const auto model = MakeGaussianMeanFamily(2, 1.0);
  const auto data = SampleLocalData(*model, Eigen::Vector2d(0.2, -0.1), clients, 5);
  const EstimatorRun run = est.Run(data, 1);
  EXPECT_LE((run.estimate - PooledMean(data)).norm(), 1e-15);
  EXPECT_FALSE(run.transcript.has_value());
  for (const ZcdpBudget& b : est.DeclaredBudget()) EXPECT_EQ(b.rho(), 0.0);
}

TEST(EstimatorTest, FederatedMeanNoiselessLimitIsPooledMean) {
  const auto clients = Homogeneous(4, 25, 1e20);
  EstimatorSpec spec{EstimatorKind::kFedGaussianMean, 100.0};
  const Estimator est(spec, MeanContext(3), clients);
  const auto model = MakeGaussianMeanFamily(3, 1.0);
  const auto data = SampleLocalData(*model, Eigen::Vector3d(0.5, 0.0, -0.5), clients, 8);
  EXPECT_LE((est.Run(data, 2).estimate - PooledMean(data)).norm(), 1e-8);
}

TEST(EstimatorTest, AdaptiveMeanNoiselessLimitIsPooledMean) {
  const auto clients = Homogeneous(3, 20, 1e20);
  EstimatorSpec spec{EstimatorKind::kFedGaussianMeanAdaptive, 100.0};
  const Estimator est(spec, MeanContext(1), clients);
  const auto model = MakeGaussianMeanFamily(1, 1.0);
  const auto data = SampleLocalData(*model, Eigen::VectorXd::Constant(1, 0.3), clients, 8);
  const EstimatorRun run = est.Run(data, 2);
  EXPECT_LE((run.estimate - PooledMean(data)).norm(), 1e-8);
  ASSERT_TRUE(run.transcript.has_value());
  EXPECT_EQ(run.transcript->rounds.size(), 2u);
}

TEST(EstimatorTest, LinregNoiselessLimitIsOls) {
  const auto clients = Homogeneous(3, 30, 1e24);
  EstimatorContext ctx{2, 0.5, 1.0, Eigen::MatrixXd::Identity(2, 2)};
  EstimatorSpec spec{EstimatorKind::kFedLinreg, 100.0, 1000.0};
  const Estimator est(spec, ctx, clients);
  const auto model = MakeLinearRegressionFamily(LinRegDesign(Eigen::MatrixXd::Identity(2, 2)), 0.5);
  const auto data = SampleLocalData(*model, Eigen::Vector2d(0.4, -0.7), clients, 3);
  Eigen::MatrixXd z(90, 2);
  Eigen::VectorXd y(90);
  for (int l = 0; l < 3; ++l) {
    z.middleRows(30 * l, 30) = data[l].leftCols(2);
    y.segment(30 * l, 30) = data[l].col(2);
  }
  const Eigen::VectorXd ols = (z.transpose() * z).ldlt().solve(z.transpose() * y);
  EXPECT_LE((est.Run(data, 4).estimate - ols).norm(), 1e-8);
}

TEST(EstimatorTest, LinregRequiresDesign) {
  EXPECT_THROW(Estimator({EstimatorKind::kFedLinreg}, MeanContext(2), Homogeneous(2, 5, 1.0)),
               Error);
}

TEST(EstimatorTest, AllSilentClientsHaveNoSignal) {
  try {
    Estimator({EstimatorKind::kFedGaussianMean}, MeanContext(1), Homogeneous(2, 5, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoSignal);
  }
}

TEST(EstimatorTest, DeclaredBudgetMatchesClients) {
  std::vector<ClientSpec> clients = {{1, 10, ZcdpBudget(0.3)}, {2, 20, ZcdpBudget(0.7)}};
  EstimatorContext ctx{1, 1.0, 1.0, Eigen::MatrixXd::Identity(1, 1)};
  for (EstimatorKind k : {EstimatorKind::kFedGaussianMean, EstimatorKind::kFedGaussianMeanAdaptive,
                          EstimatorKind::kFedLinreg}) {
    const Estimator est({k}, ctx, clients);
    const BudgetVector declared = est.DeclaredBudget();
    ASSERT_EQ(declared.size(), 2u);
    EXPECT_NEAR(declared[0].rho(), 0.3, 1e-15);
    EXPECT_NEAR(declared[1].rho(), 0.7, 1e-15);
    const auto model = k == EstimatorKind::kFedLinreg
                           ? MakeLinearRegressionFamily(LinRegDesign(Eigen::MatrixXd::Identity(1, 1)), 1.0)
                           : MakeGaussianMeanFamily(1, 1.0);
    const auto data = SampleLocalData(*model, Eigen::VectorXd::Zero(1), clients, 1);
    const BudgetVector spent = Account(*est.Run(data, 9).transcript);
    for (int l = 0; l < 2; ++l) EXPECT_NEAR(spent[l].rho(), declared[l].rho(), 1e-15);
  }
}

TEST(EstimatorTest, RunIsDeterministicInSeed) {
  const auto clients = Homogeneous(2, 10, 0.5);
  const Estimator est({EstimatorKind::kFedGaussianMeanAdaptive}, MeanContext(2), clients);
  const auto model = MakeGaussianMeanFamily(2, 1.0);
  const auto data = SampleLocalData(*model, Eigen::Vector2d(0.1, 0.1), clients, 1);
  EXPECT_EQ(est.Run(data, 4).estimate, est.Run(data, 4).estimate);
  EXPECT_NE(est.Run(data, 4).estimate, est.Run(data, 5).estimate);
}

TEST(EmpiricalBayesRiskTest, RiskRespectsLowerBound) {
  const auto clients = Homogeneous(2, 50, 0.1);
  const Estimator est({EstimatorKind::kFedGaussianMean}, MeanContext(1), clients);
  const auto model = MakeGaussianMeanFamily(1, 1.0);
  const ProductPrior prior = ProductPrior::Isotropic(1, 1.0);
  const double bound = MeanEstimationBound(1, 1.0, clients, 1.0, BoundVariant::kExact).value;
  const RiskReport r = EmpiricalBayesRisk(est, *model, prior, bound, {4000, 7, 1});
  EXPECT_TRUE(r.passed);
  EXPECT_GT(r.margin, 0.0);
  EXPECT_EQ(r.trials, 4000);
  EXPECT_NEAR(r.margin, r.risk - bound, 1e-15);
}

TEST(EmpiricalBayesRiskTest, NonprivateRiskMatchesSamplingVariance) {
  const auto clients = Homogeneous(2, 50, 0.0);
  const Estimator est({EstimatorKind::kNonprivateMean}, MeanContext(1), clients);
  const auto model = MakeGaussianMeanFamily(1, 1.0);
  const ProductPrior prior = ProductPrior::Isotropic(1, 1.0);
  const RiskReport r = EmpiricalBayesRisk(est, *model, prior, 0.0, {10000, 3, 1});
  EXPECT_NEAR(r.risk, 0.01, 4 * r.std_error);
}

TEST(EmpiricalBayesRiskTest, IndependentOfWorkerCount) {
  const auto clients = Homogeneous(2, 10, 0.5);
  const Estimator est({EstimatorKind::kFedGaussianMeanAdaptive}, MeanContext(1), clients);
  const auto model = MakeGaussianMeanFamily(1, 1.0);
  const ProductPrior prior = ProductPrior::Isotropic(1, 1.0);
  const RiskReport a = EmpiricalBayesRisk(est, *model, prior, 0.0, {1000, 3, 1});
  const RiskReport b = EmpiricalBayesRisk(est, *model, prior, 0.0, {1000, 3, 3});
  EXPECT_EQ(a.risk, b.risk);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(EmpiricalBayesRiskTest, TooFewTrialsIsRejected) {
  const auto clients = Homogeneous(1, 10, 0.5);
  const Estimator est({EstimatorKind::kFedGaussianMean}, MeanContext(1), clients);
  const auto model = MakeGaussianMeanFamily(1, 1.0);
  EXPECT_THROW(EmpiricalBayesRisk(est, *model, ProductPrior::Isotropic(1, 1.0), 0.0, {999, 1, 1}),
               Error);
}

}  // namespace
}  // namespace fedvt
