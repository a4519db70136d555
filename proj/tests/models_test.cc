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

#include "fedvt/models.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fedvt/rng.h"
#include "fedvt/stats.h"

namespace fedvt {
namespace {

Eigen::VectorXd Vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(FisherMatrixTest, RejectsAsymmetricAndIndefinite) {
  Eigen::Matrix2d asym;
  asym << 1, 2, 0, 1;
  EXPECT_THROW(MakeFisherMatrix(asym), Error);
  Eigen::Matrix2d indefinite;
  indefinite << 1, 0, 0, -1;
  EXPECT_THROW(MakeFisherMatrix(indefinite), Error);
  Eigen::Matrix2d ok;
  ok << 2, 1, 1, 2;
  const auto f = MakeFisherMatrix(ok);
  EXPECT_NEAR(f.op_norm, 3.0, 1e-12);
  EXPECT_NEAR(f.trace, 4.0, 1e-12);
}

TEST(FisherMatrixTest, TemplatedOnScalar) {
  Eigen::Matrix2f m;
  m << 4, 0, 0, 1;
  const FisherMatrix<float> f = MakeFisherMatrix(m);
  EXPECT_NEAR(f.op_norm, 4.0f, 1e-5f);
}

TEST(GaussianMeanFamilyTest, FisherValues) {
  GaussianMeanFamily two(2, 1.0);
  const auto f2 = two.Fisher(Vec({0, 0}));
  EXPECT_DOUBLE_EQ(f2.op_norm, 1.0);
  EXPECT_DOUBLE_EQ(f2.trace, 2.0);
  GaussianMeanFamily one(1, 2.0);
  const auto f1 = one.Fisher(Vec({0}));
  EXPECT_DOUBLE_EQ(f1.op_norm, 0.25);
  EXPECT_DOUBLE_EQ(f1.trace, 0.25);
}

TEST(GaussianMeanFamilyTest, ScoreVanishesAtMean) {
  GaussianMeanFamily fam(3, 1.5);
  const Eigen::VectorXd theta = Vec({0.1, -0.4, 2.0});
  EXPECT_EQ(fam.Score(theta, theta), Eigen::VectorXd::Zero(3));
}

TEST(GaussianMeanFamilyTest, RejectsBadParameters) {
  EXPECT_THROW(GaussianMeanFamily(0, 1.0), Error);
  EXPECT_THROW(GaussianMeanFamily(1, 0.0), Error);
  GaussianMeanFamily fam(2, 1.0);
  EXPECT_THROW(fam.ValidateParameter(Vec({1.0})), Error);
}

TEST(BernoulliFamilyTest, FisherValues) {
  BernoulliFamily fam;
  EXPECT_DOUBLE_EQ(fam.Fisher(Vec({0.5})).trace, 4.0);
  EXPECT_NEAR(fam.Fisher(Vec({0.25})).trace, 16.0 / 3.0, 1e-12);
  EXPECT_THROW(fam.ValidateParameter(Vec({0.0})), Error);
  EXPECT_THROW(fam.ValidateParameter(Vec({1.0})), Error);
}

TEST(BernoulliFamilyTest, ScoreHasZeroMean) {
  BernoulliFamily fam;
  const Eigen::VectorXd theta = Vec({0.3});
  const auto support = fam.DiscreteSupport();
  ASSERT_TRUE(support);
  double mean = 0.0;
  for (const auto& x : *support) mean += std::exp(fam.LogDensity(x, theta)) * fam.Score(x, theta)[0];
  EXPECT_NEAR(mean, 0.0, 1e-14);
}

TEST(LinearRegressionFamilyTest, IdentityDesign) {
  LinearRegressionFamily fam(LinRegDesign(Eigen::MatrixXd::Identity(3, 3)), 1.0);
  const auto f = fam.Fisher(Eigen::VectorXd::Zero(3));
  EXPECT_TRUE(f.matrix.isApprox(Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_DOUBLE_EQ(f.trace, 3.0);
}

TEST(LinearRegressionFamilyTest, DiagonalDesignScaledBySigma) {
  LinearRegressionFamily fam(LinRegDesign(Eigen::Vector2d(4, 1).asDiagonal()), 2.0);
  const auto f = fam.Fisher(Eigen::VectorXd::Zero(2));
  EXPECT_DOUBLE_EQ(f.op_norm, 1.0);
  EXPECT_DOUBLE_EQ(f.trace, 1.25);
}

TEST(LinearRegressionFamilyTest, ScoreFormula) {
  LinearRegressionFamily fam(LinRegDesign(Eigen::MatrixXd::Identity(2, 2)), 2.0);
  const Eigen::VectorXd x = Vec({1.0, -2.0, 3.0});
  const Eigen::VectorXd theta = Vec({0.5, 0.25});
  const double resid = 3.0 - (1.0 * 0.5 - 2.0 * 0.25);
  EXPECT_TRUE(fam.Score(x, theta).isApprox(Vec({1.0, -2.0}) * resid / 4.0, 1e-14));
}

TEST(LinearRegressionFamilyTest, RejectsNonPsdDesign) {
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  EXPECT_THROW(LinRegDesign{bad}, Error);
}

TEST(LinearRegressionFamilyTest, SingularDesignSamplesButHasNoDensity) {
  Eigen::Matrix2d singular;
  singular << 1, 1, 1, 1;
  LinRegDesign design(singular);
  EXPECT_FALSE(design.LogDensity(Eigen::Vector2d(1, 1)).has_value());
  StreamRng rng(3);
  const Eigen::VectorXd z = design.Sample(rng);
  EXPECT_NEAR(z[0], z[1], 1e-9);
}

// Score equals centered finite differences of the log density.
TEST(ModelFamilyProperty, ScoreMatchesFiniteDifferences) {
  std::vector<std::unique_ptr<ModelFamily>> families;
  families.push_back(MakeGaussianMeanFamily(2, 1.3));
  families.push_back(MakeBernoulliFamily());
  Eigen::Matrix2d cov;
  cov << 2.0, 0.3, 0.3, 0.5;
  families.push_back(MakeLinearRegressionFamily(LinRegDesign(cov), 0.7));
  StreamRng rng(DeriveSeed(17, {1}));
  constexpr double kStep = 1e-5;
  for (const auto& fam : families) {
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd theta(fam->ParamDim());
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        theta[i] = fam->Name() == "bernoulli" ? 0.2 + 0.6 * rng.Uniform()
                                              : 2.0 * rng.Uniform() - 1.0;
      }
      const Observation x = fam->Sample(theta, rng);
      const Eigen::VectorXd score = fam->Score(x, theta);
      for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd up = theta, down = theta;
        up[i] += kStep;
        down[i] -= kStep;
        const double fd = (fam->LogDensity(x, up) - fam->LogDensity(x, down)) / (2 * kStep);
        EXPECT_LE(std::abs(fd - score[i]), 1e-5 * std::max(1.0, std::abs(score[i])))
            << fam->Name();
      }
    }
  }
}

TEST(ModelFamilyProperty, TraceAtMostDimTimesOpNorm) {
  Eigen::Matrix3d cov;
  cov << 3, 1, 0, 1, 2, 0.5, 0, 0.5, 1;
  LinearRegressionFamily fam(LinRegDesign(cov), 0.9);
  const auto f = fam.Fisher(Eigen::VectorXd::Zero(3));
  EXPECT_LE(f.trace, 3 * f.op_norm + 1e-12);
}

// Zero-mean score within 4 standard errors by Monte Carlo.
TEST(ModelFamilyProperty, ScoreMeanIsZero) {
  std::vector<std::unique_ptr<ModelFamily>> families;
  families.push_back(MakeGaussianMeanFamily(2, 1.0));
  families.push_back(MakeLinearRegressionFamily(LinRegDesign(Eigen::MatrixXd::Identity(2, 2)), 1.0));
  families.push_back(MakeBernoulliFamily());
  for (const auto& fam : families) {
    for (double t : {0.3, 0.5, 0.7}) {
      const Eigen::VectorXd theta = Eigen::VectorXd::Constant(fam->ParamDim(), t);
      StreamRng rng(DeriveSeed(5, {static_cast<uint64_t>(t * 10)}));
      std::vector<std::vector<double>> samples(fam->ParamDim());
      for (int i = 0; i < 20000; ++i) {
        const Eigen::VectorXd s = fam->Score(fam->Sample(theta, rng), theta);
        for (int k = 0; k < fam->ParamDim(); ++k) samples[k].push_back(s[k]);
      }
      for (const auto& col : samples) {
        const auto summary = SummarizeSamples<double>(col);
        EXPECT_LE(std::abs(summary.mean), 4 * summary.std_error) << fam->Name();
      }
    }
  }
}

TEST(FisherConsistencyTest, GaussianMonteCarlo) {
  GaussianMeanFamily fam(1, 1.0);
  const auto report = CheckFisherConsistency(fam, Vec({0.2}), 100000, 11);
  EXPECT_EQ(report.method, FisherMethod::kMonteCarlo);
  EXPECT_NEAR(report.estimate(0, 0), 1.0, 0.005 + 4 * report.std_errors(0, 0));
  EXPECT_TRUE(report.consistent());
}

TEST(FisherConsistencyTest, BernoulliExactEnumeration) {
  BernoulliFamily fam;
  const auto report = CheckFisherConsistency(fam, Vec({0.5}), 1000, 0);
  EXPECT_EQ(report.method, FisherMethod::kExactEnumeration);
  EXPECT_NEAR(report.estimate(0, 0), 4.0, 1e-12);
  EXPECT_TRUE(report.consistent());
}

TEST(FisherConsistencyTest, DistinctSeedsAgree) {
  Eigen::Matrix2d cov;
  cov << 1.0, 0.2, 0.2, 0.5;
  LinearRegressionFamily fam(LinRegDesign(cov), 1.0);
  const auto a = CheckFisherConsistency(fam, Vec({0.1, 0.2}), 20000, 1);
  const auto b = CheckFisherConsistency(fam, Vec({0.1, 0.2}), 20000, 2);
  EXPECT_TRUE(a.consistent());
  EXPECT_TRUE(b.consistent());
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double se = std::hypot(a.std_errors(i, j), b.std_errors(i, j));
      EXPECT_LE(std::abs(a.estimate(i, j) - b.estimate(i, j)), 4 * se);
    }
  }
}

TEST(FisherConsistencyTest, NeedsEnoughTrials) {
  GaussianMeanFamily fam(1, 1.0);
  EXPECT_THROW(CheckFisherConsistency(fam, Vec({0.0}), 10, 0), Error);
}

}  // namespace
}  // namespace fedvt
