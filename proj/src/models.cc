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
#include <numbers>
#include <random>
#include <utility>

namespace fedvt {
namespace {

Eigen::VectorXd StandardNormalVector(int d, StreamRng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(d);
  for (int i = 0; i < d; ++i) z[i] = normal(rng);
  return z;
}

void RequireDim(const Eigen::VectorXd& v, int dim, const char* what) {
  if (v.size() != dim) {
    throw Error(ErrorCode::kInvalidParameter,
                std::string(what) + " has dimension " +
                    std::to_string(v.size()) + ", expected " +
                    std::to_string(dim));
  }
}

}  // namespace

bool IsSymmetricPsd(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol * scale;
}

GaussianMeanFamily::GaussianMeanFamily(int d, double sigma)
    : d_(d), sigma_(sigma) {
  if (d < 1) throw Error(ErrorCode::kInvalidParameter, "d must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidParameter, "sigma must be > 0");
  }
}

void GaussianMeanFamily::ValidateParameter(const Eigen::VectorXd& theta) const {
  RequireDim(theta, d_, "theta");
  if (!theta.allFinite()) {
    throw Error(ErrorCode::kInvalidParameter, "theta must be finite");
  }
}

Observation GaussianMeanFamily::Sample(const Eigen::VectorXd& theta,
                                       StreamRng& rng) const {
  return theta + sigma_ * StandardNormalVector(d_, rng);
}

double GaussianMeanFamily::LogDensity(const Observation& x,
                                      const Eigen::VectorXd& theta) const {
  const double s2 = sigma_ * sigma_;
  return -0.5 * (x - theta).squaredNorm() / s2 -
         0.5 * d_ * std::log(2.0 * std::numbers::pi * s2);
}

Eigen::VectorXd GaussianMeanFamily::Score(const Observation& x,
                                          const Eigen::VectorXd& theta) const {
  return (x - theta) / (sigma_ * sigma_);
}

FisherMatrix<double> GaussianMeanFamily::Fisher(const Eigen::VectorXd&) const {
  return MakeFisherMatrix(Eigen::MatrixXd::Identity(d_, d_) /
                          (sigma_ * sigma_));
}

void BernoulliFamily::ValidateParameter(const Eigen::VectorXd& theta) const {
  RequireDim(theta, 1, "theta");
  if (!(theta[0] > 0.0 && theta[0] < 1.0)) {
    throw Error(ErrorCode::kInvalidParameter,
                "Bernoulli theta must lie in (0, 1)");
  }
}

Observation BernoulliFamily::Sample(const Eigen::VectorXd& theta,
                                    StreamRng& rng) const {
  return Observation::Constant(1, rng.Uniform() < theta[0] ? 1.0 : 0.0);
}

double BernoulliFamily::LogDensity(const Observation& x,
                                   const Eigen::VectorXd& theta) const {
  return x[0] > 0.5 ? std::log(theta[0]) : std::log1p(-theta[0]);
}

Eigen::VectorXd BernoulliFamily::Score(const Observation& x,
                                       const Eigen::VectorXd& theta) const {
  const double t = theta[0];
  return Eigen::VectorXd::Constant(1, x[0] > 0.5 ? 1.0 / t : -1.0 / (1.0 - t));
}

FisherMatrix<double> BernoulliFamily::Fisher(
    const Eigen::VectorXd& theta) const {
  ValidateParameter(theta);
  const double t = theta[0];
  return MakeFisherMatrix(
      Eigen::MatrixXd::Constant(1, 1, 1.0 / (t * (1.0 - t))));
}

std::optional<std::vector<Observation>> BernoulliFamily::DiscreteSupport()
    const {
  return std::vector<Observation>{Observation::Zero(1),
                                  Observation::Ones(1)};
}

LinRegDesign::LinRegDesign(Eigen::MatrixXd covariance)
    : covariance_(std::move(covariance)) {
  if (!IsSymmetricPsd(covariance_)) {
    throw Error(ErrorCode::kInvalidParameter,
                "design covariance must be symmetric positive semidefinite");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance_);
  const Eigen::VectorXd roots =
      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  root_ = eig.eigenvectors() * roots.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 0.0) {
    llt_ = std::move(llt);
  }
}

Eigen::VectorXd LinRegDesign::Sample(StreamRng& rng) const {
  return root_ * StandardNormalVector(dim(), rng);
}

std::optional<double> LinRegDesign::LogDensity(const Eigen::VectorXd& z) const {
  if (!llt_) return std::nullopt;
  const Eigen::MatrixXd& l = llt_->matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const Eigen::VectorXd w = llt_->matrixL().solve(z);
  return -0.5 * w.squaredNorm() - 0.5 * log_det -
         0.5 * dim() * std::log(2.0 * std::numbers::pi);
}

LinearRegressionFamily::LinearRegressionFamily(LinRegDesign design,
                                               double sigma)
    : design_(std::move(design)), sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kInvalidParameter, "sigma must be > 0");
  }
}

void LinearRegressionFamily::ValidateParameter(
    const Eigen::VectorXd& theta) const {
  RequireDim(theta, design_.dim(), "theta");
  if (!theta.allFinite()) {
    throw Error(ErrorCode::kInvalidParameter, "theta must be finite");
  }
}

Observation LinearRegressionFamily::Sample(const Eigen::VectorXd& theta,
                                           StreamRng& rng) const {
  const int d = design_.dim();
  Observation x(d + 1);
  x.head(d) = design_.Sample(rng);
  std::normal_distribution<double> normal;
  x[d] = x.head(d).dot(theta) + sigma_ * normal(rng);
  return x;
}

double LinearRegressionFamily::LogDensity(const Observation& x,
                                          const Eigen::VectorXd& theta) const {
  const int d = design_.dim();
  const double resid = x[d] - x.head(d).dot(theta);
  const double s2 = sigma_ * sigma_;
  double out = -0.5 * resid * resid / s2 -
               0.5 * std::log(2.0 * std::numbers::pi * s2);
  if (auto design_term = design_.LogDensity(x.head(d))) out += *design_term;
  return out;
}

Eigen::VectorXd LinearRegressionFamily::Score(
    const Observation& x, const Eigen::VectorXd& theta) const {
  const int d = design_.dim();
  const double resid = x[d] - x.head(d).dot(theta);
  return x.head(d) * (resid / (sigma_ * sigma_));
}

FisherMatrix<double> LinearRegressionFamily::Fisher(
    const Eigen::VectorXd&) const {
  return MakeFisherMatrix(design_.covariance() / (sigma_ * sigma_));
}

std::unique_ptr<ModelFamily> MakeGaussianMeanFamily(int d, double sigma) {
  return std::make_unique<GaussianMeanFamily>(d, sigma);
}

std::unique_ptr<ModelFamily> MakeBernoulliFamily() {
  return std::make_unique<BernoulliFamily>();
}

std::unique_ptr<ModelFamily> MakeLinearRegressionFamily(LinRegDesign design,
                                                        double sigma) {
  return std::make_unique<LinearRegressionFamily>(std::move(design), sigma);
}

FisherConsistencyReport CheckFisherConsistency(const ModelFamily& family,
                                               const Eigen::VectorXd& theta,
                                               int trials, uint64_t seed,
                                               bool allow_enumeration) {
  family.ValidateParameter(theta);
  const int p = family.ParamDim();
  FisherConsistencyReport report;
  report.analytic = family.Fisher(theta).matrix;
  report.estimate = Eigen::MatrixXd::Zero(p, p);
  report.std_errors = Eigen::MatrixXd::Zero(p, p);

  const auto support = family.DiscreteSupport();
  if (support && allow_enumeration) {
    report.method = FisherMethod::kExactEnumeration;
    for (const Observation& x : *support) {
      const Eigen::VectorXd s = family.Score(x, theta);
      report.estimate += std::exp(family.LogDensity(x, theta)) * s * s.transpose();
    }
    const double scale = std::max(1.0, report.analytic.cwiseAbs().maxCoeff());
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        if (std::abs(report.estimate(i, j) - report.analytic(i, j)) >
            1e-10 * scale) {
          report.flagged.emplace_back(i, j);
        }
      }
    }
    return report;
  }

  if (trials < 1000) {
    throw Error(ErrorCode::kInvalidParameter,
                "Monte Carlo Fisher check needs trials >= 1000");
  }
  report.method = FisherMethod::kMonteCarlo;
  report.trials = trials;
  StreamRng rng(DeriveSeed(seed, {kDataStream}));
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(p, p);
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd s = family.Score(family.Sample(theta, rng), theta);
    const Eigen::MatrixXd outer = s * s.transpose();
    sum += outer;
    sum_sq += outer.cwiseProduct(outer);
  }
  const double n = trials;
  report.estimate = sum / n;
  const Eigen::MatrixXd var =
      ((sum_sq / n) - report.estimate.cwiseProduct(report.estimate)) *
      (n / (n - 1.0));
  report.std_errors = (var.cwiseMax(0.0) / n).cwiseSqrt();
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      if (std::abs(report.estimate(i, j) - report.analytic(i, j)) >
          4.0 * report.std_errors(i, j)) {
        report.flagged.emplace_back(i, j);
      }
    }
  }
  return report;
}

}  // namespace fedvt
