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

// Priors on the parameter space: the compactly supported cos^2 prior and
// products of it.

#ifndef FEDVT_PRIORS_H_
#define FEDVT_PRIORS_H_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedvt/rng.h"

namespace fedvt {

// p_0(t) = r^{-1} cos^2(pi t / (2 r)) on [-r, r], zero outside.
double Cos2Density(double t, double r);

// (t + r) / (2 r) + sin(pi t / r) / (2 pi), clamped to [0, 1].
double Cos2Cdf(double t, double r);

// Inverse CDF by bisection to absolute tolerance 1e-12.
double Cos2Quantile(double u, double r);

double Cos2Sample(double r, StreamRng& rng);

class Prior {
 public:
  virtual ~Prior() = default;
  virtual std::string Name() const = 0;
  virtual int Dim() const = 0;
  virtual Eigen::VectorXd Sample(StreamRng& rng) const = 0;
  virtual double LogDensity(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd LogDensityGradient(
      const Eigen::VectorXd& theta) const = 0;
  // Tr J_pi when known in closed form.
  virtual std::optional<double> InformationTrace() const {
    return std::nullopt;
  }
};

// One-dimensional cos^2 prior of radius r shifted to `center`.
class CosSquaredPrior final : public Prior {
 public:
  explicit CosSquaredPrior(double radius, double center = 0.0);

  std::string Name() const override { return "cos2"; }
  int Dim() const override { return 1; }
  Eigen::VectorXd Sample(StreamRng& rng) const override;
  double LogDensity(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd LogDensityGradient(
      const Eigen::VectorXd& theta) const override;
  // pi^2 / r^2.
  std::optional<double> InformationTrace() const override;

  double radius() const { return radius_; }
  double center() const { return center_; }

 private:
  double radius_;
  double center_;
};

// Independent cos^2 coordinates.
class ProductPrior final : public Prior {
 public:
  explicit ProductPrior(std::vector<CosSquaredPrior> components);

  // p identical components of radius r centered at `center`.
  static ProductPrior Isotropic(int p, double radius, double center = 0.0);

  std::string Name() const override { return "product_cos2"; }
  int Dim() const override { return static_cast<int>(components_.size()); }
  Eigen::VectorXd Sample(StreamRng& rng) const override;
  double LogDensity(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd LogDensityGradient(
      const Eigen::VectorXd& theta) const override;
  // Sum of the component informations.
  std::optional<double> InformationTrace() const override;

  const std::vector<CosSquaredPrior>& components() const {
    return components_;
  }

 private:
  std::vector<CosSquaredPrior> components_;
};

// Tr J_pi. Throws kUnsupportedPrior for priors without a closed form.
double PriorInformation(const Prior& prior);

}  // namespace fedvt

#endif  // FEDVT_PRIORS_H_
