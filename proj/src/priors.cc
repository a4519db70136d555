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

#include "fedvt/priors.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "fedvt/error.h"

namespace fedvt {
namespace {

constexpr double kPi = std::numbers::pi;

void RequireRadius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::kInvalidParameter, "prior radius must be > 0");
  }
}

}  // namespace

double Cos2Density(double t, double r) {
  RequireRadius(r);
  if (std::abs(t) > r) return 0.0;
  const double c = std::cos(kPi * t / (2.0 * r));
  return c * c / r;
}

double Cos2Cdf(double t, double r) {
  RequireRadius(r);
  if (t <= -r) return 0.0;
  if (t >= r) return 1.0;
  const double value = (t + r) / (2.0 * r) + std::sin(kPi * t / r) / (2.0 * kPi);
  return std::clamp(value, 0.0, 1.0);
}

double Cos2Quantile(double u, double r) {
  RequireRadius(r);
  if (!(u >= 0.0 && u <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "quantile level must be in [0, 1]");
  }
  double lo = -r;
  double hi = r;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (Cos2Cdf(mid, r) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double Cos2Sample(double r, StreamRng& rng) {
  return Cos2Quantile(rng.Uniform(), r);
}

CosSquaredPrior::CosSquaredPrior(double radius, double center)
    : radius_(radius), center_(center) {
  RequireRadius(radius);
  if (!std::isfinite(center)) {
    throw Error(ErrorCode::kInvalidParameter, "prior center must be finite");
  }
}

Eigen::VectorXd CosSquaredPrior::Sample(StreamRng& rng) const {
  return Eigen::VectorXd::Constant(1, center_ + Cos2Sample(radius_, rng));
}

double CosSquaredPrior::LogDensity(const Eigen::VectorXd& theta) const {
  const double density = Cos2Density(theta[0] - center_, radius_);
  return density > 0.0 ? std::log(density)
                       : -std::numeric_limits<double>::infinity();
}

Eigen::VectorXd CosSquaredPrior::LogDensityGradient(
    const Eigen::VectorXd& theta) const {
  // d/dt log cos^2(pi t / 2r) = -(pi / r) tan(pi t / 2r).
  const double t = theta[0] - center_;
  return Eigen::VectorXd::Constant(
      1, -(kPi / radius_) * std::tan(kPi * t / (2.0 * radius_)));
}

std::optional<double> CosSquaredPrior::InformationTrace() const {
  return kPi * kPi / (radius_ * radius_);
}

ProductPrior::ProductPrior(std::vector<CosSquaredPrior> components)
    : components_(std::move(components)) {
  if (components_.empty()) {
    throw Error(ErrorCode::kInvalidParameter,
                "product prior needs at least one component");
  }
}

ProductPrior ProductPrior::Isotropic(int p, double radius, double center) {
  if (p < 1) throw Error(ErrorCode::kInvalidParameter, "dimension must be >= 1");
  return ProductPrior(
      std::vector<CosSquaredPrior>(p, CosSquaredPrior(radius, center)));
}

Eigen::VectorXd ProductPrior::Sample(StreamRng& rng) const {
  Eigen::VectorXd theta(Dim());
  for (int i = 0; i < Dim(); ++i) theta[i] = components_[i].Sample(rng)[0];
  return theta;
}

double ProductPrior::LogDensity(const Eigen::VectorXd& theta) const {
  double out = 0.0;
  for (int i = 0; i < Dim(); ++i) {
    out += components_[i].LogDensity(theta.segment(i, 1));
  }
  return out;
}

Eigen::VectorXd ProductPrior::LogDensityGradient(
    const Eigen::VectorXd& theta) const {
  Eigen::VectorXd grad(Dim());
  for (int i = 0; i < Dim(); ++i) {
    grad[i] = components_[i].LogDensityGradient(theta.segment(i, 1))[0];
  }
  return grad;
}

std::optional<double> ProductPrior::InformationTrace() const {
  double total = 0.0;
  for (const auto& c : components_) total += *c.InformationTrace();
  return total;
}

double PriorInformation(const Prior& prior) {
  if (auto info = prior.InformationTrace()) return *info;
  throw Error(ErrorCode::kUnsupportedPrior,
              prior.Name() + " has no closed-form prior information");
}

}  // namespace fedvt
