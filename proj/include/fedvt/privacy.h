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

// Rényi divergences, zCDP calibration and accounting, and numerical zCDP
// audits of mechanisms whose output law is available.

#ifndef FEDVT_PRIVACY_H_
#define FEDVT_PRIVACY_H_

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fedvt/error.h"

namespace fedvt {

// Order of a Rényi divergence; always > 1.
class RenyiOrder {
 public:
  explicit RenyiOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) {
      throw Error(ErrorCode::kInvalidOrder,
                  "Renyi order must be a finite value > 1, got " +
                      std::to_string(alpha));
    }
  }
  double value() const { return alpha_; }

 private:
  double alpha_;
};

// A zCDP budget rho; nonnegative and finite.
class ZcdpBudget {
 public:
  ZcdpBudget() = default;
  explicit ZcdpBudget(double rho) : rho_(rho) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) {
      throw Error(ErrorCode::kInvalidParameter,
                  "zCDP budget must be finite and >= 0, got " +
                      std::to_string(rho));
    }
  }
  double rho() const { return rho_; }

  friend ZcdpBudget operator+(ZcdpBudget a, ZcdpBudget b) {
    return ZcdpBudget(a.rho_ + b.rho_);
  }
  friend bool operator==(ZcdpBudget a, ZcdpBudget b) = default;

 private:
  double rho_ = 0.0;
};

// Per-client budgets, indexed by client position (client id l maps to l-1).
using BudgetVector = std::vector<ZcdpBudget>;

// D_alpha between N(mu, s^2 I) and N(mu + gap, s^2 I): alpha * gap^2 / (2 s^2).
template <typename Scalar>
Scalar RenyiDivergenceGaussian(Scalar mean_gap, Scalar noise_std,
                               RenyiOrder alpha) {
  if (!(noise_std > Scalar(0))) {
    throw Error(ErrorCode::kInvalidParameter, "noise_std must be > 0");
  }
  return Scalar(alpha.value()) * mean_gap * mean_gap /
         (Scalar(2) * noise_std * noise_std);
}

// A density (or, with `discrete`, a probability mass function) tabulated on a
// grid of points. Continuous densities are integrated by the trapezoid rule.
struct GridDensity {
  Eigen::VectorXd points;
  Eigen::VectorXd values;
  bool discrete = false;
};

GridDensity TabulateGaussian(double mean, double noise_std, double lo,
                             double hi, int num_points);

inline constexpr double kInfiniteDivergence =
    std::numeric_limits<double>::infinity();

inline bool IsInfiniteDivergence(double divergence) {
  return std::isinf(divergence) && divergence > 0;
}

// D_alpha(P || Q) by summation (discrete) or trapezoid quadrature
// (continuous), evaluated in log space. Returns kInfiniteDivergence when P
// puts mass where Q does not.
double NumericRenyiDivergence(const GridDensity& p, const GridDensity& q,
                              RenyiOrder alpha);

// Adaptive trapezoid on [lo, hi] for one-dimensional log densities: the grid
// starts at 4096 points and is doubled until two successive estimates of the
// divergence agree within `rel_tol`.
double RenyiDivergenceByQuadrature(
    const std::function<double(double)>& log_p,
    const std::function<double(double)>& log_q, double lo, double hi,
    RenyiOrder alpha, double rel_tol = 1e-10);

ZcdpBudget GaussianMechanismRho(double sensitivity, double noise_std);

// Noise standard deviation giving exactly `rho`-zCDP for the given L2
// sensitivity. rho must be > 0.
double GaussianNoiseForRho(double sensitivity, double rho);

ZcdpBudget ComposeRounds(std::span<const double> per_round);
ZcdpBudget ComposeRounds(std::span<const ZcdpBudget> per_round);

// Pure epsilon-DP implies (epsilon^2 / 2)-zCDP.
ZcdpBudget PureDpToZcdp(double epsilon);

// Output law of a mechanism on a fixed dataset.
struct DiscreteLaw {
  Eigen::VectorXd mass;
};
struct GaussianLaw {
  Eigen::VectorXd mean;
  double noise_std = 1.0;
};
using OutputLaw = std::variant<DiscreteLaw, GaussianLaw, GridDensity>;

// Divergence between two output laws of the same kind. Gaussian pairs use
// the closed form (and must share noise_std); the others go through
// NumericRenyiDivergence. Throws kInvalidInput on kind mismatch.
double LawDivergence(const OutputLaw& p, const OutputLaw& q, RenyiOrder alpha);

// Datasets are n x dim matrices, one sample per row.
using Dataset = Eigen::MatrixXd;

class AuditableMechanism {
 public:
  virtual ~AuditableMechanism() = default;
  virtual std::string Name() const = 0;
  // std::nullopt when the output law on `dataset` is not available.
  virtual std::optional<OutputLaw> Law(const Dataset& dataset) const = 0;
};

// Two datasets of equal shape differing in exactly one row.
struct AdjacentPair {
  Dataset first;
  Dataset second;
};

bool IsAdjacent(const AdjacentPair& pair);

// Every ordered pair of n-sample datasets over `support` (one value per row)
// that differ in exactly one sample.
std::vector<AdjacentPair> EnumerateAdjacentPairs(
    std::span<const Eigen::VectorXd> support, int n);

std::vector<double> DefaultAuditGrid();

inline constexpr double kClosedFormAuditTolerance = 1e-6;
inline constexpr double kQuadratureAuditTolerance = 1e-4;

struct MechanismAudit {
  std::vector<double> alpha_grid;
  // max(D_alpha(M(X) || M(X')), D_alpha(M(X') || M(X))) per grid order.
  std::vector<double> divergences;
  ZcdpBudget claimed_rho;
  double tolerance = 0.0;
  bool passed = false;
};

// Checks D_alpha <= alpha * rho + tolerance in both directions at every grid
// order. Throws kAuditUnsupported when the mechanism has no law for either
// dataset, kInvalidInput when the pair is not adjacent.
MechanismAudit AuditMechanism(const AuditableMechanism& mechanism,
                              const AdjacentPair& pair, ZcdpBudget claimed_rho,
                              std::span<const double> alpha_grid);

// Audits over a set of pairs; passes iff every pair passes. Divergences are
// the per-order maxima across pairs.
MechanismAudit AuditMechanism(const AuditableMechanism& mechanism,
                              std::span<const AdjacentPair> pairs,
                              ZcdpBudget claimed_rho,
                              std::span<const double> alpha_grid);

// Concrete mechanisms used by the audit suite and the CLI.

// Releases statistic(dataset) + N(0, noise_std^2 I).
class GaussianOutputMechanism : public AuditableMechanism {
 public:
  using Statistic = std::function<Eigen::VectorXd(const Dataset&)>;
  GaussianOutputMechanism(Statistic statistic, double noise_std,
                          std::string name = "gaussian");
  std::string Name() const override { return name_; }
  std::optional<OutputLaw> Law(const Dataset& dataset) const override;

 private:
  Statistic statistic_;
  double noise_std_;
  std::string name_;
};

// Single-bit randomized response: reports the bit of the first sample,
// flipped with probability `flip_prob`. Pure epsilon-DP with
// epsilon = log((1 - flip_prob) / flip_prob).
class RandomizedResponse : public AuditableMechanism {
 public:
  explicit RandomizedResponse(double flip_prob);
  std::string Name() const override { return "randomized_response"; }
  std::optional<OutputLaw> Law(const Dataset& dataset) const override;
  double epsilon() const;

 private:
  double flip_prob_;
};

// Data-independent output.
class ConstantMechanism : public AuditableMechanism {
 public:
  std::string Name() const override { return "constant"; }
  std::optional<OutputLaw> Law(const Dataset& dataset) const override;
};

}  // namespace fedvt

#endif  // FEDVT_PRIVACY_H_
