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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace fedvt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogSumExp(std::span<const double> terms) {
  double peak = kNegInf;
  for (double t : terms) peak = std::max(peak, t);
  if (peak == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

// log of the integrand p^alpha q^(1 - alpha); kInfiniteDivergence flags
// p > 0 where q == 0.
double LogTiltedTerm(double p, double q, double alpha) {
  if (p <= 0.0) return kNegInf;
  if (q <= 0.0) return kInfiniteDivergence;
  return alpha * std::log(p) + (1.0 - alpha) * std::log(q);
}

double TrapezoidLogIntegral(const Eigen::VectorXd& x,
                            const std::vector<double>& log_integrand) {
  const Eigen::Index n = x.size();
  std::vector<double> terms;
  terms.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double width = 0.0;
    if (i > 0) width += x[i] - x[i - 1];
    if (i + 1 < n) width += x[i + 1] - x[i];
    width *= 0.5;
    if (width <= 0.0 || log_integrand[i] == kNegInf) continue;
    terms.push_back(std::log(width) + log_integrand[i]);
  }
  return LogSumExp(terms);
}

void CheckSameGrid(const GridDensity& p, const GridDensity& q) {
  if (p.points.size() != q.points.size() ||
      p.values.size() != p.points.size() ||
      q.values.size() != q.points.size() || p.discrete != q.discrete ||
      p.points != q.points) {
    throw Error(ErrorCode::kInvalidInput,
                "densities must be tabulated on a common grid");
  }
  if (!p.discrete && p.points.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                "continuous densities need at least two grid points");
  }
}

}  // namespace

GridDensity TabulateGaussian(double mean, double noise_std, double lo,
                             double hi, int num_points) {
  if (!(noise_std > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "noise_std must be > 0");
  }
  if (num_points < 2 || !(hi > lo)) {
    throw Error(ErrorCode::kInvalidInput, "grid needs hi > lo and >= 2 points");
  }
  GridDensity out;
  out.points = Eigen::VectorXd::LinSpaced(num_points, lo, hi);
  out.values.resize(num_points);
  const double norm = 1.0 / (noise_std * std::sqrt(2.0 * std::numbers::pi));
  for (int i = 0; i < num_points; ++i) {
    const double z = (out.points[i] - mean) / noise_std;
    out.values[i] = norm * std::exp(-0.5 * z * z);
  }
  return out;
}

double NumericRenyiDivergence(const GridDensity& p, const GridDensity& q,
                              RenyiOrder alpha) {
  CheckSameGrid(p, q);
  const double a = alpha.value();
  const Eigen::Index n = p.points.size();
  std::vector<double> log_terms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.values[i] < 0.0 || q.values[i] < 0.0) {
      throw Error(ErrorCode::kInvalidInput, "densities must be nonnegative");
    }
    log_terms[i] = LogTiltedTerm(p.values[i], q.values[i], a);
    if (IsInfiniteDivergence(log_terms[i])) return kInfiniteDivergence;
  }
  const double log_integral =
      p.discrete ? LogSumExp(log_terms) : TrapezoidLogIntegral(p.points, log_terms);
  return log_integral / (a - 1.0);
}

double RenyiDivergenceByQuadrature(const std::function<double(double)>& log_p,
                                   const std::function<double(double)>& log_q,
                                   double lo, double hi, RenyiOrder alpha,
                                   double rel_tol) {
  if (!(hi > lo)) throw Error(ErrorCode::kInvalidInput, "need hi > lo");
  const double a = alpha.value();
  auto estimate = [&](int points) {
    std::vector<double> terms;
    terms.reserve(points);
    const double h = (hi - lo) / (points - 1);
    for (int i = 0; i < points; ++i) {
      const double x = lo + h * i;
      const double lp = log_p(x);
      const double lq = log_q(x);
      if (lp == kNegInf) continue;
      if (lq == kNegInf) return kInfiniteDivergence;
      const double w = (i == 0 || i == points - 1) ? 0.5 * h : h;
      terms.push_back(std::log(w) + a * lp + (1.0 - a) * lq);
    }
    return LogSumExp(terms) / (a - 1.0);
  };
  int points = 4096;
  double previous = estimate(points);
  for (int iter = 0; iter < 8; ++iter) {
    points = 2 * points - 1;
    const double current = estimate(points);
    if (IsInfiniteDivergence(current)) return current;
    if (std::abs(current - previous) <=
        rel_tol * std::max(1.0, std::abs(current))) {
      return current;
    }
    previous = current;
  }
  return previous;
}

ZcdpBudget GaussianMechanismRho(double sensitivity, double noise_std) {
  if (!(noise_std > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "noise_std must be > 0");
  }
  if (!(sensitivity >= 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "sensitivity must be >= 0");
  }
  return ZcdpBudget(sensitivity * sensitivity /
                    (2.0 * noise_std * noise_std));
}

double GaussianNoiseForRho(double sensitivity, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw Error(ErrorCode::kInvalidParameter,
                "Gaussian calibration needs finite rho > 0");
  }
  if (!(sensitivity > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "sensitivity must be > 0");
  }
  return sensitivity / std::sqrt(2.0 * rho);
}

ZcdpBudget ComposeRounds(std::span<const double> per_round) {
  double total = 0.0;
  for (double rho : per_round) total += ZcdpBudget(rho).rho();
  return ZcdpBudget(total);
}

ZcdpBudget ComposeRounds(std::span<const ZcdpBudget> per_round) {
  double total = 0.0;
  for (ZcdpBudget rho : per_round) total += rho.rho();
  return ZcdpBudget(total);
}

ZcdpBudget PureDpToZcdp(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidParameter, "epsilon must be finite and >= 0");
  }
  return ZcdpBudget(0.5 * epsilon * epsilon);
}

double LawDivergence(const OutputLaw& p, const OutputLaw& q, RenyiOrder alpha) {
  if (p.index() != q.index()) {
    throw Error(ErrorCode::kInvalidInput, "output laws of different kinds");
  }
  if (const auto* gp = std::get_if<GaussianLaw>(&p)) {
    const auto& gq = std::get<GaussianLaw>(q);
    if (gp->mean.size() != gq.mean.size() || gp->noise_std != gq.noise_std) {
      throw Error(ErrorCode::kInvalidInput,
                  "Gaussian laws must share dimension and noise scale");
    }
    return RenyiDivergenceGaussian((gp->mean - gq.mean).norm(), gp->noise_std,
                                   alpha);
  }
  if (const auto* dp = std::get_if<DiscreteLaw>(&p)) {
    const auto& dq = std::get<DiscreteLaw>(q);
    if (dp->mass.size() != dq.mass.size()) {
      throw Error(ErrorCode::kInvalidInput, "discrete laws of different size");
    }
    GridDensity gp{Eigen::VectorXd::LinSpaced(dp->mass.size(), 0,
                                              dp->mass.size() - 1),
                   dp->mass, true};
    GridDensity gq{gp.points, dq.mass, true};
    return NumericRenyiDivergence(gp, gq, alpha);
  }
  return NumericRenyiDivergence(std::get<GridDensity>(p),
                                std::get<GridDensity>(q), alpha);
}

bool IsAdjacent(const AdjacentPair& pair) {
  if (pair.first.rows() != pair.second.rows() ||
      pair.first.cols() != pair.second.cols()) {
    return false;
  }
  int differing = 0;
  for (Eigen::Index i = 0; i < pair.first.rows(); ++i) {
    if (pair.first.row(i) != pair.second.row(i)) ++differing;
  }
  return differing <= 1;
}

std::vector<AdjacentPair> EnumerateAdjacentPairs(
    std::span<const Eigen::VectorXd> support, int n) {
  if (support.empty() || n < 1) {
    throw Error(ErrorCode::kInvalidInput, "need nonempty support and n >= 1");
  }
  const Eigen::Index dim = support.front().size();
  const std::size_t k = support.size();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= k;
  std::vector<AdjacentPair> pairs;
  std::vector<std::size_t> digits(n, 0);
  for (std::size_t config = 0; config < total; ++config) {
    std::size_t c = config;
    for (int i = 0; i < n; ++i) {
      digits[i] = c % k;
      c /= k;
    }
    Dataset base(n, dim);
    for (int i = 0; i < n; ++i) base.row(i) = support[digits[i]].transpose();
    for (int i = 0; i < n; ++i) {
      for (std::size_t v = 0; v < k; ++v) {
        if (v == digits[i]) continue;
        Dataset neighbor = base;
        neighbor.row(i) = support[v].transpose();
        pairs.push_back({base, std::move(neighbor)});
      }
    }
  }
  return pairs;
}

std::vector<double> DefaultAuditGrid() {
  return {1.1, 1.5, 2.0, 4.0, 8.0, 16.0, 32.0};
}

MechanismAudit AuditMechanism(const AuditableMechanism& mechanism,
                              const AdjacentPair& pair, ZcdpBudget claimed_rho,
                              std::span<const double> alpha_grid) {
  return AuditMechanism(mechanism, std::span<const AdjacentPair>(&pair, 1),
                        claimed_rho, alpha_grid);
}

MechanismAudit AuditMechanism(const AuditableMechanism& mechanism,
                              std::span<const AdjacentPair> pairs,
                              ZcdpBudget claimed_rho,
                              std::span<const double> alpha_grid) {
  std::vector<RenyiOrder> orders;
  for (double a : alpha_grid) orders.emplace_back(a);

  MechanismAudit audit;
  audit.alpha_grid.assign(alpha_grid.begin(), alpha_grid.end());
  audit.divergences.assign(orders.size(), 0.0);
  audit.claimed_rho = claimed_rho;
  audit.tolerance = kClosedFormAuditTolerance;

  for (const AdjacentPair& pair : pairs) {
    if (!IsAdjacent(pair)) {
      throw Error(ErrorCode::kInvalidInput, "datasets are not adjacent");
    }
    const auto law_a = mechanism.Law(pair.first);
    const auto law_b = mechanism.Law(pair.second);
    if (!law_a || !law_b) {
      throw Error(ErrorCode::kAuditUnsupported,
                  mechanism.Name() + " does not expose its output density");
    }
    if (std::holds_alternative<GridDensity>(*law_a)) {
      audit.tolerance = kQuadratureAuditTolerance;
    }
    for (std::size_t i = 0; i < orders.size(); ++i) {
      const double forward = LawDivergence(*law_a, *law_b, orders[i]);
      const double backward = LawDivergence(*law_b, *law_a, orders[i]);
      audit.divergences[i] =
          std::max({audit.divergences[i], forward, backward});
    }
  }
  audit.passed = true;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (!(audit.divergences[i] <=
          orders[i].value() * claimed_rho.rho() + audit.tolerance)) {
      audit.passed = false;
    }
  }
  return audit;
}

GaussianOutputMechanism::GaussianOutputMechanism(Statistic statistic,
                                                 double noise_std,
                                                 std::string name)
    : statistic_(std::move(statistic)),
      noise_std_(noise_std),
      name_(std::move(name)) {
  if (!(noise_std > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "noise_std must be > 0");
  }
}

std::optional<OutputLaw> GaussianOutputMechanism::Law(
    const Dataset& dataset) const {
  return GaussianLaw{statistic_(dataset), noise_std_};
}

RandomizedResponse::RandomizedResponse(double flip_prob)
    : flip_prob_(flip_prob) {
  if (!(flip_prob > 0.0 && flip_prob < 0.5)) {
    throw Error(ErrorCode::kInvalidParameter,
                "flip probability must lie in (0, 0.5)");
  }
}

std::optional<OutputLaw> RandomizedResponse::Law(const Dataset& dataset) const {
  if (dataset.rows() < 1) return std::nullopt;
  const bool bit = dataset(0, 0) > 0.5;
  Eigen::VectorXd mass(2);
  mass[1] = bit ? 1.0 - flip_prob_ : flip_prob_;
  mass[0] = 1.0 - mass[1];
  return DiscreteLaw{mass};
}

double RandomizedResponse::epsilon() const {
  return std::log((1.0 - flip_prob_) / flip_prob_);
}

std::optional<OutputLaw> ConstantMechanism::Law(const Dataset&) const {
  return DiscreteLaw{Eigen::VectorXd::Ones(1)};
}

}  // namespace fedvt
