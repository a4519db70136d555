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

#include <algorithm>
#include <limits>
#include <map>
#include <utility>

namespace fedvt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void RequirePositive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidParameter,
                std::string(name) + " must be positive and finite");
  }
}

BoundReport ParametricReport(std::string kind, int p,
                             const InfoProfile<double>& profile,
                             std::span<const ClientSpec> clients,
                             double radius, BoundVariant variant) {
  const ClientwiseInfo<double> info =
      ClientwiseInfoTerm(profile, clients, variant);
  BoundReport report;
  report.kind = std::move(kind);
  report.variant = variant;
  report.certified = variant == BoundVariant::kExact;
  report.p = p;
  report.info_total = info.total;
  report.prior_trace = Cos2PriorTrace(p, radius);
  report.contributions = info.contributions;
  report.branches = info.branches;
  report.value = VanTreesBound(p, info.total, report.prior_trace);
  return report;
}

}  // namespace

std::string_view BoundVariantName(BoundVariant variant) {
  return variant == BoundVariant::kExact ? "exact" : "rho-linear";
}

BoundVariant ParseBoundVariant(std::string_view name) {
  if (name == "exact") return BoundVariant::kExact;
  if (name == "rho-linear" || name == "rho_linear") return BoundVariant::kRhoLinear;
  throw Error(ErrorCode::kInvalidParameter,
              "unknown bound variant '" + std::string(name) + "'");
}

std::string_view BranchName(Branch branch) {
  return branch == Branch::kPrivacyLimited ? "privacy_limited" : "sample_limited";
}

BoundReport MeanEstimationBound(int d, double sigma,
                                std::span<const ClientSpec> clients,
                                double radius, BoundVariant variant) {
  if (d < 1) throw Error(ErrorCode::kInvalidParameter, "d must be >= 1");
  RequirePositive(sigma, "sigma");
  RequirePositive(radius, "r");
  const double inv_var = 1.0 / (sigma * sigma);
  BoundReport report = ParametricReport(
      "mean", d, MakeInfoProfile(inv_var, d * inv_var, d), clients, radius,
      variant);
  double harmonic = 0.0;
  for (const ClientSpec& c : clients) {
    const double n = c.n;
    const double g = PrivacyGain(c.rho_budget.rho(), variant);
    if (g > 0.0) harmonic += 1.0 / (d / n + d * d / (g * n * n));
  }
  report.harmonic_display = harmonic > 0.0 ? sigma * sigma / harmonic : kInf;
  return report;
}

BoundReport LinregBound(const LinRegDesign& design, double sigma,
                        std::span<const ClientSpec> clients, double radius,
                        BoundVariant variant) {
  RequirePositive(sigma, "sigma");
  RequirePositive(radius, "r");
  const Eigen::MatrixXd info = design.covariance() / (sigma * sigma);
  const FisherMatrix<double> fisher = MakeFisherMatrix(info);
  if (!(fisher.trace > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "design needs positive trace");
  }
  return ParametricReport("linreg", design.dim(), InfoProfileOf(fisher),
                          clients, radius, variant);
}

BoundReport SampleLimitedBound(std::string kind, int p,
                               const InfoProfile<double>& profile,
                               std::span<const ClientSpec> clients,
                               double radius) {
  if (clients.empty()) throw Error(ErrorCode::kInvalidInput, "need clients");
  RequirePositive(radius, "r");
  BoundReport report;
  report.kind = std::move(kind);
  report.variant = BoundVariant::kExact;
  report.certified = true;
  report.p = p;
  for (const ClientSpec& c : clients) {
    if (c.n < 1) throw Error(ErrorCode::kInvalidParameter, "n must be >= 1");
    report.contributions.push_back(c.n * profile.trace);
    report.branches.push_back(Branch::kSampleLimited);
    report.info_total += report.contributions.back();
  }
  report.prior_trace = Cos2PriorTrace(p, radius);
  report.value = VanTreesBound(p, report.info_total, report.prior_trace);
  return report;
}

BoundReport NonparamBound(double alpha_smooth, int d_domain, double radius,
                          double sigma, std::span<const ClientSpec> clients,
                          BoundVariant variant, std::int64_t p_max) {
  RequirePositive(alpha_smooth, "alpha");
  RequirePositive(radius, "R");
  RequirePositive(sigma, "sigma");
  if (d_domain < 1) throw Error(ErrorCode::kInvalidParameter, "d must be >= 1");
  if (p_max < 1) throw Error(ErrorCode::kInvalidParameter, "p_max must be >= 1");
  if (clients.empty()) throw Error(ErrorCode::kInvalidInput, "need clients");

  // Identical clients contribute identical terms; group them.
  std::map<std::pair<int, double>, int> groups;
  for (const ClientSpec& c : clients) {
    if (c.n < 1) throw Error(ErrorCode::kInvalidParameter, "n must be >= 1");
    ++groups[{c.n, PrivacyGain(c.rho_budget.rho(), variant)}];
  }
  const double exponent = 2.0 * alpha_smooth / d_domain;
  const double inv_r2 = 1.0 / (radius * radius);
  const double inv_var = 1.0 / (sigma * sigma);

  auto value_at = [&](double p) {
    double info = 0.0;
    for (const auto& [key, count] : groups) {
      const double n = key.first;
      const double g = key.second;
      const double cost = g > 0.0 ? std::max(p / n, p * p / (g * n * n)) : kInf;
      info += count / cost;
    }
    return 1.0 / (std::pow(p, exponent) * inv_r2 + inv_var * info);
  };

  BoundReport report;
  report.kind = "nonparam";
  report.variant = variant;
  report.certified = false;
  report.value = -kInf;
  for (std::int64_t p = 1; p <= p_max; ++p) {
    const double v = value_at(static_cast<double>(p));
    if (v > report.value) {
      report.value = v;
      report.p_star = p;
    }
  }
  report.p = static_cast<int>(*report.p_star);
  report.prior_trace = std::pow(static_cast<double>(*report.p_star), exponent) * inv_r2;
  report.info_total = 1.0 / report.value - report.prior_trace;
  report.boundary_warning = *report.p_star == p_max;
  return report;
}

double HomogeneousReduction(int d, double sigma, int m, int n, double rho,
                            BoundVariant variant) {
  if (d < 1 || m < 1 || n < 1) {
    throw Error(ErrorCode::kInvalidParameter, "d, m, n must be >= 1");
  }
  RequirePositive(sigma, "sigma");
  if (!(rho >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "rho must be >= 0");
  const double g = PrivacyGain(rho, variant);
  const double mn = static_cast<double>(m) * n;
  const double privacy =
      g > 0.0 ? static_cast<double>(d) * d / (g * mn * n) : kInf;
  return sigma * sigma * std::max(d / mn, privacy);
}

}  // namespace fedvt
