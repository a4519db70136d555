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

#ifndef FEDVT_BOUNDS_H_
#define FEDVT_BOUNDS_H_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fedvt/error.h"
#include "fedvt/models.h"
#include "fedvt/protocol.h"

namespace fedvt {

// kExact uses g(rho) = e^{2 rho} - 1 and is a certified lower bound with
// c = 1. kRhoLinear uses g(rho) = rho and is for rate comparisons only.
enum class BoundVariant { kExact, kRhoLinear };

std::string_view BoundVariantName(BoundVariant variant);
// Accepts "exact", "rho-linear" and "rho_linear".
BoundVariant ParseBoundVariant(std::string_view name);

enum class Branch { kPrivacyLimited, kSampleLimited };

std::string_view BranchName(Branch branch);

template <typename Scalar>
Scalar PrivacyGain(Scalar rho, BoundVariant variant) {
  return variant == BoundVariant::kExact ? std::expm1(Scalar(2) * rho) : rho;
}

template <typename Scalar>
struct InfoProfile {
  Scalar op_norm = Scalar(0);  // ||I_x(theta)||_op
  Scalar trace = Scalar(0);    // Tr I_x(theta)
};

// Throws kInvalidParameter unless 0 <= trace <= p * op_norm.
template <typename Scalar>
InfoProfile<Scalar> MakeInfoProfile(Scalar op_norm, Scalar trace, int p) {
  const Scalar slack = Scalar(1e-12) * std::abs(p * op_norm);
  if (!(op_norm >= 0) || !(trace >= 0) || !(trace <= p * op_norm + slack) ||
      !std::isfinite(op_norm) || !std::isfinite(trace)) {
    throw Error(ErrorCode::kInvalidParameter,
                "information profile needs 0 <= trace <= p * op_norm");
  }
  return {op_norm, trace};
}

template <typename Scalar>
InfoProfile<Scalar> InfoProfileOf(const FisherMatrix<Scalar>& fisher) {
  return MakeInfoProfile(fisher.op_norm, fisher.trace,
                         static_cast<int>(fisher.matrix.rows()));
}

template <typename Scalar>
struct ClientwiseInfo {
  Scalar total = Scalar(0);
  std::vector<Scalar> contributions;
  std::vector<Branch> branches;
};

// Per client min(g(rho_l) n_l^2 op_norm, n_l trace); ties go to the privacy
// branch.
template <typename Scalar>
ClientwiseInfo<Scalar> ClientwiseInfoTerm(const InfoProfile<Scalar>& profile,
                                          std::span<const ClientSpec> clients,
                                          BoundVariant variant) {
  if (clients.empty()) {
    throw Error(ErrorCode::kInvalidInput, "clientwise information needs clients");
  }
  ClientwiseInfo<Scalar> out;
  for (const ClientSpec& c : clients) {
    if (c.n < 1) throw Error(ErrorCode::kInvalidParameter, "n must be >= 1");
    const Scalar n = static_cast<Scalar>(c.n);
    const Scalar privacy =
        PrivacyGain<Scalar>(c.rho_budget.rho(), variant) * n * n * profile.op_norm;
    const Scalar sample = n * profile.trace;
    const bool privacy_binds = privacy <= sample;
    out.contributions.push_back(privacy_binds ? privacy : sample);
    out.branches.push_back(privacy_binds ? Branch::kPrivacyLimited
                                         : Branch::kSampleLimited);
    out.total += out.contributions.back();
  }
  return out;
}

template <typename Scalar>
Scalar VanTreesBound(int p, Scalar prior_avg_info, Scalar trace_jpi) {
  if (p < 1) throw Error(ErrorCode::kInvalidParameter, "p must be >= 1");
  if (!(prior_avg_info >= 0) || !(trace_jpi >= 0)) {
    throw Error(ErrorCode::kInvalidParameter,
                "information terms must be nonnegative");
  }
  const Scalar denominator = prior_avg_info + trace_jpi;
  if (!(denominator > 0)) {
    throw Error(ErrorCode::kInvalidInput, "van Trees denominator is zero");
  }
  return static_cast<Scalar>(p) * static_cast<Scalar>(p) / denominator;
}

// Tr J_pi of the isotropic cos^2 prior of radius r in p dimensions.
template <typename Scalar>
Scalar Cos2PriorTrace(int p, Scalar radius) {
  return static_cast<Scalar>(p) * std::numbers::pi_v<Scalar> *
         std::numbers::pi_v<Scalar> / (radius * radius);
}

struct BoundReport {
  std::string kind;  // mean, linreg, nonparam
  double value = 0.0;
  BoundVariant variant = BoundVariant::kExact;
  bool certified = false;
  int p = 0;
  double info_total = 0.0;
  double prior_trace = 0.0;
  std::vector<double> contributions;
  std::vector<Branch> branches;
  // Mean estimation: sigma^2 [sum_l (d/n_l + d^2/(g(rho_l) n_l^2))^{-1}]^{-1}.
  std::optional<double> harmonic_display;
  // Nonparametric only.
  std::optional<std::int64_t> p_star;
  bool boundary_warning = false;
};

BoundReport MeanEstimationBound(int d, double sigma,
                                std::span<const ClientSpec> clients,
                                double radius, BoundVariant variant);

BoundReport LinregBound(const LinRegDesign& design, double sigma,
                        std::span<const ClientSpec> clients, double radius,
                        BoundVariant variant);

// van Trees with every client on the sample branch, n_l Tr I_x. This is the
// classical bound for estimators that are not private.
BoundReport SampleLimitedBound(std::string kind, int p,
                               const InfoProfile<double>& profile,
                               std::span<const ClientSpec> clients,
                               double radius);

inline constexpr std::int64_t kDefaultNonparamPMax = 1'000'000;

// sup over integer 1 <= p <= p_max of
//   [p^{2 alpha/d}/R^2 + sigma^{-2} sum_l (p/n_l v p^2/(g(rho_l) n_l^2))^{-1}]^{-1}.
BoundReport NonparamBound(double alpha_smooth, int d_domain, double radius,
                          double sigma, std::span<const ClientSpec> clients,
                          BoundVariant variant,
                          std::int64_t p_max = kDefaultNonparamPMax);

// sigma^2 max(d/(mn), d^2/(g(rho) m n^2)).
double HomogeneousReduction(int d, double sigma, int m, int n, double rho,
                            BoundVariant variant);

}  // namespace fedvt

#endif  // FEDVT_BOUNDS_H_
