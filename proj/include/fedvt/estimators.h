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

#ifndef FEDVT_ESTIMATORS_H_
#define FEDVT_ESTIMATORS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fedvt/mechanisms.h"
#include "fedvt/models.h"
#include "fedvt/priors.h"
#include "fedvt/protocol.h"
#include "fedvt/stats.h"

namespace fedvt {

enum class EstimatorKind {
  kNonprivateMean,
  kFedGaussianMean,
  kFedGaussianMeanAdaptive,
  kFedLinreg,
};

std::string_view EstimatorKindName(EstimatorKind kind);
EstimatorKind ParseEstimatorKind(std::string_view name);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::kFedGaussianMean;
  // Mean estimators: tau. fed_linreg: the design radius tau_z. Zero selects
  // the default.
  double clip_radius = 0.0;
  // fed_linreg only: the response radius tau_y. Zero selects the default.
  double response_clip = 0.0;
  // Round fractions of rho_l for the two-round estimators.
  std::array<double, 2> split = {0.5, 0.5};
};

// What the estimator may assume about the problem.
struct EstimatorContext {
  int dim = 1;
  double sigma = 1.0;
  double prior_radius = 1.0;
  // Required by fed_linreg.
  std::optional<Eigen::MatrixXd> design_covariance;
};

inline constexpr double kLinregEigenFloor = 1e-6;

// tau = r + 6 sigma for the mean estimators.
double DefaultMeanClip(const EstimatorContext& context);
// tau_z = sqrt(Tr Sigma) + 4 sqrt(||Sigma||), tau_y = r sqrt(d) tau_z + 6 sigma.
std::array<double, 2> DefaultLinregClips(const EstimatorContext& context);

struct EstimatorRun {
  Eigen::VectorXd estimate;
  std::optional<Transcript> transcript;  // absent for the nonprivate mean
};

class Estimator {
 public:
  // Throws kInvalidParameter for unusable specs and kNoSignal when no client
  // has a positive budget.
  Estimator(EstimatorSpec spec, EstimatorContext context,
            std::vector<ClientSpec> clients);

  const EstimatorSpec& spec() const { return spec_; }
  const std::vector<ClientSpec>& clients() const { return clients_; }
  // Null for the nonprivate mean, which never enters the protocol engine.
  const Protocol* protocol() const {
    return protocol_ ? &*protocol_ : nullptr;
  }
  // Per-client charge declared by the protocol (all zero when nonprivate).
  BudgetVector DeclaredBudget() const;

  EstimatorRun Run(std::span<const Dataset> local_data, uint64_t seed) const;

 private:
  Eigen::VectorXd Decode(const Transcript& transcript) const;
  Eigen::VectorXd DecodeLinreg(const Transcript& transcript) const;

  EstimatorSpec spec_;
  EstimatorContext context_;
  std::vector<ClientSpec> clients_;
  std::optional<Protocol> protocol_;
  std::vector<double> weights_;  // final-round aggregation weights
};

struct RiskReport {
  std::string estimator;
  double risk = 0.0;
  double std_error = 0.0;
  int trials = 0;
  double bound = 0.0;
  double margin = 0.0;  // risk - bound
  bool passed = false;  // margin >= -3 std_error
};

struct RiskOptions {
  int trials = 10000;
  uint64_t seed = 0;
  int workers = 0;
};

// Trial i draws theta ~ prior and the data from DeriveSeed(seed,
// {kTrialStream, i}). Throws kBudgetExceeded if an executed transcript's
// accounting differs from the declared budget or exceeds a client budget.
RiskReport EmpiricalBayesRisk(const Estimator& estimator,
                              const ModelFamily& model, const Prior& prior,
                              double bound, const RiskOptions& options);

}  // namespace fedvt

#endif  // FEDVT_ESTIMATORS_H_
