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
#include <limits>
#include <utility>

#include "fedvt/parallel.h"
#include "fedvt/rng.h"

namespace fedvt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> NoiseStds(const Protocol& protocol, int round, int m) {
  std::vector<double> out(m, kInf);
  for (int l = 0; l < m; ++l) {
    const auto& mech = protocol.mechanisms[round - 1][l];
    if (const auto* g = dynamic_cast<const GaussianMechanism*>(mech.get())) {
      out[l] = g->noise_std();
    }
  }
  return out;
}

MechanismPtr GaussianOrNull(StatisticPtr stat, int n, double rho) {
  if (rho <= 0.0) return std::make_shared<NullMechanism>();
  return std::make_shared<GaussianMechanism>(std::move(stat), n, ZcdpBudget(rho));
}

void ValidateSplit(const std::array<double, 2>& split) {
  if (!(split[0] > 0.0 && split[0] < 1.0 && split[1] > 0.0 && split[1] < 1.0) ||
      std::abs(split[0] + split[1] - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidParameter,
                "budget split must be two fractions in (0, 1) summing to 1");
  }
}

}  // namespace

std::string_view EstimatorKindName(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kNonprivateMean:
      return "nonprivate_mean";
    case EstimatorKind::kFedGaussianMean:
      return "fed_gaussian_mean";
    case EstimatorKind::kFedGaussianMeanAdaptive:
      return "fed_gaussian_mean_adaptive";
    case EstimatorKind::kFedLinreg:
      return "fed_linreg";
  }
  return "unknown";
}

EstimatorKind ParseEstimatorKind(std::string_view name) {
  for (EstimatorKind k :
       {EstimatorKind::kNonprivateMean, EstimatorKind::kFedGaussianMean,
        EstimatorKind::kFedGaussianMeanAdaptive, EstimatorKind::kFedLinreg}) {
    if (EstimatorKindName(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidParameter,
              "unknown estimator '" + std::string(name) + "'");
}

double DefaultMeanClip(const EstimatorContext& context) {
  return context.prior_radius + 6.0 * context.sigma;
}

std::array<double, 2> DefaultLinregClips(const EstimatorContext& context) {
  if (!context.design_covariance) {
    throw Error(ErrorCode::kInvalidParameter, "fed_linreg needs a design");
  }
  const FisherMatrix<double> cov = MakeFisherMatrix(*context.design_covariance);
  const double tau_z = std::sqrt(cov.trace) + 4.0 * std::sqrt(cov.op_norm);
  const double tau_y =
      context.prior_radius * std::sqrt(static_cast<double>(context.dim)) * tau_z +
      6.0 * context.sigma;
  return {tau_z, tau_y};
}

Estimator::Estimator(EstimatorSpec spec, EstimatorContext context,
                     std::vector<ClientSpec> clients)
    : spec_(spec), context_(std::move(context)), clients_(std::move(clients)) {
  ValidateClients(clients_);
  if (context_.dim < 1 || !(context_.sigma > 0.0) || !(context_.prior_radius > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "invalid estimator context");
  }
  if (spec_.clip_radius < 0.0 || spec_.response_clip < 0.0) {
    throw Error(ErrorCode::kInvalidParameter, "clip radii must be positive");
  }
  const int m = static_cast<int>(clients_.size());
  const int d = context_.dim;
  const double var = context_.sigma * context_.sigma;

  switch (spec_.kind) {
    case EstimatorKind::kNonprivateMean:
      return;
    case EstimatorKind::kFedGaussianMean: {
      if (spec_.clip_radius == 0.0) spec_.clip_radius = DefaultMeanClip(context_);
      protocol_ = MakeOnePassGaussianProtocol(
          clients_, std::make_shared<ClippedMeanStatistic>(spec_.clip_radius, false));
      std::vector<double> noise(m);
      for (int l = 0; l < m; ++l) noise[l] = NoiseStds(*protocol_, l + 1, m)[l];
      weights_ = InverseVarianceWeights(clients_, d, var, noise);
      return;
    }
    case EstimatorKind::kFedGaussianMeanAdaptive: {
      if (spec_.clip_radius == 0.0) spec_.clip_radius = DefaultMeanClip(context_);
      ValidateSplit(spec_.split);
      protocol_ = MakeAdaptiveTwoRoundMeanProtocol(
          clients_, d, spec_.split, ClipParams{spec_.clip_radius, spec_.clip_radius},
          var);
      weights_ = InverseVarianceWeights(clients_, d, var, NoiseStds(*protocol_, 2, m));
      return;
    }
    case EstimatorKind::kFedLinreg: {
      ValidateSplit(spec_.split);
      const auto clips = DefaultLinregClips(context_);
      if (spec_.clip_radius == 0.0) spec_.clip_radius = clips[0];
      if (spec_.response_clip == 0.0) spec_.response_clip = clips[1];
      auto gram = std::make_shared<GramStatistic>(d, spec_.clip_radius);
      auto cross = std::make_shared<CrossMomentStatistic>(d, spec_.clip_radius,
                                                          spec_.response_clip);
      bool any = false;
      for (const ClientSpec& c : clients_) any = any || c.rho_budget.rho() > 0.0;
      if (!any) throw Error(ErrorCode::kNoSignal, "no client carries signal");
      protocol_ = MakeProtocol(Schedule::Roundwise(2), m, [&](int t, int l) {
        const ClientSpec& c = clients_[l - 1];
        const double rho = c.rho_budget.rho();
        const double first = rho * spec_.split[0];
        return t == 1 ? GaussianOrNull(gram, c.n, first)
                      : GaussianOrNull(cross, c.n, rho - first);
      });
      return;
    }
  }
}

BudgetVector Estimator::DeclaredBudget() const {
  if (!protocol_) {
    return BudgetVector(clients_.size(), ZcdpBudget(0.0));
  }
  return DeclaredCharges(*protocol_, static_cast<int>(clients_.size()));
}

EstimatorRun Estimator::Run(std::span<const Dataset> local_data,
                            uint64_t seed) const {
  if (local_data.size() != clients_.size()) {
    throw Error(ErrorCode::kInvalidInput, "need one local dataset per client");
  }
  EstimatorRun run;
  if (!protocol_) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(context_.dim);
    double count = 0.0;
    for (const Dataset& x : local_data) {
      sum += x.leftCols(context_.dim).colwise().sum().transpose();
      count += static_cast<double>(x.rows());
    }
    run.estimate = sum / count;
    return run;
  }
  run.transcript = ExecuteProtocol(local_data, clients_, *protocol_, seed);
  run.estimate = Decode(*run.transcript);
  return run;
}

Eigen::VectorXd Estimator::Decode(const Transcript& transcript) const {
  if (spec_.kind == EstimatorKind::kFedLinreg) return DecodeLinreg(transcript);
  const int m = static_cast<int>(clients_.size());
  Eigen::VectorXd estimate = Eigen::VectorXd::Zero(context_.dim);
  for (int l = 0; l < m; ++l) {
    if (weights_[l] == 0.0) continue;
    const int t = spec_.kind == EstimatorKind::kFedGaussianMean ? l + 1 : 2;
    const Message& msg = transcript.rounds[t - 1].messages[l];
    if (msg.is_null) continue;
    estimate += weights_[l] * msg.payload;
  }
  return estimate;
}

Eigen::VectorXd Estimator::DecodeLinreg(const Transcript& transcript) const {
  const int d = context_.dim;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (std::size_t l = 0; l < clients_.size(); ++l) {
    const Message& gram = transcript.rounds[0].messages[l];
    const Message& cross = transcript.rounds[1].messages[l];
    if (gram.is_null || cross.is_null) continue;
    Eigen::Index k = 0;
    for (int r = 0; r < d; ++r) {
      for (int c = r; c < d; ++c) {
        a(r, c) += gram.payload[k];
        if (c != r) a(c, r) += gram.payload[k];
        ++k;
      }
    }
    b += cross.payload;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kEstimationFailed, "eigendecomposition failed");
  }
  const Eigen::VectorXd lambda =
      eig.eigenvalues().cwiseMax(kLinregEigenFloor);
  const Eigen::VectorXd theta =
      eig.eigenvectors() *
      (eig.eigenvectors().transpose() * b).cwiseQuotient(lambda);
  if (!theta.allFinite()) {
    throw Error(ErrorCode::kEstimationFailed, "normal equations are singular");
  }
  return theta;
}

RiskReport EmpiricalBayesRisk(const Estimator& estimator,
                              const ModelFamily& model, const Prior& prior,
                              double bound, const RiskOptions& options) {
  if (options.trials < 1000) {
    throw Error(ErrorCode::kInvalidParameter, "risk estimation needs >= 1000 trials");
  }
  if (prior.Dim() != model.ParamDim()) {
    throw Error(ErrorCode::kInvalidParameter, "prior and model dimensions differ");
  }
  const auto& clients = estimator.clients();
  const BudgetVector declared = estimator.DeclaredBudget();
  if (const Protocol* protocol = estimator.protocol()) {
    ValidateProtocol(*protocol, clients);
  }
  std::vector<double> losses(options.trials);
  ParallelFor(options.trials, options.workers, [&](int i) {
    const uint64_t trial_seed =
        DeriveSeed(options.seed, {kTrialStream, static_cast<uint64_t>(i)});
    StreamRng prior_rng(DeriveSeed(trial_seed, {kPriorStream}));
    const Eigen::VectorXd theta = prior.Sample(prior_rng);
    const auto data = SampleLocalData(model, theta, clients, trial_seed);
    const EstimatorRun run = estimator.Run(data, trial_seed);
    if (run.transcript && Account(*run.transcript) != declared) {
      throw Error(ErrorCode::kBudgetExceeded,
                  "executed accounting differs from the declared budget");
    }
    losses[i] = (run.estimate - theta).squaredNorm();
  });
  const auto s = SummarizeSamples<double>(losses);
  RiskReport report;
  report.estimator = std::string(EstimatorKindName(estimator.spec().kind));
  report.risk = s.mean;
  report.std_error = s.std_error;
  report.trials = options.trials;
  report.bound = bound;
  report.margin = s.mean - bound;
  report.passed = report.margin >= -3.0 * s.std_error;
  return report;
}

}  // namespace fedvt
