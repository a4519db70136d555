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

// Local mechanisms, server policies and ready-made protocols.

#ifndef FEDVT_MECHANISMS_H_
#define FEDVT_MECHANISMS_H_

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedvt/protocol.h"

namespace fedvt {

// A deterministic local statistic with a known replace-one L2 sensitivity.
class LocalStatistic {
 public:
  virtual ~LocalStatistic() = default;
  virtual std::string Name() const = 0;
  virtual Eigen::VectorXd Compute(const Dataset& local,
                                  const Eigen::VectorXd& instruction) const = 0;
  virtual double Sensitivity(int n) const = 0;
};

using StatisticPtr = std::shared_ptr<const LocalStatistic>;

// Sum of the samples; `diameter` bounds the L2 distance between any two
// samples (1 for Bernoulli data).
class BoundedSumStatistic final : public LocalStatistic {
 public:
  explicit BoundedSumStatistic(double diameter);
  std::string Name() const override { return "bounded_sum"; }
  Eigen::VectorXd Compute(const Dataset& local,
                          const Eigen::VectorXd& instruction) const override;
  double Sensitivity(int) const override { return diameter_; }

 private:
  double diameter_;
};

// Projects x onto the L2 ball of radius `radius` around `center`.
Eigen::VectorXd ClipToBall(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& center, double radius);

// Mean of samples clipped to an L2 ball of radius tau. The ball is centered
// at the origin, or at the round instruction when `centered_on_instruction`
// (an empty instruction falls back to the origin). Sensitivity 2 tau / n.
class ClippedMeanStatistic final : public LocalStatistic {
 public:
  ClippedMeanStatistic(double radius, bool centered_on_instruction);
  std::string Name() const override { return "clipped_mean"; }
  Eigen::VectorXd Compute(const Dataset& local,
                          const Eigen::VectorXd& instruction) const override;
  double Sensitivity(int n) const override { return 2.0 * radius_ / n; }

 private:
  double radius_;
  bool centered_on_instruction_;
};

// Upper triangle (row-major) of sum_i z_i z_i^T over the design columns of
// (Z, Y) observations, with z clipped to radius tau_z. Sensitivity
// 2 tau_z^2.
class GramStatistic final : public LocalStatistic {
 public:
  GramStatistic(int d, double design_radius);
  std::string Name() const override { return "gram"; }
  Eigen::VectorXd Compute(const Dataset& local,
                          const Eigen::VectorXd& instruction) const override;
  // sup ||vech(zz^T - z'z'^T)|| over the clip ball, attained at orthogonal
  // boundary points.
  double Sensitivity(int) const override {
    const double r2 = design_radius_ * design_radius_;
    return d_ == 1 ? r2 : std::sqrt(2.0) * r2;
  }

 private:
  int d_;
  double design_radius_;
};

// sum_i clip(z_i) clip(y_i) with |y| clipped to tau_y. Sensitivity
// 2 tau_z tau_y.
class CrossMomentStatistic final : public LocalStatistic {
 public:
  CrossMomentStatistic(int d, double design_radius, double response_radius);
  std::string Name() const override { return "cross_moment"; }
  Eigen::VectorXd Compute(const Dataset& local,
                          const Eigen::VectorXd& instruction) const override;
  double Sensitivity(int) const override {
    return 2.0 * design_radius_ * response_radius_;
  }

 private:
  int d_;
  double design_radius_;
  double response_radius_;
};

// statistic + N(0, s^2 I). With no override, s = sensitivity / sqrt(2 rho),
// which is exactly rho-zCDP. An override decouples the noise from the
// declared budget (used to inject miscalibrated mechanisms).
class GaussianMechanism final : public LocalMechanism {
 public:
  GaussianMechanism(StatisticPtr statistic, int n, ZcdpBudget round_rho,
                    std::optional<double> noise_std_override = std::nullopt);

  std::string Name() const override { return "gaussian/" + statistic_->Name(); }
  ZcdpBudget RoundRho() const override { return round_rho_; }
  Message Evaluate(const Dataset& local, const PublicHistory& history,
                   const Eigen::VectorXd& instruction,
                   StreamRng& rng) const override;
  std::optional<double> LogMessageDensity(
      const Message& message, const Dataset& local,
      const PublicHistory& history,
      const Eigen::VectorXd& instruction) const override;
  std::optional<OutputLaw> OutputLawFor(
      const Dataset& local, const PublicHistory& history,
      const Eigen::VectorXd& instruction) const override;

  double noise_std() const { return noise_std_; }
  const LocalStatistic& statistic() const { return *statistic_; }
  const StatisticPtr& shared_statistic() const { return statistic_; }

 private:
  StatisticPtr statistic_;
  ZcdpBudget round_rho_;
  double noise_std_;
};

// Always the null message; zero charge.
class NullMechanism final : public LocalMechanism {
 public:
  std::string Name() const override { return "null"; }
  ZcdpBudget RoundRho() const override { return ZcdpBudget(0.0); }
  Message Evaluate(const Dataset&, const PublicHistory&,
                   const Eigen::VectorXd&, StreamRng&) const override {
    return Message::Null();
  }
  std::optional<double> LogMessageDensity(
      const Message& message, const Dataset&, const PublicHistory&,
      const Eigen::VectorXd&) const override;
  std::optional<OutputLaw> OutputLawFor(
      const Dataset&, const PublicHistory&,
      const Eigen::VectorXd&) const override {
    return DiscreteLaw{Eigen::VectorXd::Ones(1)};
  }
};

// A fixed non-null payload regardless of the data; zero charge.
class ConstantReleaseMechanism final : public LocalMechanism {
 public:
  explicit ConstantReleaseMechanism(Eigen::VectorXd payload);
  std::string Name() const override { return "constant"; }
  ZcdpBudget RoundRho() const override { return ZcdpBudget(0.0); }
  Message Evaluate(const Dataset&, const PublicHistory&,
                   const Eigen::VectorXd&, StreamRng&) const override {
    return Message::Of(payload_);
  }
  std::optional<double> LogMessageDensity(
      const Message& message, const Dataset&, const PublicHistory&,
      const Eigen::VectorXd&) const override;
  std::optional<OutputLaw> OutputLawFor(
      const Dataset&, const PublicHistory&,
      const Eigen::VectorXd&) const override {
    return DiscreteLaw{Eigen::VectorXd::Ones(1)};
  }

 private:
  Eigen::VectorXd payload_;
};

// Publishes the raw local sample (rows concatenated). Not private; the
// declared charge is a nominal value supplied by the caller.
class IdentityReleaseMechanism final : public LocalMechanism {
 public:
  explicit IdentityReleaseMechanism(ZcdpBudget nominal_rho);
  std::string Name() const override { return "identity"; }
  ZcdpBudget RoundRho() const override { return nominal_rho_; }
  Message Evaluate(const Dataset& local, const PublicHistory&,
                   const Eigen::VectorXd&, StreamRng&) const override;
  std::optional<double> LogMessageDensity(
      const Message& message, const Dataset& local, const PublicHistory&,
      const Eigen::VectorXd&) const override;

 private:
  ZcdpBudget nominal_rho_;
};

// Binds a local mechanism to a fixed history and instruction so that it can
// be audited as a mechanism of the local dataset alone.
class BoundLocalMechanism final : public AuditableMechanism {
 public:
  BoundLocalMechanism(MechanismPtr mechanism, const Transcript& history,
                      int t, Eigen::VectorXd instruction);
  std::string Name() const override { return mechanism_->Name(); }
  std::optional<OutputLaw> Law(const Dataset& dataset) const override;

 private:
  MechanismPtr mechanism_;
  const Transcript& history_;
  int t_;
  Eigen::VectorXd instruction_;
};

// From round 2 on, instructs every client with the weighted average of the
// non-null round-1 payloads (the origin when there are none).
class BroadcastAggregatePolicy final : public ServerPolicy {
 public:
  BroadcastAggregatePolicy(std::vector<double> weights, int dim);
  std::vector<Eigen::VectorXd> NextInstructions(
      const PublicHistory& history, int t, int num_clients) const override;

 private:
  std::vector<double> weights_;
  int dim_;
};

// Weights proportional to (d * sample_var / n_l + d * noise_var_l)^{-1},
// normalized over clients with finite noise. Clients with noise_std = +inf
// (no release) get weight 0. Throws kNoSignal if every weight is zero.
std::vector<double> InverseVarianceWeights(std::span<const ClientSpec> clients,
                                           int dim, double sample_var,
                                           std::span<const double> noise_stds);

// Every active slot runs `mechanism_for(t, l)`.
Protocol MakeProtocol(
    Schedule schedule, int num_clients,
    const std::function<MechanismPtr(int t, int l)>& mechanism_for,
    std::shared_ptr<const ServerPolicy> policy = nullptr);

Protocol MakeNullProtocol(int num_clients, int rounds);

// One Gaussian release of `statistic` per client at its full budget, in
// client order. Clients with rho_l = 0 send null messages.
Protocol MakeOnePassGaussianProtocol(std::span<const ClientSpec> clients,
                                     StatisticPtr statistic);

// T rounds, every client active in every round with budget rho_l / T.
Protocol MakeRoundwiseGaussianProtocol(std::span<const ClientSpec> clients,
                                       int rounds, StatisticPtr statistic);

struct ClipParams {
  double first_radius = 1.0;   // round 1, ball around the origin
  double second_radius = 1.0;  // round 2, ball around the broadcast
};

// Round 1: clipped noisy mean at budget split[0] * rho_l. The server
// broadcasts the inverse-variance-weighted aggregate. Round 2: the same
// samples re-clipped around the broadcast, at the remaining budget.
Protocol MakeAdaptiveTwoRoundMeanProtocol(std::span<const ClientSpec> clients,
                                          int dim, std::array<double, 2> split,
                                          ClipParams clip, double sample_var);

}  // namespace fedvt

#endif  // FEDVT_MECHANISMS_H_
