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

#include "fedvt/mechanisms.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <utility>

namespace fedvt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void RequirePositive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidParameter, std::string(what) + " must be > 0");
  }
}

Eigen::VectorXd Flatten(const Dataset& local) {
  Eigen::VectorXd out(local.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < local.rows(); ++i) {
    for (Eigen::Index j = 0; j < local.cols(); ++j) out[k++] = local(i, j);
  }
  return out;
}

double ClipScalar(double y, double radius) {
  return std::clamp(y, -radius, radius);
}

}  // namespace

BoundedSumStatistic::BoundedSumStatistic(double diameter) : diameter_(diameter) {
  RequirePositive(diameter, "sum diameter");
}

Eigen::VectorXd BoundedSumStatistic::Compute(const Dataset& local,
                                             const Eigen::VectorXd&) const {
  return local.colwise().sum().transpose();
}

Eigen::VectorXd ClipToBall(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& center, double radius) {
  const Eigen::VectorXd offset = x - center;
  const double norm = offset.norm();
  if (norm <= radius) return x;
  return center + offset * (radius / norm);
}

ClippedMeanStatistic::ClippedMeanStatistic(double radius,
                                           bool centered_on_instruction)
    : radius_(radius), centered_on_instruction_(centered_on_instruction) {
  RequirePositive(radius, "clip radius");
}

Eigen::VectorXd ClippedMeanStatistic::Compute(
    const Dataset& local, const Eigen::VectorXd& instruction) const {
  const Eigen::Index dim = local.cols();
  Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
  if (centered_on_instruction_ && instruction.size() == dim) center = instruction;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index i = 0; i < local.rows(); ++i) {
    const double norm = (local.row(i).transpose() - center).norm();
    if (norm <= radius_) {
      sum += local.row(i).transpose();
    } else {
      sum += center + (local.row(i).transpose() - center) * (radius_ / norm);
    }
  }
  return sum / static_cast<double>(local.rows());
}

GramStatistic::GramStatistic(int d, double design_radius)
    : d_(d), design_radius_(design_radius) {
  RequirePositive(design_radius, "design clip radius");
}

Eigen::VectorXd GramStatistic::Compute(const Dataset& local,
                                       const Eigen::VectorXd&) const {
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d_, d_);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(d_);
  for (Eigen::Index i = 0; i < local.rows(); ++i) {
    const Eigen::VectorXd z =
        ClipToBall(local.row(i).head(d_).transpose(), origin, design_radius_);
    gram.noalias() += z * z.transpose();
  }
  Eigen::VectorXd out(d_ * (d_ + 1) / 2);
  Eigen::Index k = 0;
  for (int r = 0; r < d_; ++r) {
    for (int c = r; c < d_; ++c) out[k++] = gram(r, c);
  }
  return out;
}

CrossMomentStatistic::CrossMomentStatistic(int d, double design_radius,
                                           double response_radius)
    : d_(d), design_radius_(design_radius), response_radius_(response_radius) {
  RequirePositive(design_radius, "design clip radius");
  RequirePositive(response_radius, "response clip radius");
}

Eigen::VectorXd CrossMomentStatistic::Compute(const Dataset& local,
                                              const Eigen::VectorXd&) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d_);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(d_);
  for (Eigen::Index i = 0; i < local.rows(); ++i) {
    const Eigen::VectorXd z =
        ClipToBall(local.row(i).head(d_).transpose(), origin, design_radius_);
    out += z * ClipScalar(local(i, d_), response_radius_);
  }
  return out;
}

GaussianMechanism::GaussianMechanism(StatisticPtr statistic, int n,
                                     ZcdpBudget round_rho,
                                     std::optional<double> noise_std_override)
    : statistic_(std::move(statistic)), round_rho_(round_rho) {
  if (!statistic_) throw Error(ErrorCode::kInvalidParameter, "null statistic");
  if (n < 1) throw Error(ErrorCode::kInvalidParameter, "n must be >= 1");
  if (noise_std_override) {
    RequirePositive(*noise_std_override, "noise std");
    noise_std_ = *noise_std_override;
  } else {
    noise_std_ = GaussianNoiseForRho(statistic_->Sensitivity(n), round_rho.rho());
  }
}

Message GaussianMechanism::Evaluate(const Dataset& local, const PublicHistory&,
                                    const Eigen::VectorXd& instruction,
                                    StreamRng& rng) const {
  Eigen::VectorXd out = statistic_->Compute(local, instruction);
  std::normal_distribution<double> normal(0.0, noise_std_);
  for (auto& v : out) v += normal(rng);
  return Message::Of(std::move(out));
}

std::optional<double> GaussianMechanism::LogMessageDensity(
    const Message& message, const Dataset& local, const PublicHistory&,
    const Eigen::VectorXd& instruction) const {
  if (message.is_null) return kNegInf;
  const Eigen::VectorXd mean = statistic_->Compute(local, instruction);
  if (mean.size() != message.payload.size()) return kNegInf;
  const double s2 = noise_std_ * noise_std_;
  return -0.5 * (message.payload - mean).squaredNorm() / s2 -
         0.5 * static_cast<double>(mean.size()) *
             std::log(2.0 * std::numbers::pi * s2);
}

std::optional<OutputLaw> GaussianMechanism::OutputLawFor(
    const Dataset& local, const PublicHistory&,
    const Eigen::VectorXd& instruction) const {
  return GaussianLaw{statistic_->Compute(local, instruction), noise_std_};
}

std::optional<double> NullMechanism::LogMessageDensity(
    const Message& message, const Dataset&, const PublicHistory&,
    const Eigen::VectorXd&) const {
  return message.is_null ? 0.0 : kNegInf;
}

ConstantReleaseMechanism::ConstantReleaseMechanism(Eigen::VectorXd payload)
    : payload_(std::move(payload)) {}

std::optional<double> ConstantReleaseMechanism::LogMessageDensity(
    const Message& message, const Dataset&, const PublicHistory&,
    const Eigen::VectorXd&) const {
  return message == Message::Of(payload_) ? 0.0 : kNegInf;
}

IdentityReleaseMechanism::IdentityReleaseMechanism(ZcdpBudget nominal_rho)
    : nominal_rho_(nominal_rho) {}

Message IdentityReleaseMechanism::Evaluate(const Dataset& local,
                                           const PublicHistory&,
                                           const Eigen::VectorXd&,
                                           StreamRng&) const {
  return Message::Of(Flatten(local));
}

std::optional<double> IdentityReleaseMechanism::LogMessageDensity(
    const Message& message, const Dataset& local, const PublicHistory&,
    const Eigen::VectorXd&) const {
  return message == Message::Of(Flatten(local)) ? 0.0 : kNegInf;
}

BoundLocalMechanism::BoundLocalMechanism(MechanismPtr mechanism,
                                         const Transcript& history, int t,
                                         Eigen::VectorXd instruction)
    : mechanism_(std::move(mechanism)),
      history_(history),
      t_(t),
      instruction_(std::move(instruction)) {}

std::optional<OutputLaw> BoundLocalMechanism::Law(const Dataset& dataset) const {
  return mechanism_->OutputLawFor(dataset, HistoryBefore(history_, t_),
                                  instruction_);
}

BroadcastAggregatePolicy::BroadcastAggregatePolicy(std::vector<double> weights,
                                                   int dim)
    : weights_(std::move(weights)), dim_(dim) {}

std::vector<Eigen::VectorXd> BroadcastAggregatePolicy::NextInstructions(
    const PublicHistory& history, int t, int num_clients) const {
  if (t < 2 || history.rounds.empty()) {
    return std::vector<Eigen::VectorXd>(num_clients);
  }
  const Round& first = history.rounds.front();
  Eigen::VectorXd center = Eigen::VectorXd::Zero(dim_);
  double total = 0.0;
  for (int l = 0; l < num_clients; ++l) {
    const Message& msg = first.messages[l];
    if (msg.is_null || msg.payload.size() != dim_ ||
        l >= static_cast<int>(weights_.size())) {
      continue;
    }
    center += weights_[l] * msg.payload;
    total += weights_[l];
  }
  if (total > 0.0) center /= total;
  return std::vector<Eigen::VectorXd>(num_clients, center);
}

std::vector<double> InverseVarianceWeights(std::span<const ClientSpec> clients,
                                           int dim, double sample_var,
                                           std::span<const double> noise_stds) {
  if (noise_stds.size() != clients.size()) {
    throw Error(ErrorCode::kInvalidInput, "need one noise scale per client");
  }
  std::vector<double> weights(clients.size(), 0.0);
  double total = 0.0;
  for (std::size_t l = 0; l < clients.size(); ++l) {
    if (!std::isfinite(noise_stds[l])) continue;
    const double var = dim * sample_var / clients[l].n +
                       dim * noise_stds[l] * noise_stds[l];
    weights[l] = var > 0.0 ? 1.0 / var : 1.0;
    total += weights[l];
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kNoSignal, "no client carries signal");
  }
  for (double& w : weights) w /= total;
  return weights;
}

Protocol MakeProtocol(
    Schedule schedule, int num_clients,
    const std::function<MechanismPtr(int t, int l)>& mechanism_for,
    std::shared_ptr<const ServerPolicy> policy) {
  if (num_clients < 1) {
    throw Error(ErrorCode::kInvalidParameter, "need at least one client");
  }
  Protocol protocol;
  protocol.schedule = std::move(schedule);
  protocol.policy = std::move(policy);
  protocol.mechanisms.assign(protocol.schedule.rounds,
                             std::vector<MechanismPtr>(num_clients));
  for (int t = 1; t <= protocol.schedule.rounds; ++t) {
    for (int a : protocol.schedule.ActiveClients(t, num_clients)) {
      protocol.mechanisms[t - 1][a - 1] = mechanism_for(t, a);
    }
  }
  return protocol;
}

namespace {

MechanismPtr GaussianOrNull(StatisticPtr statistic, int n, double rho) {
  if (rho <= 0.0) return std::make_shared<NullMechanism>();
  return std::make_shared<GaussianMechanism>(std::move(statistic), n,
                                             ZcdpBudget(rho));
}

}  // namespace

Protocol MakeNullProtocol(int num_clients, int rounds) {
  return MakeProtocol(Schedule::Roundwise(rounds), num_clients,
                      [](int, int) { return std::make_shared<NullMechanism>(); });
}

Protocol MakeOnePassGaussianProtocol(std::span<const ClientSpec> clients,
                                     StatisticPtr statistic) {
  ValidateClients(clients);
  const int m = static_cast<int>(clients.size());
  return MakeProtocol(Schedule::OnePass(m), m,
                      [&](int, int l) {
                        const ClientSpec& c = clients[l - 1];
                        return GaussianOrNull(statistic, c.n, c.rho_budget.rho());
                      });
}

Protocol MakeRoundwiseGaussianProtocol(std::span<const ClientSpec> clients,
                                       int rounds, StatisticPtr statistic) {
  ValidateClients(clients);
  if (rounds < 1) throw Error(ErrorCode::kInvalidParameter, "rounds must be >= 1");
  return MakeProtocol(Schedule::Roundwise(rounds),
                      static_cast<int>(clients.size()), [&](int, int l) {
                        const ClientSpec& c = clients[l - 1];
                        return GaussianOrNull(statistic, c.n,
                                              c.rho_budget.rho() / rounds);
                      });
}

Protocol MakeAdaptiveTwoRoundMeanProtocol(std::span<const ClientSpec> clients,
                                          int dim, std::array<double, 2> split,
                                          ClipParams clip, double sample_var) {
  ValidateClients(clients);
  for (double s : split) {
    if (!(s > 0.0 && s < 1.0)) {
      throw Error(ErrorCode::kInvalidParameter,
                  "budget split fractions must lie in (0, 1)");
    }
  }
  if (std::abs(split[0] + split[1] - 1.0) > 1e-12) {
    throw Error(ErrorCode::kInvalidParameter, "budget split must sum to 1");
  }
  const int m = static_cast<int>(clients.size());
  auto first_stat = std::make_shared<ClippedMeanStatistic>(clip.first_radius, false);
  auto second_stat = std::make_shared<ClippedMeanStatistic>(clip.second_radius, true);

  std::vector<MechanismPtr> first(m);
  std::vector<MechanismPtr> second(m);
  std::vector<double> first_noise(m, std::numeric_limits<double>::infinity());
  for (int l = 0; l < m; ++l) {
    const double rho = clients[l].rho_budget.rho();
    const double rho_first = rho * split[0];
    const double rho_second = rho - rho_first;
    first[l] = GaussianOrNull(first_stat, clients[l].n, rho_first);
    second[l] = GaussianOrNull(second_stat, clients[l].n, rho_second);
    if (const auto* g = dynamic_cast<const GaussianMechanism*>(first[l].get())) {
      first_noise[l] = g->noise_std();
    }
  }
  std::shared_ptr<const ServerPolicy> policy;
  try {
    policy = std::make_shared<BroadcastAggregatePolicy>(
        InverseVarianceWeights(clients, dim, sample_var, first_noise), dim);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoSignal) throw;
    policy = std::make_shared<BroadcastAggregatePolicy>(std::vector<double>(m, 0.0), dim);
  }
  return MakeProtocol(
      Schedule::Roundwise(2), m,
      [&](int t, int l) { return t == 1 ? first[l - 1] : second[l - 1]; },
      policy);
}

}  // namespace fedvt
