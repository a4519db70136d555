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

#include "fedvt/fisher_lab.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "fedvt/parallel.h"
#include "fedvt/rng.h"

namespace fedvt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr uint64_t kEscalationKey = 0xe5ca1a7e;
constexpr double kAbsoluteFloor = 1e-12;

double LogSumExp(const Eigen::VectorXd& v) {
  const double peak = v.maxCoeff();
  if (peak == kNegInf) return kNegInf;
  return peak + std::log((v.array() - peak).exp().sum());
}

std::vector<ClientEnumeration> EnumerateAll(const ModelFamily& model,
                                            const Eigen::VectorXd& theta,
                                            std::span<const ClientSpec> clients,
                                            std::size_t cap) {
  std::vector<ClientEnumeration> out;
  out.reserve(clients.size());
  for (const ClientSpec& c : clients) {
    out.push_back(EnumerateClientData(model, theta, c.n, cap));
  }
  return out;
}

// log L_l(g; x) for every enumerated configuration of every client.
std::vector<Eigen::VectorXd> ClientLogFactorTables(
    const Transcript& transcript, const Protocol& protocol,
    const std::vector<ClientEnumeration>& enums) {
  std::vector<Eigen::VectorXd> out(enums.size());
  for (std::size_t l = 0; l < enums.size(); ++l) {
    const auto& configs = enums[l].configs;
    out[l].resize(static_cast<Eigen::Index>(configs.size()));
    for (std::size_t k = 0; k < configs.size(); ++k) {
      out[l][k] = ClientLogFactor(transcript, static_cast<int>(l), configs[k],
                                  protocol);
    }
  }
  return out;
}

Eigen::VectorXd Normalize(const Eigen::VectorXd& log_weights) {
  const double peak = log_weights.maxCoeff();
  if (peak == kNegInf) {
    throw Error(ErrorCode::kInvalidTranscript,
                "transcript has zero likelihood under every local dataset");
  }
  Eigen::VectorXd w = (log_weights.array() - peak).exp();
  return w / w.sum();
}

struct TrialSetup {
  const ModelFamily& model;
  const Eigen::VectorXd& theta;
  std::span<const ClientSpec> clients;
  const Protocol& protocol;
  std::vector<ClientEnumeration> enums;
};

uint64_t TrialSeed(uint64_t seed, int trial) {
  return DeriveSeed(seed, {kTrialStream, static_cast<uint64_t>(trial)});
}

Transcript DrawTranscript(const TrialSetup& setup, uint64_t trial_seed) {
  const auto data =
      SampleLocalData(setup.model, setup.theta, setup.clients, trial_seed);
  return ExecuteProtocol(data, setup.clients, setup.protocol, trial_seed);
}

// U_l(g) = E[S_l | g] for every client.
std::vector<Eigen::VectorXd> PosteriorMeanScores(
    const std::vector<ClientEnumeration>& enums,
    const std::vector<Eigen::VectorXd>& log_factors) {
  std::vector<Eigen::VectorXd> u(enums.size());
  for (std::size_t l = 0; l < enums.size(); ++l) {
    u[l] = enums[l].scores * Normalize(enums[l].log_prob + log_factors[l]);
  }
  return u;
}

FisherEstimate Summarize(const std::vector<double>& values, FisherMethod method) {
  const auto s = SummarizeSamples<double>(values);
  return FisherEstimate{s.mean, s.std_error, method,
                        static_cast<int>(values.size())};
}

void RequireTrials(const MonteCarloOptions& options, int minimum) {
  if (options.trials < minimum) {
    throw Error(ErrorCode::kInvalidParameter,
                "need at least " + std::to_string(minimum) + " trials");
  }
}

MonteCarloOptions Escalated(const MonteCarloOptions& options) {
  MonteCarloOptions out = options;
  out.trials = options.trials * kEscalationFactor;
  out.seed = DeriveSeed(options.seed, {kEscalationKey});
  return out;
}

}  // namespace

ClientEnumeration EnumerateClientData(const ModelFamily& model,
                                      const Eigen::VectorXd& theta, int n,
                                      std::size_t cap) {
  model.ValidateParameter(theta);
  const auto support = model.DiscreteSupport();
  if (!support) {
    throw Error(ErrorCode::kUnsupported,
                model.Name() + " has no finite support to enumerate");
  }
  if (n < 1) throw Error(ErrorCode::kInvalidParameter, "n must be >= 1");
  const std::size_t k = support->size();
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > cap / k) {
      throw Error(ErrorCode::kEnumerationCapExceeded,
                  "enumerating " + std::to_string(k) + "^" + std::to_string(n) +
                      " local datasets exceeds the cap " + std::to_string(cap));
    }
    total *= k;
  }
  std::vector<double> log_p(k);
  std::vector<Eigen::VectorXd> s(k);
  for (std::size_t v = 0; v < k; ++v) {
    log_p[v] = model.LogDensity((*support)[v], theta);
    s[v] = model.Score((*support)[v], theta);
  }
  ClientEnumeration out;
  out.configs.reserve(total);
  out.log_prob.resize(static_cast<Eigen::Index>(total));
  out.scores.setZero(model.ParamDim(), static_cast<Eigen::Index>(total));
  const Eigen::Index dim = model.ObservationDim();
  for (std::size_t config = 0; config < total; ++config) {
    Dataset x(n, dim);
    double lp = 0.0;
    std::size_t c = config;
    for (int i = 0; i < n; ++i) {
      const std::size_t v = c % k;
      c /= k;
      x.row(i) = (*support)[v].transpose();
      lp += log_p[v];
      out.scores.col(static_cast<Eigen::Index>(config)) += s[v];
    }
    out.log_prob[static_cast<Eigen::Index>(config)] = lp;
    out.configs.push_back(std::move(x));
  }
  return out;
}

PosteriorTables PosteriorOverData(const Transcript& transcript,
                                  const ModelFamily& model,
                                  const Eigen::VectorXd& theta,
                                  std::span<const ClientSpec> clients,
                                  const Protocol& protocol,
                                  const EnumerationOptions& options) {
  ValidateTranscript(transcript);
  if (transcript.num_clients != static_cast<int>(clients.size())) {
    throw Error(ErrorCode::kInvalidInput, "client count mismatch");
  }
  PosteriorTables tables;
  tables.enumerations = EnumerateAll(model, theta, clients, options.client_cap);
  const auto log_factors =
      ClientLogFactorTables(transcript, protocol, tables.enumerations);
  for (std::size_t l = 0; l < clients.size(); ++l) {
    tables.probabilities.push_back(
        Normalize(tables.enumerations[l].log_prob + log_factors[l]));
  }
  return tables;
}

ProductFormCheck CheckPosteriorProductForm(const Transcript& transcript,
                                           const ModelFamily& model,
                                           const Eigen::VectorXd& theta,
                                           std::span<const ClientSpec> clients,
                                           const Protocol& protocol,
                                           const EnumerationOptions& options) {
  const PosteriorTables tables =
      PosteriorOverData(transcript, model, theta, clients, protocol, options);
  const std::size_t m = clients.size();
  std::size_t joint = 1;
  for (const auto& e : tables.enumerations) {
    if (joint > options.joint_cap / e.configs.size()) {
      throw Error(ErrorCode::kEnumerationCapExceeded,
                  "joint enumeration exceeds the cap");
    }
    joint *= e.configs.size();
  }
  // Joint log posterior weights from the message-by-message density.
  Eigen::VectorXd log_w(static_cast<Eigen::Index>(joint));
  std::vector<std::size_t> index(m);
  std::vector<Dataset> data(m);
  for (std::size_t j = 0; j < joint; ++j) {
    std::size_t c = j;
    double lp = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      const std::size_t k = tables.enumerations[l].configs.size();
      index[l] = c % k;
      c /= k;
      data[l] = tables.enumerations[l].configs[index[l]];
      lp += tables.enumerations[l].log_prob[static_cast<Eigen::Index>(index[l])];
    }
    log_w[static_cast<Eigen::Index>(j)] =
        lp + ComputeTranscriptDensity(transcript, data, protocol).log_joint;
  }
  const Eigen::VectorXd posterior = Normalize(log_w);

  std::vector<Eigen::VectorXd> marginals(m);
  for (std::size_t l = 0; l < m; ++l) {
    marginals[l].setZero(
        static_cast<Eigen::Index>(tables.enumerations[l].configs.size()));
  }
  for (std::size_t j = 0; j < joint; ++j) {
    std::size_t c = j;
    for (std::size_t l = 0; l < m; ++l) {
      const std::size_t k = tables.enumerations[l].configs.size();
      marginals[l][static_cast<Eigen::Index>(c % k)] +=
          posterior[static_cast<Eigen::Index>(j)];
      c /= k;
    }
  }
  ProductFormCheck out;
  out.joint_configs = joint;
  for (std::size_t j = 0; j < joint; ++j) {
    std::size_t c = j;
    double factorized = 1.0;
    double product_of_marginals = 1.0;
    for (std::size_t l = 0; l < m; ++l) {
      const std::size_t k = tables.enumerations[l].configs.size();
      const auto idx = static_cast<Eigen::Index>(c % k);
      factorized *= tables.probabilities[l][idx];
      product_of_marginals *= marginals[l][idx];
      c /= k;
    }
    const double p = posterior[static_cast<Eigen::Index>(j)];
    out.max_error_vs_factorized =
        std::max(out.max_error_vs_factorized, std::abs(p - factorized));
    out.max_error_vs_marginals =
        std::max(out.max_error_vs_marginals, std::abs(p - product_of_marginals));
  }
  return out;
}

TranscriptFisherResult TranscriptFisher(const ModelFamily& model,
                                        const Eigen::VectorXd& theta,
                                        std::span<const ClientSpec> clients,
                                        const Protocol& protocol,
                                        const MonteCarloOptions& options) {
  RequireTrials(options, 100);
  ValidateProtocol(protocol, clients);
  const TrialSetup setup{model, theta, clients, protocol,
                         EnumerateAll(model, theta, clients,
                                      options.enumeration.client_cap)};
  const int m = static_cast<int>(clients.size());
  const int trials = options.trials;
  const int pairs = m * (m - 1) / 2;

  std::vector<double> total(trials);
  std::vector<std::vector<double>> per_client(m, std::vector<double>(trials));
  std::vector<std::vector<double>> cross(pairs, std::vector<double>(trials));
  std::vector<double> gap(trials);

  ParallelFor(trials, options.workers, [&](int i) {
    const Transcript g = DrawTranscript(setup, TrialSeed(options.seed, i));
    const auto u = PosteriorMeanScores(
        setup.enums, ClientLogFactorTables(g, protocol, setup.enums));
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.ParamDim());
    double client_total = 0.0;
    for (int l = 0; l < m; ++l) {
      sum += u[l];
      per_client[l][i] = u[l].squaredNorm();
      client_total += per_client[l][i];
    }
    int k = 0;
    for (int l = 0; l < m; ++l) {
      for (int j = l + 1; j < m; ++j) cross[k++][i] = u[l].dot(u[j]);
    }
    total[i] = sum.squaredNorm();
    gap[i] = total[i] - client_total;
  });

  TranscriptFisherResult result;
  result.total = Summarize(total, FisherMethod::kExactEnumeration);
  for (int l = 0; l < m; ++l) {
    result.per_client.push_back(
        Summarize(per_client[l], FisherMethod::kExactEnumeration));
  }
  result.cross_mean = Eigen::MatrixXd::Zero(m, m);
  result.cross_std_error = Eigen::MatrixXd::Zero(m, m);
  int k = 0;
  for (int l = 0; l < m; ++l) {
    for (int j = l + 1; j < m; ++j) {
      const auto s = SummarizeSamples<double>(cross[k++]);
      result.cross_mean(l, j) = result.cross_mean(j, l) = s.mean;
      result.cross_std_error(l, j) = result.cross_std_error(j, l) = s.std_error;
    }
  }
  result.decomposition_gap = SummarizeSamples<double>(gap);
  return result;
}

namespace {

ContractionReport RunContraction(const std::string& claim,
                                 const ModelFamily& model,
                                 const Eigen::VectorXd& theta,
                                 std::span<const ClientSpec> clients,
                                 const Protocol& protocol,
                                 const MonteCarloOptions& options,
                                 bool escalate, bool privacy_only) {
  const FisherMatrix<double> info = model.Fisher(theta);
  const BudgetVector rho = DeclaredCharges(protocol, static_cast<int>(clients.size()));
  ContractionReport report;
  report.claim = claim;
  for (std::size_t l = 0; l < clients.size(); ++l) {
    const double n = clients[l].n;
    const double privacy = std::expm1(2.0 * rho[l].rho()) * n * n * info.op_norm;
    const double sample = n * info.trace;
    report.client_privacy_bounds.push_back(privacy);
    report.client_sample_bounds.push_back(sample);
    report.min_bound += std::min(privacy, sample);
  }
  report.bound = privacy_only ? report.client_privacy_bounds.front() : report.min_bound;

  auto run = [&](const MonteCarloOptions& opts) {
    const TranscriptFisherResult r =
        TranscriptFisher(model, theta, clients, protocol, opts);
    report.estimate = r.total.value;
    report.std_error = r.total.std_error;
    report.trials = r.total.trials;
    report.slack = report.bound - report.estimate;
    report.passed =
        report.estimate <= report.bound + kSeMultiplier * report.std_error;
  };
  run(options);
  if (!report.passed && escalate) {
    report.escalated = true;
    run(Escalated(options));
  }
  return report;
}

}  // namespace

ContractionReport CheckSingleClientContraction(const ModelFamily& model,
                                               const Eigen::VectorXd& theta,
                                               const ClientSpec& client,
                                               const Protocol& protocol,
                                               const MonteCarloOptions& options,
                                               bool escalate) {
  return RunContraction("single_client_contraction", model, theta,
                        std::span<const ClientSpec>(&client, 1), protocol,
                        options, escalate, /*privacy_only=*/true);
}

ContractionReport CheckTranscriptContraction(const ModelFamily& model,
                                             const Eigen::VectorXd& theta,
                                             std::span<const ClientSpec> clients,
                                             const Protocol& protocol,
                                             const MonteCarloOptions& options,
                                             bool escalate) {
  return RunContraction("transcript_contraction", model, theta, clients,
                        protocol, options, escalate, /*privacy_only=*/false);
}

DecompositionReport CheckInformationDecomposition(
    const ModelFamily& model, const Eigen::VectorXd& theta,
    std::span<const ClientSpec> clients, const Protocol& protocol,
    const MonteCarloOptions& options, bool escalate) {
  DecompositionReport report;
  auto run = [&](const MonteCarloOptions& opts) {
    const TranscriptFisherResult r =
        TranscriptFisher(model, theta, clients, protocol, opts);
    report.total = r.total.value;
    report.total_std_error = r.total.std_error;
    report.client_sum = 0.0;
    for (const auto& c : r.per_client) report.client_sum += c.value;
    report.gap = r.decomposition_gap.mean;
    report.gap_std_error = r.decomposition_gap.std_error;
    report.cross_mean = r.cross_mean;
    report.cross_std_error = r.cross_std_error;
    report.trials = r.total.trials;
    bool ok = std::abs(report.gap) <=
              kSeMultiplier * report.gap_std_error + kAbsoluteFloor;
    for (Eigen::Index l = 0; l < r.cross_mean.rows(); ++l) {
      for (Eigen::Index j = l + 1; j < r.cross_mean.cols(); ++j) {
        ok = ok && std::abs(r.cross_mean(l, j)) <=
                       kSeMultiplier * r.cross_std_error(l, j) + kAbsoluteFloor;
      }
    }
    report.passed = ok;
  };
  run(options);
  if (!report.passed && escalate) {
    report.escalated = true;
    run(Escalated(options));
  }
  return report;
}

namespace {

struct PairedMarginalTrials {
  std::vector<double> projection;
  std::vector<double> marginal;
  bool joint_enumeration = false;
};

PairedMarginalTrials RunMarginalTrials(const ModelFamily& model,
                                       const Eigen::VectorXd& theta,
                                       std::span<const ClientSpec> clients,
                                       const Protocol& protocol,
                                       const MonteCarloOptions& options,
                                       double step) {
  if (model.ParamDim() != 1) {
    throw Error(ErrorCode::kUnsupported,
                "marginal-gradient oracle needs a scalar parameter");
  }
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidParameter, "step must be > 0");
  RequireTrials(options, 100);
  ValidateProtocol(protocol, clients);
  const Eigen::VectorXd up = theta.array() + step;
  const Eigen::VectorXd down = theta.array() - step;
  const std::size_t cap = options.enumeration.client_cap;
  const TrialSetup setup{model, theta, clients, protocol,
                         EnumerateAll(model, theta, clients, cap)};
  const auto enum_up = EnumerateAll(model, up, clients, cap);
  const auto enum_down = EnumerateAll(model, down, clients, cap);
  const std::size_t m = clients.size();

  std::size_t joint = 1;
  bool use_joint = true;
  for (const auto& e : setup.enums) {
    if (joint > options.enumeration.joint_cap / e.configs.size()) {
      use_joint = false;
      break;
    }
    joint *= e.configs.size();
  }

  // log p_theta'(g) up to the theta-free nu_0 term.
  auto log_marginal = [&](const std::vector<ClientEnumeration>& enums,
                          const std::vector<Eigen::VectorXd>& log_factors) {
    if (!use_joint) {
      double out = 0.0;
      for (std::size_t l = 0; l < m; ++l) {
        out += LogSumExp(enums[l].log_prob + log_factors[l]);
      }
      return out;
    }
    Eigen::VectorXd terms(static_cast<Eigen::Index>(joint));
    for (std::size_t j = 0; j < joint; ++j) {
      std::size_t c = j;
      double t = 0.0;
      for (std::size_t l = 0; l < m; ++l) {
        const std::size_t k = enums[l].configs.size();
        const auto idx = static_cast<Eigen::Index>(c % k);
        c /= k;
        t += enums[l].log_prob[idx] + log_factors[l][idx];
      }
      terms[static_cast<Eigen::Index>(j)] = t;
    }
    return LogSumExp(terms);
  };

  PairedMarginalTrials out;
  out.joint_enumeration = use_joint;
  out.projection.resize(options.trials);
  out.marginal.resize(options.trials);
  ParallelFor(options.trials, options.workers, [&](int i) {
    const Transcript g = DrawTranscript(setup, TrialSeed(options.seed, i));
    const auto log_factors = ClientLogFactorTables(g, protocol, setup.enums);
    double u = 0.0;
    for (const auto& ul : PosteriorMeanScores(setup.enums, log_factors)) u += ul[0];
    out.projection[i] = u * u;
    const double score = (log_marginal(enum_up, log_factors) -
                          log_marginal(enum_down, log_factors)) /
                         (2.0 * step);
    out.marginal[i] = score * score;
  });
  return out;
}

}  // namespace

MarginalGradientResult FisherViaMarginalGradient(
    const ModelFamily& model, const Eigen::VectorXd& theta,
    std::span<const ClientSpec> clients, const Protocol& protocol,
    const MonteCarloOptions& options, double step) {
  const PairedMarginalTrials trials =
      RunMarginalTrials(model, theta, clients, protocol, options, step);
  MarginalGradientResult result;
  result.estimate = Summarize(trials.marginal, FisherMethod::kMonteCarlo);
  result.joint_enumeration = trials.joint_enumeration;
  result.cancellation_warning = step < 1e-6;
  return result;
}

OracleAgreementReport CheckOracleAgreement(const ModelFamily& model,
                                           const Eigen::VectorXd& theta,
                                           std::span<const ClientSpec> clients,
                                           const Protocol& protocol,
                                           const MonteCarloOptions& options,
                                           double step) {
  const PairedMarginalTrials trials =
      RunMarginalTrials(model, theta, clients, protocol, options, step);
  std::vector<double> diff(trials.projection.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = trials.projection[i] - trials.marginal[i];
  }
  OracleAgreementReport report;
  report.projection = SummarizeSamples<double>(trials.projection).mean;
  report.marginal = SummarizeSamples<double>(trials.marginal).mean;
  const auto d = SummarizeSamples<double>(diff);
  report.difference = d.mean;
  report.difference_std_error = d.std_error;
  report.tolerance = kSeMultiplier * d.std_error + 1e-3;
  report.passed = std::abs(report.difference) <= report.tolerance;
  return report;
}

}  // namespace fedvt
