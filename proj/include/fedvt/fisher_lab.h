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

// Transcript Fisher information through the score projection identity
// I_G = E[E[S | G] E[S | G]^T], with the inner conditional expectation
// computed exactly by enumerating each client's local data and the outer
// expectation by Monte Carlo over transcripts. On top of that estimator sit
// numerical checks of the contraction inequalities, posterior client
// independence and the clientwise information decomposition.

#ifndef FEDVT_FISHER_LAB_H_
#define FEDVT_FISHER_LAB_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedvt/models.h"
#include "fedvt/protocol.h"
#include "fedvt/stats.h"

namespace fedvt {

struct FisherEstimate {
  double value = 0.0;  // trace of the information
  double std_error = 0.0;
  FisherMethod method = FisherMethod::kExactEnumeration;
  int trials = 0;
};

struct EnumerationOptions {
  // Per-client cap on |support|^{n_l}.
  std::size_t client_cap = std::size_t{1} << 20;
  // Joint configurations allowed for brute-force joint computations.
  std::size_t joint_cap = std::size_t{1} << 12;
};

// Every n-sample dataset over the family's discrete support, with its log
// probability under P_theta^n and its data score S(x) = sum_i s(x_i; theta).
struct ClientEnumeration {
  std::vector<Dataset> configs;
  Eigen::VectorXd log_prob;
  Eigen::MatrixXd scores;  // ParamDim x configs
};

// Throws kUnsupported for families without finite support and
// kEnumerationCapExceeded when |support|^n > cap.
ClientEnumeration EnumerateClientData(const ModelFamily& model,
                                      const Eigen::VectorXd& theta, int n,
                                      std::size_t cap);

// Per-client posterior tables p_theta(x^(l) | g), aligned with `configs`.
struct PosteriorTables {
  std::vector<ClientEnumeration> enumerations;
  std::vector<Eigen::VectorXd> probabilities;
};

PosteriorTables PosteriorOverData(const Transcript& transcript,
                                  const ModelFamily& model,
                                  const Eigen::VectorXd& theta,
                                  std::span<const ClientSpec> clients,
                                  const Protocol& protocol,
                                  const EnumerationOptions& options = {});

// Brute-force joint posterior over all clients' data, normalized jointly
// from the message-by-message transcript density, compared against (a) the
// product of the separately normalized client tables and (b) the product of
// the joint posterior's own marginals.
struct ProductFormCheck {
  double max_error_vs_factorized = 0.0;
  double max_error_vs_marginals = 0.0;
  std::size_t joint_configs = 0;
};

ProductFormCheck CheckPosteriorProductForm(
    const Transcript& transcript, const ModelFamily& model,
    const Eigen::VectorXd& theta, std::span<const ClientSpec> clients,
    const Protocol& protocol, const EnumerationOptions& options = {});

struct MonteCarloOptions {
  int trials = 10000;
  uint64_t seed = 0;
  // 0 picks std::thread::hardware_concurrency(). Results do not depend on
  // the worker count.
  int workers = 0;
  EnumerationOptions enumeration;
};

struct TranscriptFisherResult {
  FisherEstimate total;                    // Tr I_G
  std::vector<FisherEstimate> per_client;  // E ||U_l||^2
  Eigen::MatrixXd cross_mean;              // E <U_l, U_j>, zero diagonal
  Eigen::MatrixXd cross_std_error;
  // Per-trial ||sum_l U_l||^2 - sum_l ||U_l||^2.
  MeanWithError<double> decomposition_gap;
};

// Trial i draws data and a transcript with the seed
// DeriveSeed(seed, {kTrialStream, i}).
TranscriptFisherResult TranscriptFisher(const ModelFamily& model,
                                        const Eigen::VectorXd& theta,
                                        std::span<const ClientSpec> clients,
                                        const Protocol& protocol,
                                        const MonteCarloOptions& options);

inline constexpr double kSeMultiplier = 3.0;
inline constexpr int kEscalationFactor = 10;

struct ContractionReport {
  std::string claim;
  double estimate = 0.0;
  double std_error = 0.0;
  std::vector<double> client_privacy_bounds;  // (e^{2 rho_l} - 1) n_l^2 ||I||
  std::vector<double> client_sample_bounds;   // n_l Tr I
  // Single client: the privacy bound. Transcript: the clientwise min-sum.
  double bound = 0.0;
  // The clientwise min-sum, reported in both cases.
  double min_bound = 0.0;
  double slack = 0.0;  // bound - estimate
  int trials = 0;
  bool escalated = false;
  bool passed = false;
};

// Tr I_T <= (e^{2 rho} - 1) n^2 ||I_x||_op for a single-client protocol.
// rho is the protocol's declared charge. On a marginal failure the run is
// repeated once with kEscalationFactor times the trials and a fresh seed.
ContractionReport CheckSingleClientContraction(const ModelFamily& model,
                                               const Eigen::VectorXd& theta,
                                               const ClientSpec& client,
                                               const Protocol& protocol,
                                               const MonteCarloOptions& options,
                                               bool escalate = true);

// Tr I_G <= sum_l min((e^{2 rho_l} - 1) n_l^2 ||I_x||_op, n_l Tr I_x), with
// rho_l the declared per-client charges.
ContractionReport CheckTranscriptContraction(const ModelFamily& model,
                                             const Eigen::VectorXd& theta,
                                             std::span<const ClientSpec> clients,
                                             const Protocol& protocol,
                                             const MonteCarloOptions& options,
                                             bool escalate = true);

struct DecompositionReport {
  double total = 0.0;
  double total_std_error = 0.0;
  double client_sum = 0.0;
  double gap = 0.0;  // total - client_sum
  double gap_std_error = 0.0;
  Eigen::MatrixXd cross_mean;
  Eigen::MatrixXd cross_std_error;
  int trials = 0;
  bool escalated = false;
  bool passed = false;
};

// Tr I_G = sum_l E ||U_l||^2 and E <U_l, U_j> = 0 for l != j, each within
// kSeMultiplier standard errors (plus a 1e-12 absolute floor).
DecompositionReport CheckInformationDecomposition(
    const ModelFamily& model, const Eigen::VectorXd& theta,
    std::span<const ClientSpec> clients, const Protocol& protocol,
    const MonteCarloOptions& options, bool escalate = true);

inline constexpr double kMarginalGradientStep = 1e-4;

struct MarginalGradientResult {
  FisherEstimate estimate;
  bool joint_enumeration = false;  // false: clientwise factorized marginal
  bool cancellation_warning = false;
};

// Independent estimate of I_G(theta) for scalar theta: central finite
// differences of log p_theta(g), the transcript marginal obtained by summing
// the likelihood over enumerated data, averaged over transcripts drawn as in
// TranscriptFisher.
MarginalGradientResult FisherViaMarginalGradient(
    const ModelFamily& model, const Eigen::VectorXd& theta,
    std::span<const ClientSpec> clients, const Protocol& protocol,
    const MonteCarloOptions& options, double step = kMarginalGradientStep);

struct OracleAgreementReport {
  double projection = 0.0;
  double marginal = 0.0;
  double difference = 0.0;
  double difference_std_error = 0.0;  // paired, same transcripts
  double tolerance = 0.0;             // 3 SE + 1e-3
  bool passed = false;
};

OracleAgreementReport CheckOracleAgreement(const ModelFamily& model,
                                           const Eigen::VectorXd& theta,
                                           std::span<const ClientSpec> clients,
                                           const Protocol& protocol,
                                           const MonteCarloOptions& options,
                                           double step = kMarginalGradientStep);

}  // namespace fedvt

#endif  // FEDVT_FISHER_LAB_H_
