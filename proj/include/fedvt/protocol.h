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

// Public-transcript interactive federated protocols. In every round the
// server derives instructions from the public history, each active client
// applies its local mechanism to (local data, public history, instruction),
// and the resulting messages are appended to the history. Inactive clients
// emit the null message and are charged nothing.

#ifndef FEDVT_PROTOCOL_H_
#define FEDVT_PROTOCOL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fedvt/models.h"
#include "fedvt/privacy.h"
#include "fedvt/rng.h"

namespace fedvt {

struct ClientSpec {
  int id = 1;  // 1-based client index l
  int n = 1;
  ZcdpBudget rho_budget;
};

// Throws kInvalidParameter unless ids are 1..m in order and every n >= 1.
void ValidateClients(std::span<const ClientSpec> clients);

struct Message {
  bool is_null = true;
  Eigen::VectorXd payload;

  static Message Null() { return {}; }
  static Message Of(Eigen::VectorXd payload) {
    return {false, std::move(payload)};
  }
  friend bool operator==(const Message& a, const Message& b) {
    return a.is_null == b.is_null && a.payload.size() == b.payload.size() &&
           a.payload == b.payload;
  }
};

// One public transmission index t. All vectors are indexed by client
// position (id - 1).
struct Round {
  int t = 1;
  std::vector<Eigen::VectorXd> instructions;
  std::vector<Message> messages;
  std::vector<double> charged;  // rho_{l,t}
  std::vector<bool> active;
};

struct Transcript {
  int num_clients = 0;
  Eigen::VectorXd initial_randomness;  // G_0 = R_0
  std::vector<Round> rounds;
};

bool operator==(const Transcript& a, const Transcript& b);

// The public history strictly before some round.
struct PublicHistory {
  const Eigen::VectorXd& initial_randomness;
  std::span<const Round> rounds;
};

PublicHistory HistoryBefore(const Transcript& transcript, int t);

class LocalMechanism {
 public:
  virtual ~LocalMechanism() = default;

  virtual std::string Name() const = 0;
  // Declared zCDP charge of one invocation, rho_{l,t}.
  virtual ZcdpBudget RoundRho() const = 0;

  virtual Message Evaluate(const Dataset& local, const PublicHistory& history,
                           const Eigen::VectorXd& instruction,
                           StreamRng& rng) const = 0;

  // log q(message | local, history, instruction) with respect to the
  // mechanism's base measure (Lebesgue for Gaussian payloads, counting for
  // deterministic ones). -infinity for impossible messages, std::nullopt
  // when the mechanism has no density.
  virtual std::optional<double> LogMessageDensity(
      const Message& /*message*/, const Dataset& /*local*/,
      const PublicHistory& /*history*/,
      const Eigen::VectorXd& /*instruction*/) const {
    return std::nullopt;
  }

  // Output law for a fixed history, used for zCDP audits.
  virtual std::optional<OutputLaw> OutputLawFor(
      const Dataset& /*local*/, const PublicHistory& /*history*/,
      const Eigen::VectorXd& /*instruction*/) const {
    return std::nullopt;
  }
};

using MechanismPtr = std::shared_ptr<const LocalMechanism>;

class ServerPolicy {
 public:
  virtual ~ServerPolicy() = default;
  // Per-client instructions for round t. Must depend on the public history
  // only.
  virtual std::vector<Eigen::VectorXd> NextInstructions(
      const PublicHistory& history, int t, int num_clients) const = 0;
};

// Sends empty instructions every round.
class SilentPolicy final : public ServerPolicy {
 public:
  std::vector<Eigen::VectorXd> NextInstructions(const PublicHistory&, int,
                                                int num_clients) const override {
    return std::vector<Eigen::VectorXd>(num_clients);
  }
};

enum class ScheduleKind { kOnePass, kRoundwise, kSequential };

std::string_view ScheduleKindName(ScheduleKind kind);

struct Schedule {
  ScheduleKind kind = ScheduleKind::kRoundwise;
  int rounds = 0;
  std::vector<int> active;  // a_t (1-based); used by one-pass and sequential

  static Schedule OnePass(int num_clients);
  static Schedule Roundwise(int rounds);
  static Schedule Sequential(std::vector<int> active_clients);

  // Active client ids at transmission t (1-based).
  std::vector<int> ActiveClients(int t, int num_clients) const;
};

// mechanisms[t - 1][l - 1]; entries for inactive clients must be null.
struct Protocol {
  Schedule schedule;
  std::vector<std::vector<MechanismPtr>> mechanisms;
  std::shared_ptr<const ServerPolicy> policy;
  // Dimension of the N(0, I) public randomness R_0; 0 for none.
  int public_randomness_dim = 0;
};

// Sum over rounds of each client's declared round budgets.
BudgetVector DeclaredCharges(const Protocol& protocol, int num_clients);

// Schedule/mechanism consistency and the static budget check
// sum_t rho_{l,t} <= rho_l. Throws kScheduleMismatch or kBudgetExceeded
// (naming the client and the round where the budget is first exceeded).
void ValidateProtocol(const Protocol& protocol,
                      std::span<const ClientSpec> clients);

struct RunOptions {
  // Mixed into client l's private stream keys; used to check that one
  // client's randomness never leaks into another's messages.
  std::vector<uint64_t> client_stream_salt;
};

// n_l samples per client from P_theta, streams keyed on (seed, l).
std::vector<Dataset> SampleLocalData(const ModelFamily& model,
                                     const Eigen::VectorXd& theta,
                                     std::span<const ClientSpec> clients,
                                     uint64_t seed);

Transcript ExecuteProtocol(std::span<const Dataset> local_data,
                           std::span<const ClientSpec> clients,
                           const Protocol& protocol, uint64_t seed,
                           const RunOptions& options = {});

Transcript RunProtocol(const ModelFamily& model, const Eigen::VectorXd& theta,
                       std::span<const ClientSpec> clients,
                       const Protocol& protocol, uint64_t seed,
                       const RunOptions& options = {});

// Throws kInvalidTranscript when the round structure is inconsistent or an
// inactive client carries a message or a nonzero charge.
void ValidateTranscript(const Transcript& transcript);

// Per-client sum of charged round budgets.
BudgetVector Account(const Transcript& transcript);

// Appends b's transmissions after a's (renumbered). R_0 is taken from a.
Transcript ConcatenateTranscripts(const Transcript& a, const Transcript& b);

// log nu_0(r_0) for the standard normal public randomness.
double LogPublicRandomnessDensity(const Transcript& transcript);

// log L_l(g; x) = sum_t log q_{t,l}(g_t^(l) | x, g_{<t}) over the rounds in
// which client `client_index` (0-based) is active.
double ClientLogFactor(const Transcript& transcript, int client_index,
                       const Dataset& local, const Protocol& protocol);

struct TranscriptDensity {
  double log_joint = 0.0;
  double joint = 0.0;
  // K_l(g | x^(l)); nu_0 is absorbed into the first factor.
  std::vector<double> log_client_factors;
  std::vector<double> client_factors;
};

// K(g | x) = nu_0(r_0) prod_t prod_l q_{t,l}, computed directly from the
// round-by-round message densities. Throws kDensityUnavailable if any
// active mechanism has no density.
TranscriptDensity ComputeTranscriptDensity(const Transcript& transcript,
                                           std::span<const Dataset> local_data,
                                           const Protocol& protocol);

// Line-delimited log, one record per (t, l) transmission:
//   t  l  rho  null  active  payload  instruction
// Decimal floats use shortest round-trip formatting, so Parse(Format(x))
// is bit-identical to x.
std::string FormatTranscriptLog(const Transcript& transcript);
Transcript ParseTranscriptLog(const std::string& text);

}  // namespace fedvt

#endif  // FEDVT_PROTOCOL_H_
