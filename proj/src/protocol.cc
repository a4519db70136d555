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

#include "fedvt/protocol.h"

#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <system_error>
#include <utility>

namespace fedvt {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Relative slack for the static budget check, so that budgets split into
// rounds and summed back do not trip on the last ulp.
constexpr double kBudgetSlack = 1e-12;

const std::shared_ptr<const ServerPolicy>& DefaultPolicy() {
  static const std::shared_ptr<const ServerPolicy> policy =
      std::make_shared<SilentPolicy>();
  return policy;
}

std::string ClientName(int index) { return "client " + std::to_string(index + 1); }

}  // namespace

void ValidateClients(std::span<const ClientSpec> clients) {
  if (clients.empty()) {
    throw Error(ErrorCode::kInvalidParameter, "need at least one client");
  }
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].id != static_cast<int>(i) + 1) {
      throw Error(ErrorCode::kInvalidParameter,
                  "client ids must be 1..m in order");
    }
    if (clients[i].n < 1) {
      throw Error(ErrorCode::kInvalidParameter,
                  ClientName(static_cast<int>(i)) + " needs n >= 1");
    }
  }
}

bool operator==(const Transcript& a, const Transcript& b) {
  if (a.num_clients != b.num_clients || a.rounds.size() != b.rounds.size() ||
      a.initial_randomness.size() != b.initial_randomness.size() ||
      a.initial_randomness != b.initial_randomness) {
    return false;
  }
  for (std::size_t t = 0; t < a.rounds.size(); ++t) {
    const Round& ra = a.rounds[t];
    const Round& rb = b.rounds[t];
    if (ra.t != rb.t || ra.messages != rb.messages || ra.charged != rb.charged ||
        ra.active != rb.active || ra.instructions.size() != rb.instructions.size()) {
      return false;
    }
    for (std::size_t l = 0; l < ra.instructions.size(); ++l) {
      if (ra.instructions[l].size() != rb.instructions[l].size() ||
          ra.instructions[l] != rb.instructions[l]) {
        return false;
      }
    }
  }
  return true;
}

PublicHistory HistoryBefore(const Transcript& transcript, int t) {
  const std::size_t upto = static_cast<std::size_t>(std::max(0, t - 1));
  return PublicHistory{
      transcript.initial_randomness,
      std::span<const Round>(transcript.rounds.data(),
                             std::min(upto, transcript.rounds.size()))};
}

std::string_view ScheduleKindName(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kOnePass:
      return "one_pass";
    case ScheduleKind::kRoundwise:
      return "roundwise";
    case ScheduleKind::kSequential:
      return "sequential";
  }
  return "unknown";
}

Schedule Schedule::OnePass(int num_clients) {
  Schedule s;
  s.kind = ScheduleKind::kOnePass;
  s.rounds = num_clients;
  for (int l = 1; l <= num_clients; ++l) s.active.push_back(l);
  return s;
}

Schedule Schedule::Roundwise(int rounds) {
  Schedule s;
  s.kind = ScheduleKind::kRoundwise;
  s.rounds = rounds;
  return s;
}

Schedule Schedule::Sequential(std::vector<int> active_clients) {
  Schedule s;
  s.kind = ScheduleKind::kSequential;
  s.rounds = static_cast<int>(active_clients.size());
  s.active = std::move(active_clients);
  return s;
}

std::vector<int> Schedule::ActiveClients(int t, int num_clients) const {
  if (t < 1 || t > rounds) {
    throw Error(ErrorCode::kScheduleMismatch,
                "transmission " + std::to_string(t) + " outside the schedule");
  }
  if (kind == ScheduleKind::kRoundwise) {
    std::vector<int> all(num_clients);
    for (int l = 0; l < num_clients; ++l) all[l] = l + 1;
    return all;
  }
  if (static_cast<int>(active.size()) != rounds) {
    throw Error(ErrorCode::kScheduleMismatch,
                "sequential schedule needs one active client per transmission");
  }
  const int a = active[t - 1];
  if (a < 1 || a > num_clients) {
    throw Error(ErrorCode::kScheduleMismatch,
                "active client " + std::to_string(a) + " is not in [m]");
  }
  if (kind == ScheduleKind::kOnePass && a != t) {
    throw Error(ErrorCode::kScheduleMismatch,
                "one-pass schedules have a_t = t");
  }
  return {a};
}

BudgetVector DeclaredCharges(const Protocol& protocol, int num_clients) {
  std::vector<double> totals(num_clients, 0.0);
  for (const auto& round : protocol.mechanisms) {
    for (int l = 0; l < num_clients && l < static_cast<int>(round.size()); ++l) {
      if (round[l]) totals[l] += round[l]->RoundRho().rho();
    }
  }
  BudgetVector out;
  for (double total : totals) out.emplace_back(total);
  return out;
}

void ValidateProtocol(const Protocol& protocol,
                      std::span<const ClientSpec> clients) {
  ValidateClients(clients);
  const int m = static_cast<int>(clients.size());
  const Schedule& schedule = protocol.schedule;
  if (schedule.kind == ScheduleKind::kOnePass && schedule.rounds != m) {
    throw Error(ErrorCode::kScheduleMismatch,
                "one-pass schedules have exactly m transmissions");
  }
  if (static_cast<int>(protocol.mechanisms.size()) != schedule.rounds) {
    throw Error(ErrorCode::kScheduleMismatch,
                "mechanism table has " +
                    std::to_string(protocol.mechanisms.size()) +
                    " rounds, schedule has " + std::to_string(schedule.rounds));
  }
  if (protocol.public_randomness_dim < 0) {
    throw Error(ErrorCode::kInvalidParameter,
                "public randomness dimension must be >= 0");
  }
  std::vector<double> spent(m, 0.0);
  for (int t = 1; t <= schedule.rounds; ++t) {
    const auto& row = protocol.mechanisms[t - 1];
    if (static_cast<int>(row.size()) != m) {
      throw Error(ErrorCode::kScheduleMismatch,
                  "round " + std::to_string(t) + " lists " +
                      std::to_string(row.size()) + " mechanisms for " +
                      std::to_string(m) + " clients");
    }
    std::vector<bool> is_active(m, false);
    for (int a : schedule.ActiveClients(t, m)) is_active[a - 1] = true;
    for (int l = 0; l < m; ++l) {
      if (is_active[l] && !row[l]) {
        throw Error(ErrorCode::kScheduleMismatch,
                    "no mechanism for active " + ClientName(l) + " in round " +
                        std::to_string(t));
      }
      if (!is_active[l] && row[l]) {
        throw Error(ErrorCode::kScheduleMismatch,
                    "mechanism supplied for inactive " + ClientName(l) +
                        " in round " + std::to_string(t));
      }
      if (!row[l]) continue;
      spent[l] += row[l]->RoundRho().rho();
      const double budget = clients[l].rho_budget.rho();
      if (spent[l] > budget * (1.0 + kBudgetSlack)) {
        throw Error(ErrorCode::kBudgetExceeded,
                    ClientName(l) + " exceeds its budget " +
                        std::to_string(budget) + " in round " +
                        std::to_string(t) + " (cumulative charge " +
                        std::to_string(spent[l]) + ")");
      }
    }
  }
}

std::vector<Dataset> SampleLocalData(const ModelFamily& model,
                                     const Eigen::VectorXd& theta,
                                     std::span<const ClientSpec> clients,
                                     uint64_t seed) {
  model.ValidateParameter(theta);
  std::vector<Dataset> data;
  data.reserve(clients.size());
  for (std::size_t l = 0; l < clients.size(); ++l) {
    StreamRng rng(DeriveSeed(seed, {kDataStream, l + 1}));
    Dataset x(clients[l].n, model.ObservationDim());
    for (int i = 0; i < clients[l].n; ++i) {
      x.row(i) = model.Sample(theta, rng).transpose();
    }
    data.push_back(std::move(x));
  }
  return data;
}

Transcript ExecuteProtocol(std::span<const Dataset> local_data,
                           std::span<const ClientSpec> clients,
                           const Protocol& protocol, uint64_t seed,
                           const RunOptions& options) {
  ValidateProtocol(protocol, clients);
  const int m = static_cast<int>(clients.size());
  if (static_cast<int>(local_data.size()) != m) {
    throw Error(ErrorCode::kInvalidInput, "need one local dataset per client");
  }
  for (int l = 0; l < m; ++l) {
    if (local_data[l].rows() != clients[l].n) {
      throw Error(ErrorCode::kInvalidInput,
                  ClientName(l) + " dataset size does not match n");
    }
  }
  const auto& policy = protocol.policy ? protocol.policy : DefaultPolicy();

  Transcript transcript;
  transcript.num_clients = m;
  if (protocol.public_randomness_dim > 0) {
    StreamRng rng(DeriveSeed(seed, {kPublicRandomnessStream}));
    std::normal_distribution<double> normal;
    transcript.initial_randomness.resize(protocol.public_randomness_dim);
    for (auto& v : transcript.initial_randomness) v = normal(rng);
  }
  transcript.rounds.reserve(protocol.schedule.rounds);

  for (int t = 1; t <= protocol.schedule.rounds; ++t) {
    Round round;
    round.t = t;
    {
      const PublicHistory history = HistoryBefore(transcript, t);
      round.instructions = policy->NextInstructions(history, t, m);
      if (static_cast<int>(round.instructions.size()) != m) {
        throw Error(ErrorCode::kScheduleMismatch,
                    "server policy must instruct every client");
      }
      round.messages.assign(m, Message::Null());
      round.charged.assign(m, 0.0);
      round.active.assign(m, false);
      for (int a : protocol.schedule.ActiveClients(t, m)) round.active[a - 1] = true;
      for (int l = 0; l < m; ++l) {
        if (!round.active[l]) continue;
        const LocalMechanism& mechanism = *protocol.mechanisms[t - 1][l];
        const uint64_t salt = l < static_cast<int>(options.client_stream_salt.size())
                                  ? options.client_stream_salt[l]
                                  : 0;
        StreamRng rng(DeriveSeed(
            seed, {kMechanismStream, static_cast<uint64_t>(l + 1),
                   static_cast<uint64_t>(t), salt}));
        round.messages[l] =
            mechanism.Evaluate(local_data[l], history, round.instructions[l], rng);
        round.charged[l] = mechanism.RoundRho().rho();
      }
    }
    transcript.rounds.push_back(std::move(round));
  }
  return transcript;
}

Transcript RunProtocol(const ModelFamily& model, const Eigen::VectorXd& theta,
                       std::span<const ClientSpec> clients,
                       const Protocol& protocol, uint64_t seed,
                       const RunOptions& options) {
  const auto data = SampleLocalData(model, theta, clients, seed);
  return ExecuteProtocol(data, clients, protocol, seed, options);
}

void ValidateTranscript(const Transcript& transcript) {
  const int m = transcript.num_clients;
  if (m < 1) throw Error(ErrorCode::kInvalidTranscript, "no clients");
  for (std::size_t i = 0; i < transcript.rounds.size(); ++i) {
    const Round& round = transcript.rounds[i];
    const std::string where = "round " + std::to_string(i + 1);
    if (round.t != static_cast<int>(i) + 1) {
      throw Error(ErrorCode::kInvalidTranscript, where + " is out of order");
    }
    if (static_cast<int>(round.messages.size()) != m ||
        static_cast<int>(round.charged.size()) != m ||
        static_cast<int>(round.active.size()) != m ||
        static_cast<int>(round.instructions.size()) != m) {
      throw Error(ErrorCode::kInvalidTranscript,
                  where + " does not list every client");
    }
    for (int l = 0; l < m; ++l) {
      const double rho = round.charged[l];
      if (!(rho >= 0.0) || !std::isfinite(rho)) {
        throw Error(ErrorCode::kInvalidTranscript,
                    where + ": invalid charge for " + ClientName(l));
      }
      if (!round.active[l] && (rho != 0.0 || !round.messages[l].is_null)) {
        throw Error(ErrorCode::kInvalidTranscript,
                    where + ": inactive " + ClientName(l) +
                        " must send the null message at zero charge");
      }
    }
  }
}

BudgetVector Account(const Transcript& transcript) {
  ValidateTranscript(transcript);
  BudgetVector out;
  for (int l = 0; l < transcript.num_clients; ++l) {
    std::vector<double> per_round;
    per_round.reserve(transcript.rounds.size());
    for (const Round& round : transcript.rounds) per_round.push_back(round.charged[l]);
    out.push_back(ComposeRounds(std::span<const double>(per_round)));
  }
  return out;
}

Transcript ConcatenateTranscripts(const Transcript& a, const Transcript& b) {
  if (a.num_clients != b.num_clients) {
    throw Error(ErrorCode::kInvalidTranscript,
                "cannot concatenate transcripts with different client counts");
  }
  Transcript out = a;
  for (Round round : b.rounds) {
    round.t = static_cast<int>(out.rounds.size()) + 1;
    out.rounds.push_back(std::move(round));
  }
  return out;
}

double LogPublicRandomnessDensity(const Transcript& transcript) {
  const auto& r = transcript.initial_randomness;
  return -0.5 * r.squaredNorm() -
         0.5 * static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi);
}

double ClientLogFactor(const Transcript& transcript, int client_index,
                       const Dataset& local, const Protocol& protocol) {
  if (protocol.mechanisms.size() != transcript.rounds.size()) {
    throw Error(ErrorCode::kScheduleMismatch,
                "protocol and transcript have different round counts");
  }
  double out = 0.0;
  for (const Round& round : transcript.rounds) {
    if (!round.active[client_index]) continue;
    const auto& mechanism = protocol.mechanisms[round.t - 1][client_index];
    if (!mechanism) {
      throw Error(ErrorCode::kScheduleMismatch,
                  "transcript has an active client without a mechanism");
    }
    const auto log_q = mechanism->LogMessageDensity(
        round.messages[client_index], local, HistoryBefore(transcript, round.t),
        round.instructions[client_index]);
    if (!log_q) {
      throw Error(ErrorCode::kDensityUnavailable,
                  mechanism->Name() + " has no message density");
    }
    out += *log_q;
    if (out == kNegInf) return out;
  }
  return out;
}

TranscriptDensity ComputeTranscriptDensity(const Transcript& transcript,
                                           std::span<const Dataset> local_data,
                                           const Protocol& protocol) {
  ValidateTranscript(transcript);
  const int m = transcript.num_clients;
  if (static_cast<int>(local_data.size()) != m) {
    throw Error(ErrorCode::kInvalidInput, "need one local dataset per client");
  }
  TranscriptDensity out;
  out.log_client_factors.assign(m, 0.0);
  for (int l = 0; l < m; ++l) {
    out.log_client_factors[l] =
        ClientLogFactor(transcript, l, local_data[l], protocol);
  }
  out.log_client_factors[0] += LogPublicRandomnessDensity(transcript);
  // The joint is accumulated message by message, independently of the
  // per-client grouping above.
  double log_joint = LogPublicRandomnessDensity(transcript);
  for (const Round& round : transcript.rounds) {
    const PublicHistory history = HistoryBefore(transcript, round.t);
    for (int l = 0; l < m; ++l) {
      if (!round.active[l]) continue;
      const auto log_q = protocol.mechanisms[round.t - 1][l]->LogMessageDensity(
          round.messages[l], local_data[l], history, round.instructions[l]);
      if (!log_q) {
        throw Error(ErrorCode::kDensityUnavailable, "missing message density");
      }
      log_joint += *log_q;
    }
  }
  out.log_joint = log_joint;
  out.joint = std::exp(log_joint);
  for (double lf : out.log_client_factors) out.client_factors.push_back(std::exp(lf));
  return out;
}

namespace {

void AppendDouble(std::string& out, double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, result.ptr);
}

void AppendVector(std::string& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out.push_back(',');
    AppendDouble(out, v[i]);
  }
}

double ParseDouble(std::string_view s) {
  double v = 0.0;
  const auto result = std::from_chars(s.data(), s.data() + s.size(), v);
  if (result.ec != std::errc() || result.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInvalidTranscript,
                "bad number '" + std::string(s) + "'");
  }
  return v;
}

long ParseInt(std::string_view s) {
  long v = 0;
  const auto result = std::from_chars(s.data(), s.data() + s.size(), v);
  if (result.ec != std::errc() || result.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInvalidTranscript,
                "bad integer '" + std::string(s) + "'");
  }
  return v;
}

Eigen::VectorXd ParseVector(std::string_view s) {
  std::vector<double> values;
  if (!s.empty()) {
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = s.find(',', start);
      values.push_back(ParseDouble(s.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

constexpr std::string_view kLogMagic = "#fedvt-transcript";

}  // namespace

std::string FormatTranscriptLog(const Transcript& transcript) {
  ValidateTranscript(transcript);
  std::string out;
  out += kLogMagic;
  out += "\tversion=1\tclients=" + std::to_string(transcript.num_clients) +
         "\trounds=" + std::to_string(transcript.rounds.size()) + "\n";
  out += "R0\t";
  AppendVector(out, transcript.initial_randomness);
  out += "\n";
  for (const Round& round : transcript.rounds) {
    for (int l = 0; l < transcript.num_clients; ++l) {
      out += std::to_string(round.t) + "\t" + std::to_string(l + 1) + "\t";
      AppendDouble(out, round.charged[l]);
      out += round.messages[l].is_null ? "\t1\t" : "\t0\t";
      out += round.active[l] ? "1\t" : "0\t";
      AppendVector(out, round.messages[l].payload);
      out += "\t";
      AppendVector(out, round.instructions[l]);
      out += "\n";
    }
  }
  return out;
}

Transcript ParseTranscriptLog(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kLogMagic)) {
    throw Error(ErrorCode::kInvalidTranscript, "missing transcript header");
  }
  Transcript transcript;
  long rounds = -1;
  for (std::string_view field : SplitTabs(line)) {
    if (field.starts_with("clients=")) transcript.num_clients = ParseInt(field.substr(8));
    if (field.starts_with("rounds=")) rounds = ParseInt(field.substr(7));
    if (field.starts_with("version=") && field != "version=1") {
      throw Error(ErrorCode::kInvalidTranscript, "unsupported log version");
    }
  }
  if (transcript.num_clients < 1 || rounds < 0) {
    throw Error(ErrorCode::kInvalidTranscript, "header lacks clients/rounds");
  }
  if (!std::getline(in, line) || !line.starts_with("R0\t")) {
    throw Error(ErrorCode::kInvalidTranscript, "missing R0 record");
  }
  transcript.initial_randomness = ParseVector(std::string_view(line).substr(3));
  const int m = transcript.num_clients;
  transcript.rounds.resize(rounds);
  for (long t = 0; t < rounds; ++t) {
    Round& round = transcript.rounds[t];
    round.t = static_cast<int>(t + 1);
    round.instructions.resize(m);
    round.messages.resize(m);
    round.charged.resize(m);
    round.active.resize(m);
  }
  std::vector<int> seen(static_cast<std::size_t>(rounds) * m, 0);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 7) {
      throw Error(ErrorCode::kInvalidTranscript, "record needs 7 fields");
    }
    const long t = ParseInt(fields[0]);
    const long l = ParseInt(fields[1]);
    if (t < 1 || t > rounds || l < 1 || l > m) {
      throw Error(ErrorCode::kInvalidTranscript, "record index out of range");
    }
    if (seen[(t - 1) * m + (l - 1)]++) {
      throw Error(ErrorCode::kInvalidTranscript, "duplicate record");
    }
    Round& round = transcript.rounds[t - 1];
    round.charged[l - 1] = ParseDouble(fields[2]);
    round.messages[l - 1].is_null = fields[3] == "1";
    round.active[l - 1] = fields[4] == "1";
    round.messages[l - 1].payload = ParseVector(fields[5]);
    round.instructions[l - 1] = ParseVector(fields[6]);
  }
  for (int s : seen) {
    if (s != 1) throw Error(ErrorCode::kInvalidTranscript, "missing record");
  }
  ValidateTranscript(transcript);
  return transcript;
}

}  // namespace fedvt
