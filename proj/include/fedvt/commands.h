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

#ifndef FEDVT_COMMANDS_H_
#define FEDVT_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedvt/bounds.h"
#include "fedvt/estimators.h"
#include "fedvt/protocol.h"
#include "fedvt/scenario.h"

namespace fedvt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitClaimFailed = 1;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitEnumerationCap = 3;
inline constexpr int kExitBudgetMismatch = 4;

int ExitCodeFor(ErrorCode code);

enum class OutputFormat { kCsv, kJson, kBoth };

OutputFormat ParseOutputFormat(std::string_view name);

struct CommandOptions {
  std::string config_path;
  // Used instead of reading config_path when nonempty.
  std::string config_text;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<BoundVariant> variant;
  std::string out_dir = "fedvt_out";
  OutputFormat format = OutputFormat::kBoth;
  int workers = 0;
};

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> outputs;
  std::string message;
};

// bound, verify, risk, simulate or audit. Never throws for configuration or
// runtime errors; they are mapped to exit codes.
CommandResult RunCommand(std::string_view command, const CommandOptions& options);

// Building blocks shared by the commands and the tests.

BoundReport ScenarioBound(const Scenario& scenario);

// Gaussian-on-sum (one_pass, roundwise) or the adaptive two-round mean
// protocol for Bernoulli and Gaussian mean scenarios, with the scenario's
// noise multiplier applied.
Protocol BuildScenarioProtocol(const Scenario& scenario,
                               std::span<const ClientSpec> clients);

// Replaces every Gaussian mechanism by one whose noise is calibrated for
// multiplier * rho while still declaring rho.
Protocol WithNoiseMultiplier(const Protocol& protocol, int num_clients,
                             double multiplier);

struct VerificationRecord {
  std::string instance;
  std::string claim;
  double estimate = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  int trials = 0;
  bool escalated = false;
  bool passed = false;
};

std::vector<VerificationRecord> VerifyScenario(const Scenario& scenario,
                                               int workers);

// Audits every active mechanism of the scenario protocol on adjacent
// datasets (enumerated for Bernoulli, extremal otherwise).
std::vector<VerificationRecord> AuditScenario(const Scenario& scenario);

struct RiskRecord {
  RiskReport report;
  bool certified = false;
};

std::vector<RiskRecord> RiskForScenario(const Scenario& scenario, int workers);

}  // namespace fedvt

#endif  // FEDVT_COMMANDS_H_
