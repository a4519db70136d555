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

#ifndef FEDVT_SCENARIO_H_
#define FEDVT_SCENARIO_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedvt/bounds.h"
#include "fedvt/estimators.h"
#include "fedvt/models.h"
#include "fedvt/priors.h"
#include "fedvt/protocol.h"

namespace fedvt {

inline constexpr int kScenarioSchemaVersion = 1;

enum class ModelKind { kGaussianMean, kBernoulli, kLinearRegression, kNonparametric };

std::string_view ModelKindName(ModelKind kind);

// One client line of a scenario; `count` replicates it. Exactly one of rho
// and epsilon is set.
struct ClientEntry {
  int n = 1;
  std::optional<double> rho;
  std::optional<double> epsilon;
  int count = 1;

  friend bool operator==(const ClientEntry&, const ClientEntry&) = default;
};

struct Scenario {
  std::string name = "scenario";

  ModelKind model = ModelKind::kGaussianMean;
  int d = 1;
  double sigma = 1.0;
  // Linear regression covariance; empty means the identity.
  std::vector<std::vector<double>> design;
  // Nonparametric calculator.
  double alpha = 1.0;
  double smooth_radius = 1.0;
  std::int64_t p_max = kDefaultNonparamPMax;
  // Fixed parameter for simulate; empty draws theta from the prior.
  std::vector<double> theta;

  double prior_radius = 1.0;
  std::vector<ClientEntry> clients;

  // one_pass, roundwise or adaptive_two_round.
  std::string schedule = "one_pass";
  int rounds = 1;
  // gaussian or randomized_response.
  std::string mechanism = "gaussian";
  // Noise is calibrated for multiplier * rho while rho is declared. Values
  // above 1 inject an over-budget mechanism.
  double noise_rho_multiplier = 1.0;

  std::vector<std::string> estimators;

  // Verification grid over Bernoulli parameters.
  std::vector<double> verify_thetas;
  std::vector<std::string> claims;

  int trials = 10000;
  std::uint64_t seed = 0;
  BoundVariant variant = BoundVariant::kExact;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Scenario files hold either one scenario object or {"scenarios": [...]}.
// Parse errors throw kInvalidParameter naming the offending field.
std::vector<Scenario> ParseScenarioFile(std::string_view text);
Scenario ParseScenario(std::string_view json_text);
std::string SerializeScenario(const Scenario& scenario);
std::string SerializeScenarios(const std::vector<Scenario>& scenarios);

// Field-level checks of module preconditions.
void ValidateScenario(const Scenario& scenario);

struct ResolvedClients {
  std::vector<ClientSpec> clients;
  // Per client: true when rho came from epsilon^2 / 2.
  std::vector<bool> converted;
  bool any_converted = false;
};

ResolvedClients ResolveClients(const Scenario& scenario);

std::unique_ptr<ModelFamily> MakeScenarioModel(const Scenario& scenario);
LinRegDesign ScenarioDesign(const Scenario& scenario);
ProductPrior MakeScenarioPrior(const Scenario& scenario);
EstimatorContext MakeEstimatorContext(const Scenario& scenario);

// FNV-1a 64-bit hash of the canonical serialization.
std::uint64_t ScenarioHash(const Scenario& scenario);
std::uint64_t Fnv1a64(std::string_view bytes);

}  // namespace fedvt

#endif  // FEDVT_SCENARIO_H_
