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

#include "fedvt/scenario.h"

#include <cmath>
#include <set>
#include <utility>

#include "json.hpp"

namespace fedvt {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kInvalidParameter, field + ": " + what);
}

void RejectUnknown(const json& obj, const std::string& path,
                   std::initializer_list<const char*> known) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) Fail(path + key, "unknown field");
  }
}

const json* Find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double GetNumber(const json& obj, const std::string& path, const char* key,
                 double fallback) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) Fail(path + key, "expected a number");
  return v->get<double>();
}

std::int64_t GetInteger(const json& obj, const std::string& path,
                        const char* key, std::int64_t fallback) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) Fail(path + key, "expected an integer");
  return v->get<std::int64_t>();
}

std::string GetString(const json& obj, const std::string& path,
                      const char* key, const std::string& fallback) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) Fail(path + key, "expected a string");
  return v->get<std::string>();
}

std::vector<double> GetNumbers(const json& obj, const std::string& path,
                               const char* key) {
  const json* v = Find(obj, key);
  if (!v) return {};
  if (!v->is_array()) Fail(path + key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number()) {
      Fail(path + key + "[" + std::to_string(i) + "]", "expected a number");
    }
    out.push_back((*v)[i].get<double>());
  }
  return out;
}

std::vector<std::string> GetStrings(const json& obj, const std::string& path,
                                    const char* key) {
  const json* v = Find(obj, key);
  if (!v) return {};
  if (!v->is_array()) Fail(path + key, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_string()) {
      Fail(path + key + "[" + std::to_string(i) + "]", "expected a string");
    }
    out.push_back((*v)[i].get<std::string>());
  }
  return out;
}

const json& GetObject(const json& obj, const std::string& path, const char* key) {
  static const json kEmpty = json::object();
  const json* v = Find(obj, key);
  if (!v) return kEmpty;
  if (!v->is_object()) Fail(path + key, "expected an object");
  return *v;
}

ModelKind ParseModelKind(const std::string& name, const std::string& field) {
  for (ModelKind k : {ModelKind::kGaussianMean, ModelKind::kBernoulli,
                      ModelKind::kLinearRegression, ModelKind::kNonparametric}) {
    if (ModelKindName(k) == name) return k;
  }
  Fail(field, "unknown family '" + name + "'");
}

Scenario FromJson(const json& j, const std::string& path) {
  if (!j.is_object()) Fail(path.empty() ? "scenario" : path, "expected an object");
  RejectUnknown(j, path,
                {"schema_version", "name", "model", "prior", "clients", "schedule",
                 "mechanism", "estimators", "verify", "trials", "seed", "variant"});
  const std::int64_t version =
      GetInteger(j, path, "schema_version", kScenarioSchemaVersion);
  if (version != kScenarioSchemaVersion) {
    Fail(path + "schema_version", "unsupported version " + std::to_string(version));
  }
  Scenario s;
  s.name = GetString(j, path, "name", s.name);

  const std::string mp = path + "model.";
  const json& model = GetObject(j, path, "model");
  RejectUnknown(model, mp,
                {"family", "d", "sigma", "design", "alpha", "R", "p_max", "theta"});
  s.model = ParseModelKind(GetString(model, mp, "family", "gaussian_mean"),
                           mp + "family");
  s.d = static_cast<int>(GetInteger(model, mp, "d", s.d));
  s.sigma = GetNumber(model, mp, "sigma", s.sigma);
  if (const json* design = Find(model, "design")) {
    if (!design->is_array()) Fail(mp + "design", "expected a matrix");
    for (std::size_t r = 0; r < design->size(); ++r) {
      const std::string rp = mp + "design[" + std::to_string(r) + "]";
      if (!(*design)[r].is_array()) Fail(rp, "expected a row");
      std::vector<double> row;
      for (const auto& v : (*design)[r]) {
        if (!v.is_number()) Fail(rp, "expected numbers");
        row.push_back(v.get<double>());
      }
      s.design.push_back(std::move(row));
    }
  }
  s.alpha = GetNumber(model, mp, "alpha", s.alpha);
  s.smooth_radius = GetNumber(model, mp, "R", s.smooth_radius);
  s.p_max = GetInteger(model, mp, "p_max", s.p_max);
  s.theta = GetNumbers(model, mp, "theta");

  const json& prior = GetObject(j, path, "prior");
  RejectUnknown(prior, path + "prior.", {"radius"});
  s.prior_radius = GetNumber(prior, path + "prior.", "radius", s.prior_radius);

  if (const json* clients = Find(j, "clients")) {
    if (!clients->is_array()) Fail(path + "clients", "expected an array");
    for (std::size_t i = 0; i < clients->size(); ++i) {
      const std::string cp = path + "clients[" + std::to_string(i) + "].";
      const json& c = (*clients)[i];
      if (!c.is_object()) Fail(cp, "expected an object");
      RejectUnknown(c, cp, {"n", "rho", "epsilon", "count"});
      ClientEntry e;
      if (!Find(c, "n")) Fail(cp + "n", "required");
      e.n = static_cast<int>(GetInteger(c, cp, "n", 1));
      if (Find(c, "rho")) e.rho = GetNumber(c, cp, "rho", 0.0);
      if (Find(c, "epsilon")) e.epsilon = GetNumber(c, cp, "epsilon", 0.0);
      e.count = static_cast<int>(GetInteger(c, cp, "count", 1));
      s.clients.push_back(e);
    }
  }

  const json& schedule = GetObject(j, path, "schedule");
  RejectUnknown(schedule, path + "schedule.", {"kind", "rounds"});
  s.schedule = GetString(schedule, path + "schedule.", "kind", s.schedule);
  s.rounds = static_cast<int>(GetInteger(schedule, path + "schedule.", "rounds",
                                         s.schedule == "adaptive_two_round" ? 2 : 1));

  const json& mechanism = GetObject(j, path, "mechanism");
  RejectUnknown(mechanism, path + "mechanism.", {"kind", "noise_rho_multiplier"});
  s.mechanism = GetString(mechanism, path + "mechanism.", "kind", s.mechanism);
  s.noise_rho_multiplier = GetNumber(mechanism, path + "mechanism.",
                                     "noise_rho_multiplier", s.noise_rho_multiplier);

  s.estimators = GetStrings(j, path, "estimators");

  const json& verify = GetObject(j, path, "verify");
  RejectUnknown(verify, path + "verify.", {"thetas", "claims"});
  s.verify_thetas = GetNumbers(verify, path + "verify.", "thetas");
  s.claims = GetStrings(verify, path + "verify.", "claims");

  s.trials = static_cast<int>(GetInteger(j, path, "trials", s.trials));
  const json* seed = Find(j, "seed");
  if (seed) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && *seed >= 0)) {
      Fail(path + "seed", "expected a nonnegative integer");
    }
    s.seed = seed->get<std::uint64_t>();
  }
  const std::string variant = GetString(j, path, "variant", "exact");
  try {
    s.variant = ParseBoundVariant(variant);
  } catch (const Error&) {
    Fail(path + "variant", "expected exact or rho-linear");
  }
  return s;
}

json ToJson(const Scenario& s) {
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = s.name;
  json model;
  model["family"] = std::string(ModelKindName(s.model));
  model["d"] = s.d;
  model["sigma"] = s.sigma;
  model["design"] = s.design;
  model["alpha"] = s.alpha;
  model["R"] = s.smooth_radius;
  model["p_max"] = s.p_max;
  model["theta"] = s.theta;
  j["model"] = model;
  j["prior"] = {{"radius", s.prior_radius}};
  json clients = json::array();
  for (const ClientEntry& c : s.clients) {
    json e{{"n", c.n}, {"count", c.count}};
    if (c.rho) e["rho"] = *c.rho;
    if (c.epsilon) e["epsilon"] = *c.epsilon;
    clients.push_back(e);
  }
  j["clients"] = clients;
  j["schedule"] = {{"kind", s.schedule}, {"rounds", s.rounds}};
  j["mechanism"] = {{"kind", s.mechanism},
                    {"noise_rho_multiplier", s.noise_rho_multiplier}};
  j["estimators"] = s.estimators;
  j["verify"] = {{"thetas", s.verify_thetas}, {"claims", s.claims}};
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["variant"] = std::string(BoundVariantName(s.variant));
  return j;
}

json ParseJson(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidParameter, std::string("config: ") + e.what());
  }
}

const std::set<std::string>& KnownClaims() {
  static const std::set<std::string> claims = {
      "single_client_contraction", "transcript_contraction", "decomposition",
      "oracle_agreement", "product_form", "accounting_audit"};
  return claims;
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGaussianMean:
      return "gaussian_mean";
    case ModelKind::kBernoulli:
      return "bernoulli";
    case ModelKind::kLinearRegression:
      return "linear_regression";
    case ModelKind::kNonparametric:
      return "nonparametric";
  }
  return "unknown";
}

std::vector<Scenario> ParseScenarioFile(std::string_view text) {
  const json j = ParseJson(text);
  std::vector<Scenario> out;
  if (j.is_object() && j.contains("scenarios")) {
    for (const auto& [key, value] : j.items()) {
      if (key != "scenarios" && key != "schema_version") Fail(key, "unknown field");
    }
    const json& list = j["scenarios"];
    if (!list.is_array()) Fail("scenarios", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      out.push_back(FromJson(list[i], "scenarios[" + std::to_string(i) + "]."));
    }
    return out;
  }
  out.push_back(FromJson(j, ""));
  return out;
}

Scenario ParseScenario(std::string_view json_text) {
  return FromJson(ParseJson(json_text), "");
}

std::string SerializeScenario(const Scenario& scenario) {
  return ToJson(scenario).dump(2);
}

std::string SerializeScenarios(const std::vector<Scenario>& scenarios) {
  json list = json::array();
  for (const Scenario& s : scenarios) list.push_back(ToJson(s));
  return json{{"schema_version", kScenarioSchemaVersion}, {"scenarios", list}}.dump(2);
}

void ValidateScenario(const Scenario& s) {
  if (s.d < 1) Fail("model.d", "must be >= 1");
  if (!(s.sigma > 0.0) || !std::isfinite(s.sigma)) Fail("model.sigma", "must be > 0");
  if (!(s.prior_radius > 0.0) || !std::isfinite(s.prior_radius)) {
    Fail("prior.radius", "must be > 0");
  }
  if (s.trials < 1) Fail("trials", "must be >= 1");
  if (s.model == ModelKind::kNonparametric) {
    if (!(s.alpha > 0.0)) Fail("model.alpha", "must be > 0");
    if (!(s.smooth_radius > 0.0)) Fail("model.R", "must be > 0");
    if (s.p_max < 1) Fail("model.p_max", "must be >= 1");
  }
  if (s.model == ModelKind::kBernoulli && s.d != 1) Fail("model.d", "bernoulli has d = 1");
  if (!s.design.empty()) {
    if (s.model != ModelKind::kLinearRegression) {
      Fail("model.design", "only linear_regression takes a design");
    }
    if (static_cast<int>(s.design.size()) != s.d) Fail("model.design", "must be d x d");
    for (const auto& row : s.design) {
      if (static_cast<int>(row.size()) != s.d) Fail("model.design", "must be d x d");
    }
    try {
      ScenarioDesign(s);
    } catch (const Error& e) {
      Fail("model.design", e.what());
    }
  }
  if (s.clients.empty()) Fail("clients", "need at least one client");
  for (std::size_t i = 0; i < s.clients.size(); ++i) {
    const std::string cp = "clients[" + std::to_string(i) + "].";
    const ClientEntry& c = s.clients[i];
    if (c.n < 1) Fail(cp + "n", "must be >= 1");
    if (c.count < 1) Fail(cp + "count", "must be >= 1");
    if (c.rho.has_value() == c.epsilon.has_value()) {
      Fail(cp + "rho", "give exactly one of rho and epsilon");
    }
    if (c.rho && !(*c.rho >= 0.0 && std::isfinite(*c.rho))) {
      Fail(cp + "rho", "must be finite and >= 0");
    }
    if (c.epsilon && !(*c.epsilon >= 0.0 && std::isfinite(*c.epsilon))) {
      Fail(cp + "epsilon", "must be finite and >= 0");
    }
  }
  if (s.schedule != "one_pass" && s.schedule != "roundwise" &&
      s.schedule != "adaptive_two_round") {
    Fail("schedule.kind", "expected one_pass, roundwise or adaptive_two_round");
  }
  if (s.rounds < 1) Fail("schedule.rounds", "must be >= 1");
  if (s.schedule == "adaptive_two_round" && s.rounds != 2) {
    Fail("schedule.rounds", "adaptive_two_round has 2 rounds");
  }
  if (s.mechanism != "gaussian" && s.mechanism != "randomized_response") {
    Fail("mechanism.kind", "expected gaussian or randomized_response");
  }
  if (!(s.noise_rho_multiplier > 0.0) || !std::isfinite(s.noise_rho_multiplier)) {
    Fail("mechanism.noise_rho_multiplier", "must be > 0");
  }
  for (std::size_t i = 0; i < s.estimators.size(); ++i) {
    try {
      ParseEstimatorKind(s.estimators[i]);
    } catch (const Error&) {
      Fail("estimators[" + std::to_string(i) + "]", "unknown estimator");
    }
  }
  for (std::size_t i = 0; i < s.claims.size(); ++i) {
    if (!KnownClaims().count(s.claims[i])) {
      Fail("verify.claims[" + std::to_string(i) + "]", "unknown claim");
    }
  }
  for (std::size_t i = 0; i < s.verify_thetas.size(); ++i) {
    const double t = s.verify_thetas[i];
    if (!(t > 0.0 && t < 1.0)) {
      Fail("verify.thetas[" + std::to_string(i) + "]", "must lie in (0, 1)");
    }
  }
  if (!s.theta.empty() && static_cast<int>(s.theta.size()) != s.d) {
    Fail("model.theta", "must have d entries");
  }
}

ResolvedClients ResolveClients(const Scenario& scenario) {
  ResolvedClients out;
  int id = 1;
  for (const ClientEntry& e : scenario.clients) {
    for (int k = 0; k < e.count; ++k) {
      const bool converted = e.epsilon.has_value();
      const ZcdpBudget rho =
          converted ? PureDpToZcdp(*e.epsilon) : ZcdpBudget(e.rho.value_or(0.0));
      out.clients.push_back(ClientSpec{id++, e.n, rho});
      out.converted.push_back(converted);
      out.any_converted = out.any_converted || converted;
    }
  }
  return out;
}

LinRegDesign ScenarioDesign(const Scenario& scenario) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(scenario.d, scenario.d);
  for (std::size_t r = 0; r < scenario.design.size(); ++r) {
    for (std::size_t c = 0; c < scenario.design[r].size(); ++c) {
      cov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          scenario.design[r][c];
    }
  }
  return LinRegDesign(cov);
}

std::unique_ptr<ModelFamily> MakeScenarioModel(const Scenario& scenario) {
  switch (scenario.model) {
    case ModelKind::kGaussianMean:
      return MakeGaussianMeanFamily(scenario.d, scenario.sigma);
    case ModelKind::kBernoulli:
      return MakeBernoulliFamily();
    case ModelKind::kLinearRegression:
      return MakeLinearRegressionFamily(ScenarioDesign(scenario), scenario.sigma);
    case ModelKind::kNonparametric:
      break;
  }
  throw Error(ErrorCode::kUnsupported, "nonparametric scenarios have no sampler");
}

ProductPrior MakeScenarioPrior(const Scenario& scenario) {
  return ProductPrior::Isotropic(scenario.d, scenario.prior_radius);
}

EstimatorContext MakeEstimatorContext(const Scenario& scenario) {
  EstimatorContext ctx;
  ctx.dim = scenario.d;
  ctx.sigma = scenario.sigma;
  ctx.prior_radius = scenario.prior_radius;
  if (scenario.model == ModelKind::kLinearRegression) {
    ctx.design_covariance = ScenarioDesign(scenario).covariance();
  }
  return ctx;
}

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ScenarioHash(const Scenario& scenario) {
  return Fnv1a64(ToJson(scenario).dump());
}

}  // namespace fedvt
