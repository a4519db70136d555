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

#include "fedvt/commands.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <sstream>
#include <utility>

#include "fedvt/fisher_lab.h"
#include "fedvt/mechanisms.h"
#include "fedvt/privacy.h"
#include "fedvt/reports.h"
#include "fedvt/rng.h"
#include "json.hpp"

namespace fedvt {
namespace {

using nlohmann::json;

constexpr double kProductFormTolerance = 1e-10;
constexpr int kProductFormTranscripts = 16;
// Offset that forces every clipping statistic onto its boundary.
constexpr double kExtremeOffset = 1e6;

double MeanClip(const Scenario& s) { return s.prior_radius + 6.0 * s.sigma; }

std::vector<std::string> DefaultClaims(int m) {
  std::vector<std::string> out;
  if (m == 1) out.push_back("single_client_contraction");
  out.push_back("transcript_contraction");
  if (m >= 2) {
    out.push_back("decomposition");
    out.push_back("product_form");
  }
  out.push_back("oracle_agreement");
  out.push_back("accounting_audit");
  return out;
}

std::vector<std::string> DefaultEstimators(ModelKind kind) {
  if (kind == ModelKind::kLinearRegression) return {"fed_linreg"};
  return {"nonprivate_mean", "fed_gaussian_mean", "fed_gaussian_mean_adaptive"};
}

Eigen::VectorXd FixedTheta(const Scenario& s) {
  if (s.theta.empty()) return Eigen::VectorXd::Constant(s.d, 0.5);
  return Eigen::Map<const Eigen::VectorXd>(s.theta.data(),
                                           static_cast<Eigen::Index>(s.theta.size()));
}

std::string Join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += ';';
    out += parts[i];
  }
  return out;
}

VerificationRecord FromContraction(const std::string& instance,
                                   const ContractionReport& r) {
  return {instance, r.claim,     r.estimate,  r.std_error,
          r.bound,  r.trials,    r.escalated, r.passed};
}

// Adjacent pairs used to audit a mechanism of client `l` in round `t`.
std::vector<AdjacentPair> AuditPairs(const Scenario& s, const ClientSpec& client,
                                     const Eigen::VectorXd& instruction) {
  const int n = client.n;
  if (s.model == ModelKind::kBernoulli) {
    const std::vector<Eigen::VectorXd> support = {Eigen::VectorXd::Zero(1),
                                                  Eigen::VectorXd::Ones(1)};
    return EnumerateAdjacentPairs(support, n);
  }
  const int d = s.d;
  if (s.model == ModelKind::kLinearRegression) {
    Dataset base = Dataset::Zero(n, d + 1);
    std::vector<AdjacentPair> pairs;
    Dataset a = base, b = base;
    a(0, 0) = kExtremeOffset;
    a(0, d) = kExtremeOffset;
    b(0, 0) = kExtremeOffset;
    b(0, d) = -kExtremeOffset;
    pairs.push_back({a, b});
    Dataset c = base;
    c(0, 0) = kExtremeOffset;
    pairs.push_back({c, base});
    if (d >= 2) {
      Dataset e = base;
      e(0, 1) = kExtremeOffset;
      pairs.push_back({c, e});
    }
    return pairs;
  }
  Eigen::VectorXd center = Eigen::VectorXd::Zero(d);
  if (instruction.size() == d) center = instruction;
  Dataset base = center.transpose().replicate(n, 1);
  Dataset a = base, b = base;
  a(0, 0) += kExtremeOffset;
  b(0, 0) -= kExtremeOffset;
  return {{a, b}};
}

std::vector<VerificationRecord> AuditProtocol(const Scenario& s,
                                              std::span<const ClientSpec> clients,
                                              const Protocol& protocol,
                                              const Transcript& history,
                                              const std::string& prefix) {
  std::vector<VerificationRecord> out;
  const auto grid = DefaultAuditGrid();
  for (int t = 1; t <= protocol.schedule.rounds; ++t) {
    for (std::size_t l = 0; l < clients.size(); ++l) {
      const MechanismPtr& mech = protocol.mechanisms[t - 1][l];
      if (!mech) continue;
      const Eigen::VectorXd& instruction = history.rounds[t - 1].instructions[l];
      const BoundLocalMechanism bound(mech, history, t, instruction);
      const auto pairs = AuditPairs(s, clients[l], instruction);
      const MechanismAudit audit =
          AuditMechanism(bound, pairs, mech->RoundRho(), grid);
      VerificationRecord rec;
      rec.instance = prefix + "client=" + std::to_string(l + 1) +
                     ",round=" + std::to_string(t);
      rec.claim = "accounting_audit";
      for (std::size_t k = 0; k < grid.size(); ++k) {
        rec.estimate = std::max(rec.estimate, audit.divergences[k] / grid[k]);
      }
      rec.bound = mech->RoundRho().rho();
      rec.std_error = audit.tolerance;
      rec.passed = audit.passed;
      out.push_back(rec);
    }
  }
  return out;
}

json RecordJson(const VerificationRecord& r) {
  return {{"instance", r.instance}, {"claim", r.claim},
          {"estimate", r.estimate}, {"std_error", r.std_error},
          {"bound", r.bound},       {"trials", r.trials},
          {"escalated", r.escalated}, {"passed", r.passed}};
}

json BoundJson(const BoundReport& b, const Scenario& s, const ResolvedClients& rc) {
  json clients = json::array();
  for (std::size_t l = 0; l < rc.clients.size(); ++l) {
    json c{{"n", rc.clients[l].n},
           {"rho", rc.clients[l].rho_budget.rho()},
           {"epsilon_converted", static_cast<bool>(rc.converted[l])}};
    if (l < b.contributions.size()) {
      c["contribution"] = b.contributions[l];
      c["branch"] = std::string(BranchName(b.branches[l]));
    }
    clients.push_back(c);
  }
  json j{{"scenario", s.name},
         {"kind", b.kind},
         {"variant", std::string(BoundVariantName(b.variant))},
         {"certified", b.certified},
         {"value", b.value},
         {"p", b.p},
         {"info_total", b.info_total},
         {"prior_trace", b.prior_trace},
         {"epsilon_converted", rc.any_converted},
         {"clients", clients}};
  if (b.harmonic_display) j["harmonic_display"] = *b.harmonic_display;
  if (b.p_star) {
    j["p_star"] = *b.p_star;
    j["boundary_warning"] = b.boundary_warning;
  }
  return j;
}

struct Output {
  std::string csv;
  json records;
};

class Session {
 public:
  Session(std::string command, const CommandOptions& options)
      : command_(std::move(command)), options_(options) {
    manifest_.command = command_;
    manifest_.started_at = UtcTimestamp();
  }

  void Emit(std::size_t index, const Scenario& s, const Output& out) {
    char idx[16];
    std::snprintf(idx, sizeof(idx), "%03zu", index);
    const std::string stem =
        (std::filesystem::path(options_.out_dir) / (command_ + "_" + idx + "_" + s.name))
            .string();
    if (options_.format != OutputFormat::kJson) {
      WriteFileAtomic(stem + ".csv", out.csv);
      result_.outputs.push_back(stem + ".csv");
    }
    if (options_.format != OutputFormat::kCsv) {
      json doc{{"schema_version", kReportSchemaVersion},
               {"command", command_},
               {"scenario", json::parse(SerializeScenario(s))},
               {"records", out.records}};
      WriteFileAtomic(stem + ".json", doc.dump(2) + "\n");
      result_.outputs.push_back(stem + ".json");
    }
  }

  void EmitRaw(const std::string& name, const std::string& contents) {
    const std::string path =
        (std::filesystem::path(options_.out_dir) / name).string();
    WriteFileAtomic(path, contents);
    result_.outputs.push_back(path);
  }

  CommandResult Finish(const std::vector<Scenario>& scenarios, int exit_code,
                       std::string message) {
    result_.exit_code = exit_code;
    result_.message = std::move(message);
    manifest_.scenario_hash = Fnv1a64(SerializeScenarios(scenarios));
    manifest_.master_seed = scenarios.empty() ? options_.seed.value_or(0)
                                              : scenarios.front().seed;
    manifest_.finished_at = UtcTimestamp();
    manifest_.outputs = result_.outputs;
    manifest_.exit_code = exit_code;
    const std::string path =
        (std::filesystem::path(options_.out_dir) / (command_ + "_manifest.json"))
            .string();
    WriteFileAtomic(path, ManifestToJson(manifest_) + "\n");
    result_.outputs.push_back(path);
    return result_;
  }

 private:
  std::string command_;
  const CommandOptions& options_;
  RunManifest manifest_;
  CommandResult result_;
};

std::vector<Scenario> LoadScenarios(const CommandOptions& options) {
  const std::string text = !options.config_text.empty()
                               ? options.config_text
                               : ReadFile(options.config_path);
  std::vector<Scenario> scenarios = ParseScenarioFile(text);
  for (Scenario& s : scenarios) {
    if (options.seed) s.seed = *options.seed;
    if (options.trials) s.trials = *options.trials;
    if (options.variant) s.variant = *options.variant;
    ValidateScenario(s);
  }
  return scenarios;
}

int RunBound(const std::vector<Scenario>& scenarios, Session& session) {
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& s = scenarios[i];
    const ResolvedClients rc = ResolveClients(s);
    const BoundReport b = ScenarioBound(s);
    CsvTable table({"scenario", "kind", "variant", "certified", "value", "p",
                    "p_star", "boundary_warning", "info_total", "prior_trace",
                    "harmonic_display", "epsilon_converted", "clients", "branches"});
    std::vector<std::string> clients, branches;
    for (const ClientSpec& c : rc.clients) {
      clients.push_back(std::to_string(c.n) + ":" + FormatDouble(c.rho_budget.rho()));
    }
    for (Branch br : b.branches) branches.emplace_back(BranchName(br));
    table.AddRow({s.name, b.kind, std::string(BoundVariantName(b.variant)),
                  b.certified ? "true" : "false", FormatDouble(b.value),
                  std::to_string(b.p), b.p_star ? std::to_string(*b.p_star) : "",
                  b.boundary_warning ? "true" : "false", FormatDouble(b.info_total),
                  FormatDouble(b.prior_trace),
                  b.harmonic_display ? FormatDouble(*b.harmonic_display) : "",
                  rc.any_converted ? "true" : "false", Join(clients),
                  Join(branches)});
    session.Emit(i, s, {table.ToString(), json::array({BoundJson(b, s, rc)})});
  }
  return kExitOk;
}

Output VerificationOutput(const std::string& scenario,
                          const std::vector<VerificationRecord>& records,
                          bool* all_passed) {
  CsvTable table({"scenario", "instance", "claim", "estimate", "std_error",
                  "bound", "trials", "escalated", "passed"});
  json list = json::array();
  for (const auto& r : records) {
    *all_passed = *all_passed && r.passed;
    table.AddRow({scenario, r.instance, r.claim, FormatDouble(r.estimate),
                  FormatDouble(r.std_error), FormatDouble(r.bound),
                  std::to_string(r.trials), r.escalated ? "true" : "false",
                  r.passed ? "true" : "false"});
    list.push_back(RecordJson(r));
  }
  return {table.ToString(), list};
}

int RunVerify(const std::vector<Scenario>& scenarios, Session& session,
              int workers) {
  bool ok = true;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto records = VerifyScenario(scenarios[i], workers);
    session.Emit(i, scenarios[i], VerificationOutput(scenarios[i].name, records, &ok));
  }
  return ok ? kExitOk : kExitClaimFailed;
}

int RunAudit(const std::vector<Scenario>& scenarios, Session& session) {
  bool ok = true;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto records = AuditScenario(scenarios[i]);
    session.Emit(i, scenarios[i], VerificationOutput(scenarios[i].name, records, &ok));
  }
  return ok ? kExitOk : kExitClaimFailed;
}

int RunRisk(const std::vector<Scenario>& scenarios, Session& session, int workers) {
  bool ok = true;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& s = scenarios[i];
    const auto records = RiskForScenario(s, workers);
    CsvTable table({"scenario", "estimator", "risk", "std_error", "trials",
                    "bound", "margin", "certified", "passed"});
    json list = json::array();
    for (const RiskRecord& r : records) {
      const RiskReport& rep = r.report;
      if (r.certified) ok = ok && rep.passed;
      table.AddRow({s.name, rep.estimator, FormatDouble(rep.risk),
                    FormatDouble(rep.std_error), std::to_string(rep.trials),
                    FormatDouble(rep.bound), FormatDouble(rep.margin),
                    r.certified ? "true" : "false", rep.passed ? "true" : "false"});
      list.push_back({{"estimator", rep.estimator}, {"risk", rep.risk},
                      {"std_error", rep.std_error}, {"trials", rep.trials},
                      {"bound", rep.bound}, {"margin", rep.margin},
                      {"certified", r.certified}, {"passed", rep.passed}});
    }
    session.Emit(i, s, {table.ToString(), list});
  }
  return ok ? kExitOk : kExitClaimFailed;
}

int RunSimulate(const std::vector<Scenario>& scenarios, Session& session) {
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& s = scenarios[i];
    const ResolvedClients rc = ResolveClients(s);
    const auto model = MakeScenarioModel(s);
    const Protocol protocol = BuildScenarioProtocol(s, rc.clients);
    Eigen::VectorXd theta;
    if (!s.theta.empty() || s.model == ModelKind::kBernoulli) {
      theta = FixedTheta(s);
    } else {
      StreamRng rng(DeriveSeed(s.seed, {kPriorStream}));
      theta = MakeScenarioPrior(s).Sample(rng);
    }
    const Transcript transcript = RunProtocol(*model, theta, rc.clients, protocol, s.seed);
    const BudgetVector declared = DeclaredCharges(protocol, static_cast<int>(rc.clients.size()));
    const BudgetVector accounted = Account(transcript);
    char idx[16];
    std::snprintf(idx, sizeof(idx), "%03zu", i);
    session.EmitRaw(std::string("simulate_") + idx + "_" + s.name + ".transcript.tsv",
                    FormatTranscriptLog(transcript));
    CsvTable table({"scenario", "client", "n", "declared_rho", "accounted_rho", "match"});
    json list = json::array();
    for (std::size_t l = 0; l < rc.clients.size(); ++l) {
      const bool match = declared[l] == accounted[l];
      table.AddRow({s.name, std::to_string(l + 1), std::to_string(rc.clients[l].n),
                    FormatDouble(declared[l].rho()), FormatDouble(accounted[l].rho()),
                    match ? "true" : "false"});
      list.push_back({{"client", l + 1}, {"n", rc.clients[l].n},
                      {"declared_rho", declared[l].rho()},
                      {"accounted_rho", accounted[l].rho()}, {"match", match}});
      if (!match) {
        throw Error(ErrorCode::kBudgetExceeded,
                    "client " + std::to_string(l + 1) + " accounting mismatch");
      }
    }
    session.Emit(i, s, {table.ToString(), list});
  }
  return kExitOk;
}

}  // namespace

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEnumerationCapExceeded:
      return kExitEnumerationCap;
    case ErrorCode::kBudgetExceeded:
      return kExitBudgetMismatch;
    default:
      return kExitInvalidConfig;
  }
}

OutputFormat ParseOutputFormat(std::string_view name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "json") return OutputFormat::kJson;
  if (name == "both") return OutputFormat::kBoth;
  throw Error(ErrorCode::kInvalidParameter,
              "format: expected csv, json or both");
}

BoundReport ScenarioBound(const Scenario& s) {
  const ResolvedClients rc = ResolveClients(s);
  switch (s.model) {
    case ModelKind::kGaussianMean:
      return MeanEstimationBound(s.d, s.sigma, rc.clients, s.prior_radius, s.variant);
    case ModelKind::kLinearRegression:
      return LinregBound(ScenarioDesign(s), s.sigma, rc.clients, s.prior_radius,
                         s.variant);
    case ModelKind::kNonparametric:
      return NonparamBound(s.alpha, s.d, s.smooth_radius, s.sigma, rc.clients,
                           s.variant, s.p_max);
    case ModelKind::kBernoulli:
      break;
  }
  throw Error(ErrorCode::kUnsupported,
              "model.family: no bound calculator for bernoulli scenarios");
}

Protocol WithNoiseMultiplier(const Protocol& protocol, int num_clients,
                             double multiplier) {
  if (multiplier == 1.0) return protocol;
  Protocol out = protocol;
  for (auto& round : out.mechanisms) {
    for (int l = 0; l < num_clients; ++l) {
      const auto* g = dynamic_cast<const GaussianMechanism*>(round[l].get());
      if (!g) continue;
      round[l] = std::make_shared<GaussianMechanism>(
          g->shared_statistic(), 1, g->RoundRho(),
          g->noise_std() / std::sqrt(multiplier));
    }
  }
  return out;
}

Protocol BuildScenarioProtocol(const Scenario& s,
                               std::span<const ClientSpec> clients) {
  const int m = static_cast<int>(clients.size());
  Protocol protocol;
  if (s.model == ModelKind::kLinearRegression) {
    if (s.schedule == "one_pass") {
      throw Error(ErrorCode::kInvalidParameter,
                  "schedule.kind: linear regression uses two roundwise releases");
    }
    EstimatorSpec spec;
    spec.kind = EstimatorKind::kFedLinreg;
    const Estimator est(spec, MakeEstimatorContext(s),
                        std::vector<ClientSpec>(clients.begin(), clients.end()));
    protocol = *est.protocol();
  } else if (s.model == ModelKind::kNonparametric) {
    throw Error(ErrorCode::kUnsupported,
                "model.family: nonparametric scenarios have no protocol");
  } else {
    const bool bernoulli = s.model == ModelKind::kBernoulli;
    StatisticPtr stat;
    if (bernoulli) {
      stat = std::make_shared<BoundedSumStatistic>(1.0);
    } else {
      stat = std::make_shared<ClippedMeanStatistic>(MeanClip(s), false);
    }
    if (s.schedule == "one_pass") {
      protocol = MakeOnePassGaussianProtocol(clients, stat);
    } else if (s.schedule == "roundwise") {
      protocol = MakeRoundwiseGaussianProtocol(clients, s.rounds, stat);
    } else {
      const double clip = bernoulli ? 1.0 : MeanClip(s);
      protocol = MakeAdaptiveTwoRoundMeanProtocol(
          clients, s.d, {0.5, 0.5}, ClipParams{clip, clip},
          bernoulli ? 0.25 : s.sigma * s.sigma);
    }
  }
  return WithNoiseMultiplier(protocol, m, s.noise_rho_multiplier);
}

std::vector<VerificationRecord> VerifyScenario(const Scenario& s, int workers) {
  if (s.model != ModelKind::kBernoulli) {
    throw Error(ErrorCode::kUnsupported,
                "model.family: verify needs an enumerable (bernoulli) family");
  }
  const ResolvedClients rc = ResolveClients(s);
  const int m = static_cast<int>(rc.clients.size());
  const auto model = MakeScenarioModel(s);
  const Protocol protocol = BuildScenarioProtocol(s, rc.clients);
  const std::vector<std::string> claims = s.claims.empty() ? DefaultClaims(m) : s.claims;
  MonteCarloOptions mc;
  mc.trials = s.trials;
  mc.seed = s.seed;
  mc.workers = workers;

  std::vector<VerificationRecord> out;
  for (double theta_value : s.verify_thetas) {
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, theta_value);
    const std::string instance = "theta=" + FormatDouble(theta_value);
    for (const std::string& claim : claims) {
      if (claim == "single_client_contraction") {
        if (m != 1) {
          throw Error(ErrorCode::kInvalidParameter,
                      "verify.claims: single_client_contraction needs one client");
        }
        out.push_back(FromContraction(instance, CheckSingleClientContraction(
                                                    *model, theta, rc.clients[0],
                                                    protocol, mc)));
      } else if (claim == "transcript_contraction") {
        out.push_back(FromContraction(
            instance,
            CheckTranscriptContraction(*model, theta, rc.clients, protocol, mc)));
      } else if (claim == "decomposition") {
        const DecompositionReport r =
            CheckInformationDecomposition(*model, theta, rc.clients, protocol, mc);
        out.push_back({instance, "decomposition", r.gap, r.gap_std_error,
                       kSeMultiplier * r.gap_std_error, r.trials, r.escalated,
                       r.passed});
      } else if (claim == "oracle_agreement") {
        const OracleAgreementReport r =
            CheckOracleAgreement(*model, theta, rc.clients, protocol, mc);
        out.push_back({instance, "oracle_agreement", r.difference,
                       r.difference_std_error, r.tolerance, s.trials, false, r.passed});
      } else if (claim == "product_form") {
        double worst = 0.0;
        for (int k = 0; k < kProductFormTranscripts; ++k) {
          const Transcript g =
              RunProtocol(*model, theta, rc.clients, protocol,
                          DeriveSeed(s.seed, {kTrialStream, static_cast<uint64_t>(k)}));
          const ProductFormCheck c =
              CheckPosteriorProductForm(g, *model, theta, rc.clients, protocol);
          worst = std::max({worst, c.max_error_vs_factorized, c.max_error_vs_marginals});
        }
        out.push_back({instance, "product_form", worst, 0.0, kProductFormTolerance,
                       kProductFormTranscripts, false, worst <= kProductFormTolerance});
      } else if (claim == "accounting_audit") {
        const Transcript history = RunProtocol(*model, theta, rc.clients, protocol, s.seed);
        auto audits = AuditProtocol(s, rc.clients, protocol, history, instance + ",");
        out.insert(out.end(), audits.begin(), audits.end());
      }
    }
  }
  return out;
}

std::vector<VerificationRecord> AuditScenario(const Scenario& s) {
  const ResolvedClients rc = ResolveClients(s);
  if (s.mechanism == "randomized_response") {
    if (s.model != ModelKind::kBernoulli) {
      throw Error(ErrorCode::kInvalidParameter,
                  "mechanism.kind: randomized_response needs bernoulli data");
    }
    std::vector<VerificationRecord> out;
    const auto grid = DefaultAuditGrid();
    for (std::size_t l = 0; l < rc.clients.size(); ++l) {
      const ClientEntry* entry = nullptr;
      std::size_t seen = 0;
      for (const ClientEntry& e : s.clients) {
        seen += static_cast<std::size_t>(e.count);
        if (l < seen) {
          entry = &e;
          break;
        }
      }
      const double eps = entry->epsilon ? *entry->epsilon
                                        : std::sqrt(2.0 * rc.clients[l].rho_budget.rho());
      const RandomizedResponse rr(1.0 / (1.0 + std::exp(eps)));
      const AdjacentPair pair{Dataset::Zero(1, 1), Dataset::Ones(1, 1)};
      const MechanismAudit audit = AuditMechanism(rr, pair, PureDpToZcdp(eps), grid);
      VerificationRecord rec;
      rec.instance = "client=" + std::to_string(l + 1) + ",epsilon=" + FormatDouble(eps);
      rec.claim = "accounting_audit";
      for (std::size_t k = 0; k < grid.size(); ++k) {
        rec.estimate = std::max(rec.estimate, audit.divergences[k] / grid[k]);
      }
      rec.bound = audit.claimed_rho.rho();
      rec.std_error = audit.tolerance;
      rec.passed = audit.passed;
      out.push_back(rec);
    }
    return out;
  }
  const auto model = MakeScenarioModel(s);
  const Protocol protocol = BuildScenarioProtocol(s, rc.clients);
  Eigen::VectorXd theta = FixedTheta(s);
  if (s.model == ModelKind::kBernoulli && s.theta.empty() && !s.verify_thetas.empty()) {
    theta = Eigen::VectorXd::Constant(1, s.verify_thetas.front());
  }
  const Transcript history = RunProtocol(*model, theta, rc.clients, protocol, s.seed);
  return AuditProtocol(s, rc.clients, protocol, history, "");
}

std::vector<RiskRecord> RiskForScenario(const Scenario& s, int workers) {
  if (s.model != ModelKind::kGaussianMean && s.model != ModelKind::kLinearRegression) {
    throw Error(ErrorCode::kUnsupported,
                "model.family: risk needs gaussian_mean or linear_regression");
  }
  if (s.trials < 1000) {
    throw Error(ErrorCode::kInvalidParameter, "trials: risk needs >= 1000 trials");
  }
  const ResolvedClients rc = ResolveClients(s);
  const auto model = MakeScenarioModel(s);
  const ProductPrior prior = MakeScenarioPrior(s);
  const EstimatorContext ctx = MakeEstimatorContext(s);
  const BoundReport private_bound = ScenarioBound(s);
  const std::vector<std::string> names =
      s.estimators.empty() ? DefaultEstimators(s.model) : s.estimators;

  std::vector<RiskRecord> out;
  for (const std::string& name : names) {
    EstimatorSpec spec;
    spec.kind = ParseEstimatorKind(name);
    const bool linreg_estimator = spec.kind == EstimatorKind::kFedLinreg;
    if (linreg_estimator != (s.model == ModelKind::kLinearRegression)) {
      throw Error(ErrorCode::kInvalidParameter,
                  "estimators: " + name + " does not apply to " +
                      std::string(ModelKindName(s.model)));
    }
    const Estimator estimator(spec, ctx, rc.clients);
    if (estimator.protocol()) {
      const BudgetVector declared = estimator.DeclaredBudget();
      for (std::size_t l = 0; l < rc.clients.size(); ++l) {
        const double effective = declared[l].rho() * s.noise_rho_multiplier;
        if (effective != rc.clients[l].rho_budget.rho()) {
          throw Error(ErrorCode::kBudgetExceeded,
                      "client " + std::to_string(l + 1) + ": " + name + " spends rho " +
                          FormatDouble(effective) + " against budget " +
                          FormatDouble(rc.clients[l].rho_budget.rho()));
        }
      }
    }
    RiskRecord rec;
    double bound = private_bound.value;
    rec.certified = private_bound.certified;
    if (spec.kind == EstimatorKind::kNonprivateMean) {
      const InfoProfile<double> profile = InfoProfileOf(model->Fisher(Eigen::VectorXd::Zero(s.d)));
      bound = SampleLimitedBound("mean", s.d, profile, rc.clients, s.prior_radius).value;
      rec.certified = true;
    }
    rec.report = EmpiricalBayesRisk(estimator, *model, prior, bound,
                                    RiskOptions{s.trials, s.seed, workers});
    out.push_back(rec);
  }
  return out;
}

CommandResult RunCommand(std::string_view command, const CommandOptions& options) {
  const std::string name(command);
  if (name != "bound" && name != "verify" && name != "risk" && name != "simulate" &&
      name != "audit") {
    return {kExitInvalidConfig, {}, "unknown command '" + name + "'"};
  }
  std::vector<Scenario> scenarios;
  try {
    scenarios = LoadScenarios(options);
  } catch (const Error& e) {
    return {ExitCodeFor(e.code()), {}, e.what()};
  } catch (const std::exception& e) {
    return {kExitInvalidConfig, {}, e.what()};
  }
  Session session(name, options);
  int code = kExitOk;
  std::string message = "ok";
  try {
    if (name == "bound") code = RunBound(scenarios, session);
    if (name == "verify") code = RunVerify(scenarios, session, options.workers);
    if (name == "risk") code = RunRisk(scenarios, session, options.workers);
    if (name == "simulate") code = RunSimulate(scenarios, session);
    if (name == "audit") code = RunAudit(scenarios, session);
    if (code == kExitClaimFailed) message = "a certified check failed";
  } catch (const Error& e) {
    code = ExitCodeFor(e.code());
    message = std::string(ErrorCodeName(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    code = kExitInvalidConfig;
    message = e.what();
  }
  return session.Finish(scenarios, code, message);
}

}  // namespace fedvt
