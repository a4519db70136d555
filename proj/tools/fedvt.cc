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

// fedvt: batch front-end for the bound, verification, risk, simulation and
// audit suites.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fedvt/commands.h"

int main(int argc, char** argv) {
  CLI::App app{"Federated zCDP van Trees toolkit"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  int trials = 0;
  std::string variant;
  std::string out_dir = "fedvt_out";
  std::string format = "both";
  int workers = 0;

  for (const char* name : {"bound", "verify", "risk", "simulate", "audit"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "Scenario file (JSON)")->required();
    sub->add_option("--seed", seed, "Master seed override");
    sub->add_option("--trials", trials, "Trial count override");
    sub->add_option("--variant", variant, "Bound variant")
        ->check(CLI::IsMember({"exact", "rho-linear"}));
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    sub->add_option("--workers", workers, "Worker threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fedvt::kExitInvalidConfig;
  }

  const CLI::App* sub = app.get_subcommands().front();
  fedvt::CommandOptions options;
  options.config_path = config;
  if (sub->count("--seed")) options.seed = seed;
  if (sub->count("--trials")) options.trials = trials;
  if (!variant.empty()) options.variant = fedvt::ParseBoundVariant(variant);
  options.out_dir = out_dir;
  options.format = fedvt::ParseOutputFormat(format);
  options.workers = workers;

  const fedvt::CommandResult result = fedvt::RunCommand(sub->get_name(), options);
  for (const auto& path : result.outputs) std::cout << path << '\n';
  (result.exit_code == 0 ? std::cout : std::cerr) << result.message << '\n';
  return result.exit_code;
}
