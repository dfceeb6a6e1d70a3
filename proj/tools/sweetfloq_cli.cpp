// Copyright 2026 The sweetfloq Authors
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

// sweetfloq command-line tool.
//
//   sweetfloq <subcommand> --config run.json [--out result.json]
//             [--threads N] [--seed S] [--strict] [--protocol P]
//
// Exit codes: 0 ok, 1 usage, 2 config schema, 3 module validity,
// 4 numerical failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "sweetfloq/cli.hpp"

namespace {

using sweetfloq::cli::json;
namespace cli = sweetfloq::cli;

int exit_for(sweetfloq::ErrorKind k) {
  return k == sweetfloq::ErrorKind::validity ? cli::kValidity : cli::kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Floquet quasi-energies, noise rates, sweet spots and gates for driven fluxonium qubits"};
  app.require_subcommand(1);
  std::string config_path, out_path, protocol;
  int threads = 1;
  std::uint64_t seed = 0;
  bool strict = false;
  std::string selected;
  for (const auto& name : cli::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_path, "envelope path; CSV payloads go next to it with a .csv extension");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
    sub->add_option("--seed", seed, "seed for stochastic sampling (overrides the config)");
    sub->add_flag("--strict", strict, "treat any failed grid point as fatal");
    if (name == "gate")
      sub->add_option("--protocol", protocol, "rabi, sqrt-x, x, s, t or ramp")
          ->required()
          ->check(CLI::IsMember({"rabi", "sqrt-x", "x", "s", "t", "ramp"}));
    sub->callback([&selected, name] { selected = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kUsage;
  }

  json config;
  {
    std::ifstream f(config_path, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot read config file " << config_path << "\n";
      return cli::kSchema;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    try {
      config = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return cli::kSchema;
    }
  }

  cli::RunOptions ro;
  ro.threads = threads;
  if (app.get_subcommand(selected)->count("--seed")) ro.seed = seed;
  ro.protocol = protocol;
  cli::Envelope env;
  try {
    env = cli::run(selected, config, ro);
  } catch (const cli::SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kSchema;
  } catch (const sweetfloq::ValidityError& e) {
    std::cerr << "validity error: " << e.what() << "\n";
    return cli::kValidity;
  } catch (const sweetfloq::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return cli::kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kNumerical;
  }

  if (strict && env.failed_points > 0) {
    std::cerr << "strict: " << env.failed_points << " grid point(s) failed\n";
    for (const auto& w : env.document["warnings"]) std::cerr << "  " << w.get<std::string>() << "\n";
    return exit_for(env.first_failure);
  }

  try {
    if (out_path.empty()) {
      if (env.csv) env.document["payload"]["csv"] = *env.csv;
      std::cout << env.document.dump(2) << "\n";
    } else {
      const cli::OutputPaths paths = cli::output_paths(out_path);
      if (env.csv) env.document["payload"]["csv_path"] = paths.csv.filename().string();
      if (env.csv) cli::write_atomic(paths.csv, *env.csv);
      cli::write_atomic(paths.envelope, env.document.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kUsage;
  }
  for (const auto& w : env.document["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
  return cli::kOk;
}
