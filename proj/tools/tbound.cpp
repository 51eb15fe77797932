// tbound: volume-fraction bounds from simulated boundary measurements.
//
//   tbound simulate --config s.ini --output response.json
//   tbound bound    --input response.json --output report.json
//   tbound run      --config s.ini --output report.json
//   tbound sweep    --config s.ini --axis radius --values 0.1,0.15,0.2 --output sweep.csv
//   tbound verify   --suite algebra|pde|determinism|all [--output results.json]
//
// Exit codes: 0 ok, 1 other failure, 2 config/usage, 3 solver, 4 bound inconsistency.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tbound/error.hpp"
#include "tbound/harness.hpp"

using namespace tbound;
using namespace tbound::harness;

namespace {

constexpr int kOk = 0, kFailure = 1, kConfig = 2, kSolver = 3, kInconsistent = 4;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'", "output");
  out << text;
}

ScenarioConfig resolved(const std::string& config, const std::string& grid, int threads) {
  ScenarioConfig cfg = load_config(config);
  if (!grid.empty()) cfg.cells = parse_grid(grid);
  if (threads > 0) cfg.threads = threads;
  cfg.validate();
  return cfg;
}

int report_exit(const BoundReport& r) {
  std::string why;
  if (r.sandwich_ok(&why)) return kOk;
  std::cerr << "tbound: validity sandwich violated: " << why << "\n";
  return kInconsistent;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume-fraction bounds for two-phase bodies from boundary measurements"};
  app.require_subcommand(1);

  std::string config, output, grid, input, suite = "all", axis, values;
  int threads = 0;

  auto* sim = app.add_subcommand("simulate", "solve and measure; write a response file");
  auto* bnd = app.add_subcommand("bound", "bounds from a response file (no PDE solve)");
  auto* run = app.add_subcommand("run", "solve, measure and bound; write the full report");
  auto* swp = app.add_subcommand("sweep", "repeat run over one parameter; write CSV");
  auto* ver = app.add_subcommand("verify", "run the acceptance checks");

  for (auto* s : {sim, run, swp}) {
    s->add_option("--config", config, "scenario config (INI)")->required();
    s->add_option("--grid", grid, "override domain.cells, N or NxNxN");
  }
  for (auto* s : {sim, bnd, run, swp, ver}) {
    s->add_option("--output", output, "output path (default: config output.report or stdout)");
    s->add_option("--threads", threads, "solver threads")->check(CLI::PositiveNumber);
  }
  bnd->add_option("--input", input, "response file from `simulate`")->required();
  swp->add_option("--axis", axis, "grid | radius | contrast")->required();
  swp->add_option("--values", values, "comma-separated values (cells, radius or sigma1/sigma2)")->required();
  ver->add_option("--suite", suite, "algebra | pde | determinism | all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) {
      const ScenarioConfig cfg = resolved(config, grid, threads);
      const BoundReport r = run_scenario(cfg);
      write_text(output.empty() ? cfg.report_path : output, response_json(r, cfg).dump(2) + "\n");
      return kOk;
    }
    if (*bnd) {
      std::ifstream in(input);
      if (!in) throw ConfigError("cannot open '" + input + "'", "config");
      Json resp;
      try {
        in >> resp;
      } catch (const Json::exception& e) {
        throw ConfigError(std::string("response file is not JSON: ") + e.what(), "config");
      }
      const BoundReport r = bounds_from_response(resp);
      write_text(output, r.to_json().dump(2) + "\n");
      return report_exit(r);
    }
    if (*run) {
      const ScenarioConfig cfg = resolved(config, grid, threads);
      const BoundReport r = run_scenario(cfg);
      write_text(output.empty() ? cfg.report_path : output, r.to_json().dump(2) + "\n");
      return report_exit(r);
    }
    if (*swp) {
      const ScenarioConfig cfg = resolved(config, grid, threads);
      std::vector<double> vals;
      std::stringstream ss(values);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        try {
          std::size_t used = 0;
          vals.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw ConfigError("bad sweep value '" + tok + "'", "config");
        }
      }
      if (vals.empty()) throw ConfigError("no sweep values", "config");
      const SweepAxis ax = parse_axis(axis);
      std::ostringstream csv;
      sweep(cfg, ax, vals, csv);
      write_text(output, csv.str());
      return kOk;
    }
    if (*ver) {
      const VerificationSuite vs = verify(suite, threads > 0 ? threads : 1);
      for (const auto& c : vs.checks) {
        std::cout << c.id << ' ' << (c.passed ? "PASS" : "FAIL") << (c.passed || !c.expected_failure ? "" : " (expected)")
                  << "  " << c.name << ": " << c.detail << "\n";
      }
      if (!output.empty()) write_text(output, vs.to_json().dump(2) + "\n");
      return vs.acceptable() ? kOk : kFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "tbound: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const SolverError& e) {
    std::cerr << "tbound: solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const DataInconsistency& e) {
    std::cerr << "tbound: data inconsistency [" << e.stage() << "]: " << e.what() << "\n";
    return kInconsistent;
  } catch (const Error& e) {
    std::cerr << "tbound: error [" << e.stage() << "]: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "tbound: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
