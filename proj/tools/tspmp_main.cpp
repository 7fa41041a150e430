// SPDX-License-Identifier: MIT
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tspmp/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sampled-data optimal control on time scales"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string run_out = "results";
  CLI::App* run = app.add_subcommand("run", "solve one scenario and certify the result");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", run_out, "directory for artifacts");

  std::string base_path;
  std::string sweep_out = "results";
  double from = 0.05;
  double to = 11.95;
  int steps = 239;
  CLI::App* sweep = app.add_subcommand("sweep", "sweep the sampling rate of a base scenario");
  sweep->add_option("--base", base_path, "base scenario JSON file")->required();
  sweep->add_option("--from", from, "first sampling rate");
  sweep->add_option("--to", to, "last sampling rate");
  sweep->add_option("--steps", steps, "number of grid subdivisions");
  sweep->add_option("--out", sweep_out, "directory for sweep.csv");

  std::string results_dir;
  std::string golden_path;
  CLI::App* compare =
      app.add_subcommand("compare", "check result summaries against a golden file");
  compare->add_option("--results", results_dir, "directory with *_summary.json files")
      ->required();
  compare->add_option("--golden", golden_path, "golden JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  using namespace tspmp;
  try {
    if (run->parsed()) {
      const RunReport report = run_scenario(load_scenario(scenario_path), run_out);
      for (const std::string& line : report.summary_lines) std::cout << line << "\n";
      enforce(report);
    } else if (sweep->parsed()) {
      const Scenario base = load_scenario(base_path);
      const std::vector<SweepRow> rows = sweep_lambda(base, from, to, steps);
      std::filesystem::create_directories(sweep_out);
      const std::string csv_path = sweep_out + "/sweep.csv";
      std::ofstream csv(csv_path);
      write_sweep_csv(csv, rows);
      const SweepThresholds th = sweep_thresholds(base, rows);
      std::cout << "wrote " << csv_path << "\n"
                << "u_first leaves 1 at lambda = " << th.u_first_leaves_one << "\n"
                << "u_at_lambda reaches 0 at lambda = " << th.u_lambda_reaches_zero << "\n";
    } else {
      const int failures = compare_golden(results_dir, golden_path, std::cout);
      if (failures > 0) {
        std::cerr << failures << " golden row(s) failed\n";
        return 1;
      }
    }
  } catch (const ExpectationMismatch& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const MissingResult& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 0;
}
