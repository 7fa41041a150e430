// SPDX-License-Identifier: MIT
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tspmp/solver.hpp"

namespace tspmp {

/// Margin used when locating the saturation thresholds of the decision
/// sweep: a decision counts as saturated while it is within this distance
/// of the box bound.
inline constexpr double kSweepMargin = 1e-2;

/// Bisection tolerance on the sweep parameter when locating thresholds.
inline constexpr double kSweepRootTol = 1e-6;

/// A pinned value at one instant, used by expectation blocks and summaries.
struct ExpectedValue {
  double t = 0.0;
  Vec value;
};

/// Optional block of pinned results a scenario is checked against.
struct Expectations {
  std::optional<double> cost;
  std::vector<ExpectedValue> controls;  ///< scattered values or dense cells by instant
  std::vector<ExpectedValue> adjoint;   ///< adjoint checkpoints by grid instant
};

/// Comparison tolerances for expectation checks and solver cross-checks.
struct Tolerances {
  double cost_rel = 1e-3;
  double control_abs = 1e-3;
  double adjoint_abs = 1e-3;
};

enum class SolverChoice { Sweep, Direct, Both };

/**
 * A solver job loaded from a JSON file.
 *
 * Time scales are kept in their generator form: `{"kind":"interval","l":..,
 * "r":..}`, `{"kind":"uniform","start":..,"period":..}`, `{"kind":"points",
 * "values":[..]}` or `{"kind":"union","parts":[..]}`. Generators expand to
 * segments at load time and are clipped to the window.
 *
 * The dynamics block is `{"id":"consumption"}` or `{"id":"linear_quadratic",
 * "A":[[..]],"B":[[..]],"Q":[[..]],"R":[[..]]}`.
 */
struct Scenario {
  std::string name;
  double a = 0.0;
  double b = 0.0;
  nlohmann::json state_generator;
  nlohmann::json control_generator;
  nlohmann::json dynamics;
  Vec omega_lo;
  Vec omega_hi;
  std::string terminal_kind;  ///< fixed_initial_free_final | fixed_both | periodic
  Vec q_a;
  Vec q_b;
  bool free_final_time = false;
  SolverChoice solver = SolverChoice::Sweep;
  double step = 0.0;  ///< integration step; 0 selects the default for the window
  std::uint64_t seed = 0;
  Tolerances tolerances;
  /// Instants whose control values the sweep/direct cross-check skips
  /// (decisions the objective is flat in have no unique optimum).
  std::vector<double> skip_control_compare;
  std::optional<Expectations> expected;

  static Scenario from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Expands one time-scale generator over the window [a, b]. Everything is
/// clipped to the window; an expansion with nothing left in the window is a
/// ParseError, as is an unknown kind or a malformed field.
TimeScale expand_generator(const nlohmann::json& g, double a, double b);

/// Reads and validates a scenario file. Throws ParseError on unreadable
/// files, malformed JSON or field violations.
Scenario load_scenario(const std::string& path);

/// Writes the canonical JSON form (to_json) of a scenario.
void save_scenario(const Scenario& sc, const std::string& path);

/// Builds the control problem a scenario describes.
ControlProblem make_problem(const Scenario& sc);

/// Integration step after applying the TSPMP_STEP environment override.
/// The override must parse as a positive number, else ParseError.
double effective_step(const Scenario& sc);

/// One solver execution within a scenario run.
struct ScenarioRun {
  std::string solver;  ///< "sweep" or "direct"
  SolveResult result;
  double max_residual = 0.0;  ///< largest certificate row magnitude
};

/// Outcome of run_scenario. `pass` requires every run to be certified and
/// every expectation and cross-check to hold; `mismatches` carries one line
/// per violated field.
struct RunReport {
  std::string name;
  std::vector<ScenarioRun> runs;
  std::vector<std::string> mismatches;
  bool pass = false;
  std::vector<std::string> summary_lines;  ///< `name, solver, C, max_residual, pass`
};

/**
 * Runs the scenario's solver(s) and writes artifacts into out_dir:
 * `<name>_<solver>_control.csv`, `<name>_<solver>_trajectory.csv`,
 * `<name>_<solver>_certificate.{txt,csv}` and `<name>_summary.json`.
 *
 * The expectation block is checked against the sweep result when present,
 * otherwise against the direct result. When both solvers run, their costs
 * and control values are cross-checked within the scenario tolerances
 * (instants listed in skip_control_compare are exempt). Violations land in
 * `mismatches`; nothing throws for them.
 */
RunReport run_scenario(const Scenario& sc, const std::string& out_dir);

/// Throws ExpectationMismatch carrying every mismatch line when the report
/// does not pass. Lets callers map report failures onto one error path.
void enforce(const RunReport& report);

/// One row of the sampling-rate sweep.
struct SweepRow {
  double lambda = 0.0;
  double u_first = 0.0;      ///< decision at the window start
  double u_at_lambda = 0.0;  ///< decision at t = lambda
  double cost = 0.0;
};

/// Solves the base scenario with the sampling scale {a, lambda, b} for each
/// lambda on the uniform grid [from, to] with `steps` subdivisions. The base
/// must be a consumption scenario over a single continuum segment.
std::vector<SweepRow> sweep_lambda(const Scenario& base, double from, double to, int steps);

/// Saturation thresholds of the sweep, located by bisection to kSweepRootTol:
/// the rate where the first decision leaves the upper bound (crosses
/// 1 - kSweepMargin) and the rate where the decision at t = lambda reaches
/// the lower bound (crosses kSweepMargin). The rows must bracket each
/// crossing, else SolveError.
struct SweepThresholds {
  double u_first_leaves_one = 0.0;
  double u_lambda_reaches_zero = 0.0;
};
SweepThresholds sweep_thresholds(const Scenario& base, const std::vector<SweepRow>& rows);

/// Writes the sweep table as CSV with a header row.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/**
 * Checks summaries in results_dir against a golden file and prints one line
 * per row to `out`. Returns the number of failing rows. The golden file is
 * `{"rows":[{"name":..,"solver":"sweep"|"direct","quantity":"cost"|"control",
 * "t":..,"component":..,"expected":..,"tolerance":..,"mode":"rel"|"abs"}]}`.
 * Throws MissingResult when the directory holds no summaries or a row's
 * summary or quantity is absent.
 */
int compare_golden(const std::string& results_dir, const std::string& golden_path,
                   std::ostream& out);

}  // namespace tspmp
