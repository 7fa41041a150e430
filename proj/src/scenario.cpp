// SPDX-License-Identifier: MIT
#include "tspmp/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tspmp {

namespace {

using nlohmann::json;

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Vec to_vec(const json& j) {
  Vec v;
  for (const auto& x : j) v.push_back(x.get<double>());
  return v;
}

json from_vec(const Vec& v) {
  json j = json::array();
  for (double x : v) j.push_back(x);
  return j;
}

Mat to_mat(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ParseError("matrix must be a nonempty array of rows");
  }
  Mat m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != j[0].size()) throw ParseError("matrix rows differ in length");
    for (std::size_t c = 0; c < j[r].size(); ++c) m.at(r, c) = j[r][c].get<double>();
  }
  return m;
}

std::vector<ExpectedValue> to_checkpoints(const json& j) {
  std::vector<ExpectedValue> out;
  for (const auto& e : j) out.push_back({e.at("t").get<double>(), to_vec(e.at("value"))});
  return out;
}

json from_checkpoints(const std::vector<ExpectedValue>& cps) {
  json j = json::array();
  for (const auto& c : cps) j.push_back({{"t", c.t}, {"value", from_vec(c.value)}});
  return j;
}

/// Collects the segments one generator contributes inside [a, b].
void expand_into(const json& g, double a, double b, std::vector<TimeScale::Segment>& out) {
  const std::string kind = g.at("kind").get<std::string>();
  if (kind == "interval") {
    const double lo = std::max(g.at("l").get<double>(), a);
    const double hi = std::min(g.at("r").get<double>(), b);
    if (lo <= hi) out.push_back({lo, hi});
  } else if (kind == "uniform") {
    const double start = g.at("start").get<double>();
    const double period = g.at("period").get<double>();
    if (!(period > 0.0)) throw ParseError("uniform generator needs period > 0");
    const double k0 = std::ceil((a - start) / period - 1e-12);
    for (double k = k0;; k += 1.0) {
      const double t = start + k * period;
      if (t > b + 1e-12) break;
      if (t >= a - 1e-12) out.push_back({std::clamp(t, a, b), std::clamp(t, a, b)});
    }
  } else if (kind == "points") {
    for (const auto& x : g.at("values")) {
      const double t = x.get<double>();
      if (t >= a - 1e-12 && t <= b + 1e-12) {
        out.push_back({std::clamp(t, a, b), std::clamp(t, a, b)});
      }
    }
  } else if (kind == "union") {
    for (const auto& part : g.at("parts")) expand_into(part, a, b, out);
  } else {
    throw ParseError("unknown generator kind \"" + kind + "\"");
  }
}

SolverChoice parse_solver(const std::string& s) {
  if (s == "sweep") return SolverChoice::Sweep;
  if (s == "direct") return SolverChoice::Direct;
  if (s == "both") return SolverChoice::Both;
  throw ParseError("solver must be sweep, direct or both, not \"" + s + "\"");
}

std::string solver_name(SolverChoice c) {
  switch (c) {
    case SolverChoice::Sweep: return "sweep";
    case SolverChoice::Direct: return "direct";
    default: return "both";
  }
}

/// Looks up the control value a result decides at instant t: a scattered
/// interval starting there, or the dense cell containing t.
std::optional<Vec> control_value_at(const SolveResult& res, double t) {
  const ControlStructure& st = res.control.structure();
  for (std::size_t k = 0; k < st.scattered.size(); ++k) {
    if (std::abs(st.scattered[k].r - t) <= 1e-9) return res.control.scattered_value(k);
  }
  for (std::size_t d = 0; d < st.dense.size(); ++d) {
    if (t >= st.dense[d].lo - 1e-9 && t < st.dense[d].hi) return res.control.value(t);
  }
  return std::nullopt;
}

std::optional<Vec> adjoint_value_at(const SolveResult& res, double t) {
  for (std::size_t i = 0; i < res.trajectory.grid.size(); ++i) {
    if (std::abs(res.trajectory.grid[i].t - t) <= 1e-9) return res.adjoint.p[i];
  }
  return std::nullopt;
}

void write_control_csv(std::ostream& os, const SolveResult& res) {
  const std::size_t m = res.control.dim();
  os << "t";
  for (std::size_t j = 0; j < m; ++j) os << ",u" << j + 1;
  os << "\n";
  std::vector<std::pair<double, Vec>> rows;
  const ControlStructure& st = res.control.structure();
  for (std::size_t k = 0; k < st.scattered.size(); ++k) {
    rows.emplace_back(st.scattered[k].r, res.control.scattered_value(k));
  }
  for (std::size_t d = 0; d < st.dense.size(); ++d) {
    const auto& table = res.control.dense_table(d);
    for (std::size_t c = 0; c < table.values.size(); ++c) {
      rows.emplace_back(table.edges[c], table.values[c]);
    }
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [t, u] : rows) {
    os << fmt17(t);
    for (double x : u) os << "," << fmt17(x);
    os << "\n";
  }
}

double max_residual_of(const CertificateReport& report) {
  double r = 0.0;
  for (const auto& row : report.rows) r = std::max(r, std::abs(row.value));
  return r;
}

json summarize_run(const ScenarioRun& run) {
  json controls = json::array();
  const ControlStructure& st = run.result.control.structure();
  for (std::size_t k = 0; k < st.scattered.size(); ++k) {
    controls.push_back(
        {{"t", st.scattered[k].r}, {"value", from_vec(run.result.control.scattered_value(k))}});
  }
  for (std::size_t d = 0; d < st.dense.size(); ++d) {
    const auto& table = run.result.control.dense_table(d);
    for (std::size_t c = 0; c < table.values.size(); ++c) {
      controls.push_back({{"t", table.edges[c]}, {"value", from_vec(table.values[c])}});
    }
  }
  return {{"solver", run.solver},
          {"cost", run.result.objective},
          {"max_residual", run.max_residual},
          {"certified", run.result.certificate.certified()},
          {"iterations", run.result.iterations},
          {"projected_gradient", run.result.projected_gradient},
          {"notes", run.result.notes},
          {"controls", controls}};
}

/// Compares two controls at the midpoints of both cell decompositions of
/// one dense portion; closed-form sweeps may split a loaded cell in two.
void compare_dense_portion(const SolveResult& x, const SolveResult& y, std::size_t d,
                           double tol, std::vector<std::string>& mismatches) {
  for (const SolveResult* src : {&x, &y}) {
    const auto& table = src->control.dense_table(d);
    for (std::size_t c = 0; c + 1 < table.edges.size(); ++c) {
      const double mid = 0.5 * (table.edges[c] + table.edges[c + 1]);
      const Vec ux = x.control.value(mid);
      const Vec uy = y.control.value(mid);
      for (std::size_t j = 0; j < ux.size(); ++j) {
        if (std::abs(ux[j] - uy[j]) > tol) {
          mismatches.push_back("solver cross-check: dense control at t = " + fmt17(mid) +
                               " differs: sweep " + fmt17(ux[j]) + ", direct " + fmt17(uy[j]) +
                               " (abs tol " + fmt17(tol) + ")");
        }
      }
    }
  }
}

}  // namespace

Scenario Scenario::from_json(const json& j) {
  try {
    Scenario sc;
    sc.name = j.at("name").get<std::string>();
    if (sc.name.empty()) throw ParseError("scenario name is empty");
    sc.a = j.at("window").at(0).get<double>();
    sc.b = j.at("window").at(1).get<double>();
    if (!(sc.a < sc.b)) throw ParseError("window must satisfy a < b");
    sc.state_generator = j.at("state_scale");
    sc.control_generator = j.at("control_scale");
    sc.dynamics = j.at("template");
    sc.dynamics.at("id").get<std::string>();
    sc.omega_lo = to_vec(j.at("omega").at("lo"));
    sc.omega_hi = to_vec(j.at("omega").at("hi"));
    if (sc.omega_lo.size() != sc.omega_hi.size() || sc.omega_lo.empty()) {
      throw ParseError("omega bounds must be nonempty and equally sized");
    }
    const json& term = j.at("terminal");
    sc.terminal_kind = term.at("kind").get<std::string>();
    if (term.contains("q_a")) sc.q_a = to_vec(term.at("q_a"));
    if (term.contains("q_b")) sc.q_b = to_vec(term.at("q_b"));
    sc.free_final_time = term.value("free_final_time", false);
    sc.solver = parse_solver(j.at("solver").get<std::string>());
    sc.step = j.value("step", 0.0);
    if (sc.step < 0.0) throw ParseError("step must be nonnegative");
    sc.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("tolerances")) {
      const json& tol = j.at("tolerances");
      sc.tolerances.cost_rel = tol.value("cost_rel", sc.tolerances.cost_rel);
      sc.tolerances.control_abs = tol.value("control_abs", sc.tolerances.control_abs);
      sc.tolerances.adjoint_abs = tol.value("adjoint_abs", sc.tolerances.adjoint_abs);
    }
    if (j.contains("skip_control_compare")) {
      sc.skip_control_compare = to_vec(j.at("skip_control_compare"));
    }
    if (j.contains("expected")) {
      const json& e = j.at("expected");
      Expectations exp;
      if (e.contains("cost")) exp.cost = e.at("cost").get<double>();
      if (e.contains("controls")) exp.controls = to_checkpoints(e.at("controls"));
      if (e.contains("adjoint")) exp.adjoint = to_checkpoints(e.at("adjoint"));
      sc.expected = std::move(exp);
    }
    return sc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed scenario: ") + e.what());
  }
}

json Scenario::to_json() const {
  json j{{"name", name},
         {"window", {a, b}},
         {"state_scale", state_generator},
         {"control_scale", control_generator},
         {"template", dynamics},
         {"omega", {{"lo", from_vec(omega_lo)}, {"hi", from_vec(omega_hi)}}},
         {"solver", solver_name(solver)},
         {"step", step},
         {"seed", seed},
         {"tolerances",
          {{"cost_rel", tolerances.cost_rel},
           {"control_abs", tolerances.control_abs},
           {"adjoint_abs", tolerances.adjoint_abs}}}};
  json term{{"kind", terminal_kind}};
  if (!q_a.empty()) term["q_a"] = from_vec(q_a);
  if (!q_b.empty()) term["q_b"] = from_vec(q_b);
  term["free_final_time"] = free_final_time;
  j["terminal"] = term;
  if (!skip_control_compare.empty()) j["skip_control_compare"] = from_vec(skip_control_compare);
  if (expected) {
    json e = json::object();
    if (expected->cost) e["cost"] = *expected->cost;
    if (!expected->controls.empty()) e["controls"] = from_checkpoints(expected->controls);
    if (!expected->adjoint.empty()) e["adjoint"] = from_checkpoints(expected->adjoint);
    j["expected"] = e;
  }
  return j;
}

TimeScale expand_generator(const json& g, double a, double b) {
  std::vector<TimeScale::Segment> segs;
  try {
    expand_into(g, a, b, segs);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed generator: ") + e.what());
  }
  if (segs.empty()) throw ParseError("generator produces nothing inside the window");
  std::sort(segs.begin(), segs.end(),
            [](const auto& x, const auto& y) { return x.lo < y.lo; });
  std::vector<TimeScale::Segment> merged{segs.front()};
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (segs[i].lo <= merged.back().hi + kNodeMergeTol) {
      merged.back().hi = std::max(merged.back().hi, segs[i].hi);
    } else {
      merged.push_back(segs[i]);
    }
  }
  return TimeScale::from_segments(std::move(merged));
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return Scenario::from_json(j);
}

void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write scenario file " + path);
  out << sc.to_json().dump(2) << "\n";
}

ControlProblem make_problem(const Scenario& sc) {
  TimeScale state = expand_generator(sc.state_generator, sc.a, sc.b);
  TimeScale control = expand_generator(sc.control_generator, sc.a, sc.b);
  const std::string id = sc.dynamics.at("id").get<std::string>();
  DynamicsSpec dyn = [&] {
    if (id == "consumption") return DynamicsSpec::consumption();
    if (id == "linear_quadratic") {
      try {
        return DynamicsSpec::linear_quadratic(to_mat(sc.dynamics.at("A")),
                                              to_mat(sc.dynamics.at("B")),
                                              to_mat(sc.dynamics.at("Q")),
                                              to_mat(sc.dynamics.at("R")));
      } catch (const json::exception& e) {
        throw ParseError(std::string("malformed linear_quadratic template: ") + e.what());
      }
    }
    throw ParseError("unknown template id \"" + id + "\"");
  }();
  TerminalSpec term = [&] {
    if (sc.terminal_kind == "fixed_initial_free_final") {
      return TerminalSpec::fixed_initial_free_final(sc.q_a, sc.free_final_time);
    }
    if (sc.terminal_kind == "fixed_both") {
      return TerminalSpec::fixed_both(sc.q_a, sc.q_b, sc.free_final_time);
    }
    if (sc.terminal_kind == "periodic") return TerminalSpec::periodic(sc.free_final_time);
    throw ParseError("unknown terminal kind \"" + sc.terminal_kind + "\"");
  }();
  return ControlProblem(std::move(state), std::move(control), std::move(dyn),
                        ControlBox(sc.omega_lo, sc.omega_hi), std::move(term));
}

double effective_step(const Scenario& sc) {
  const char* env = std::getenv("TSPMP_STEP");
  if (env == nullptr || *env == '\0') return sc.step;
  char* end = nullptr;
  const double h = std::strtod(env, &end);
  if (end == env || *end != '\0' || !std::isfinite(h) || h <= 0.0) {
    throw ParseError(std::string("TSPMP_STEP must be a positive number, got \"") + env + "\"");
  }
  return h;
}

RunReport run_scenario(const Scenario& sc, const std::string& out_dir) {
  const ControlProblem problem = make_problem(sc);
  const double h = effective_step(sc);

  RunReport report;
  report.name = sc.name;
  if (sc.solver != SolverChoice::Direct) {
    report.runs.push_back({"sweep", solve_closed_form(problem, h), 0.0});
  }
  if (sc.solver != SolverChoice::Sweep) {
    DirectOptions opt;
    opt.step = h;
    opt.seed = sc.seed;
    report.runs.push_back({"direct", solve_projected_gradient(problem, opt), 0.0});
  }
  for (ScenarioRun& run : report.runs) run.max_residual = max_residual_of(run.result.certificate);

  std::filesystem::create_directories(out_dir);
  const auto path = [&](const std::string& suffix) {
    return out_dir + "/" + sc.name + "_" + suffix;
  };
  for (const ScenarioRun& run : report.runs) {
    std::ofstream control_csv(path(run.solver + "_control.csv"));
    write_control_csv(control_csv, run.result);
    std::ofstream traj_csv(path(run.solver + "_trajectory.csv"));
    write_trajectory_csv(traj_csv, run.result.trajectory, &run.result.adjoint);
    std::ofstream cert_txt(path(run.solver + "_certificate.txt"));
    run.result.certificate.write_text(cert_txt);
    std::ofstream cert_csv(path(run.solver + "_certificate.csv"));
    run.result.certificate.write_csv(cert_csv);
  }

  for (const ScenarioRun& run : report.runs) {
    if (!run.result.certificate.certified()) {
      report.mismatches.push_back("certificate: " + run.solver +
                                  " result has an optimality residual out of bounds");
    }
  }

  // Expectations are held against the sweep when it ran (the direct run then
  // gets covered by the cross-check below).
  const ScenarioRun& primary = report.runs.front();
  if (sc.expected) {
    const Expectations& e = *sc.expected;
    if (e.cost &&
        std::abs(primary.result.objective - *e.cost) > sc.tolerances.cost_rel * std::abs(*e.cost)) {
      report.mismatches.push_back("cost: expected " + fmt17(*e.cost) + ", got " +
                                  fmt17(primary.result.objective) + " (rel tol " +
                                  fmt17(sc.tolerances.cost_rel) + ")");
    }
    for (const ExpectedValue& c : e.controls) {
      const std::optional<Vec> got = control_value_at(primary.result, c.t);
      if (!got || got->size() != c.value.size()) {
        report.mismatches.push_back("control at t = " + fmt17(c.t) + ": no decision there");
        continue;
      }
      for (std::size_t jx = 0; jx < c.value.size(); ++jx) {
        if (std::abs((*got)[jx] - c.value[jx]) > sc.tolerances.control_abs) {
          report.mismatches.push_back("control at t = " + fmt17(c.t) + ": expected " +
                                      fmt17(c.value[jx]) + ", got " + fmt17((*got)[jx]) +
                                      " (abs tol " + fmt17(sc.tolerances.control_abs) + ")");
        }
      }
    }
    for (const ExpectedValue& c : e.adjoint) {
      const std::optional<Vec> got = adjoint_value_at(primary.result, c.t);
      if (!got || got->size() != c.value.size()) {
        report.mismatches.push_back("adjoint at t = " + fmt17(c.t) + ": no grid node there");
        continue;
      }
      for (std::size_t jx = 0; jx < c.value.size(); ++jx) {
        if (std::abs((*got)[jx] - c.value[jx]) > sc.tolerances.adjoint_abs) {
          report.mismatches.push_back("adjoint at t = " + fmt17(c.t) + ": expected " +
                                      fmt17(c.value[jx]) + ", got " + fmt17((*got)[jx]) +
                                      " (abs tol " + fmt17(sc.tolerances.adjoint_abs) + ")");
        }
      }
    }
  }

  if (report.runs.size() == 2) {
    const SolveResult& sweep = report.runs[0].result;
    const SolveResult& direct = report.runs[1].result;
    if (std::abs(sweep.objective - direct.objective) >
        sc.tolerances.cost_rel * std::max(1.0, std::abs(sweep.objective))) {
      report.mismatches.push_back("solver cross-check: costs differ: sweep " +
                                  fmt17(sweep.objective) + ", direct " +
                                  fmt17(direct.objective));
    }
    const ControlStructure& st = sweep.control.structure();
    for (std::size_t k = 0; k < st.scattered.size(); ++k) {
      const double r = st.scattered[k].r;
      const auto skip = [&](double t) { return std::abs(t - r) <= 1e-9; };
      if (std::any_of(sc.skip_control_compare.begin(), sc.skip_control_compare.end(), skip)) {
        continue;
      }
      const Vec& us = sweep.control.scattered_value(k);
      const Vec& ud = direct.control.scattered_value(k);
      for (std::size_t jx = 0; jx < us.size(); ++jx) {
        if (std::abs(us[jx] - ud[jx]) > sc.tolerances.control_abs) {
          report.mismatches.push_back("solver cross-check: control at t = " + fmt17(r) +
                                      " differs: sweep " + fmt17(us[jx]) + ", direct " +
                                      fmt17(ud[jx]) + " (abs tol " +
                                      fmt17(sc.tolerances.control_abs) + ")");
        }
      }
    }
    for (std::size_t d = 0; d < st.dense.size(); ++d) {
      compare_dense_portion(sweep, direct, d, sc.tolerances.control_abs, report.mismatches);
    }
  }

  report.pass = report.mismatches.empty();
  for (const ScenarioRun& run : report.runs) {
    report.summary_lines.push_back(sc.name + ", " + run.solver + ", " +
                                   fmt17(run.result.objective) + ", " +
                                   fmt17(run.max_residual) + ", " +
                                   (report.pass ? "pass" : "fail"));
  }

  json summary{{"name", sc.name}, {"pass", report.pass}, {"runs", json::array()}};
  for (const ScenarioRun& run : report.runs) summary["runs"].push_back(summarize_run(run));
  summary["mismatches"] = report.mismatches;
  std::ofstream summary_out(path("summary.json"));
  summary_out << summary.dump(2) << "\n";

  return report;
}

void enforce(const RunReport& report) {
  if (report.pass) return;
  std::string what = report.name + " failed:";
  for (const std::string& m : report.mismatches) what += "\n  " + m;
  throw ExpectationMismatch(what);
}

namespace {

/// Solves the base consumption problem with sampling instants {a, lam, b}
/// and reports the two decisions and the cost.
SweepRow sweep_point(const Scenario& base, const TimeScale& state, double lam) {
  const TimeScale ts1 =
      TimeScale::unite(TimeScale::points({state.a(), state.b()}), TimeScale::points({lam}));
  const ControlProblem p(state, ts1, DynamicsSpec::consumption(),
                         ControlBox(base.omega_lo, base.omega_hi),
                         TerminalSpec::fixed_initial_free_final(base.q_a));
  const SolveResult res = solve_closed_form(p, effective_step(base));
  SweepRow row;
  row.lambda = lam;
  row.cost = res.objective;
  const auto& sc = res.control.structure().scattered;
  for (std::size_t k = 0; k < sc.size(); ++k) {
    if (std::abs(sc[k].r - state.a()) <= 1e-9) row.u_first = res.control.scattered_value(k)[0];
    if (std::abs(sc[k].r - lam) <= 1e-9) row.u_at_lambda = res.control.scattered_value(k)[0];
  }
  return row;
}

TimeScale sweep_state(const Scenario& base) {
  if (base.dynamics.at("id").get<std::string>() != "consumption") {
    throw UnsupportedScenario("the sampling-rate sweep covers consumption scenarios only");
  }
  TimeScale state = expand_generator(base.state_generator, base.a, base.b);
  if (state.segments().size() != 1 || state.discrete()) {
    throw UnsupportedScenario("the sweep needs a single continuum state segment");
  }
  return state;
}

double bisect_sweep(const Scenario& base, const TimeScale& state, double lo, double hi,
                    const std::function<double(const SweepRow&)>& f) {
  double flo = f(sweep_point(base, state, lo));
  while (hi - lo > kSweepRootTol) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(sweep_point(base, state, mid));
    if ((flo >= 0.0) == (fmid >= 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<SweepRow> sweep_lambda(const Scenario& base, double from, double to, int steps) {
  if (!(from < to) || steps < 1) throw InvalidRange("sweep needs from < to and steps >= 1");
  const TimeScale state = sweep_state(base);
  if (from <= state.a() || to >= state.b()) {
    throw InvalidRange("sweep rates must lie strictly inside the window");
  }
  std::vector<SweepRow> rows;
  for (int k = 0; k <= steps; ++k) {
    const double lam = from + (to - from) * double(k) / double(steps);
    rows.push_back(sweep_point(base, state, lam));
  }
  return rows;
}

SweepThresholds sweep_thresholds(const Scenario& base, const std::vector<SweepRow>& rows) {
  const TimeScale state = sweep_state(base);
  const auto u_first_margin = [](const SweepRow& r) { return r.u_first - (1.0 - kSweepMargin); };
  const auto u_lambda_margin = [](const SweepRow& r) { return r.u_at_lambda - kSweepMargin; };

  SweepThresholds th;
  bool found_first = false, found_lambda = false;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (!found_first && u_first_margin(rows[i]) >= 0.0 && u_first_margin(rows[i + 1]) < 0.0) {
      th.u_first_leaves_one =
          bisect_sweep(base, state, rows[i].lambda, rows[i + 1].lambda, u_first_margin);
      found_first = true;
    }
    if (!found_lambda && u_lambda_margin(rows[i]) > 0.0 && u_lambda_margin(rows[i + 1]) <= 0.0) {
      th.u_lambda_reaches_zero =
          bisect_sweep(base, state, rows[i].lambda, rows[i + 1].lambda, u_lambda_margin);
      found_lambda = true;
    }
  }
  if (!found_first || !found_lambda) {
    throw SolveError("sweep rows do not bracket both saturation thresholds");
  }
  return th;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "lambda,u_first,u_at_lambda,cost\n";
  for (const SweepRow& r : rows) {
    os << fmt17(r.lambda) << "," << fmt17(r.u_first) << "," << fmt17(r.u_at_lambda) << ","
       << fmt17(r.cost) << "\n";
  }
}

int compare_golden(const std::string& results_dir, const std::string& golden_path,
                   std::ostream& out) {
  namespace fs = std::filesystem;
  bool any_summary = false;
  if (fs::is_directory(results_dir)) {
    for (const auto& entry : fs::directory_iterator(results_dir)) {
      if (entry.path().filename().string().ends_with("_summary.json")) any_summary = true;
    }
  }
  if (!any_summary) {
    throw MissingResult("no scenario summaries under " + results_dir);
  }

  std::ifstream golden_in(golden_path);
  if (!golden_in) throw ParseError("cannot open golden file " + golden_path);
  json golden;
  try {
    golden_in >> golden;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON in ") + golden_path + ": " + e.what());
  }

  int failures = 0;
  try {
    for (const json& row : golden.at("rows")) {
      const std::string name = row.at("name").get<std::string>();
      const std::string solver = row.value("solver", std::string{"sweep"});
      const std::string quantity = row.at("quantity").get<std::string>();
      const double expected = row.at("expected").get<double>();
      const double tolerance = row.at("tolerance").get<double>();
      const bool relative = row.value("mode", std::string{"rel"}) == "rel";

      const std::string summary_path = results_dir + "/" + name + "_summary.json";
      std::ifstream summary_in(summary_path);
      if (!summary_in) throw MissingResult("no summary for scenario " + name);
      json summary;
      summary_in >> summary;

      const json* run = nullptr;
      for (const json& r : summary.at("runs")) {
        if (r.at("solver").get<std::string>() == solver) run = &r;
      }
      if (run == nullptr) throw MissingResult("scenario " + name + " has no " + solver + " run");

      double got = 0.0;
      std::string label = quantity;
      if (quantity == "cost") {
        got = run->at("cost").get<double>();
      } else if (quantity == "control") {
        const double t = row.at("t").get<double>();
        const std::size_t component = row.value("component", std::size_t{0});
        label = "control(t=" + fmt17(t) + ")";
        const json* found = nullptr;
        for (const json& c : run->at("controls")) {
          if (std::abs(c.at("t").get<double>() - t) <= 1e-9) found = &c;
        }
        if (found == nullptr) {
          throw MissingResult("scenario " + name + " records no control at t = " + fmt17(t));
        }
        got = found->at("value").at(component).get<double>();
      } else {
        throw ParseError("unknown golden quantity \"" + quantity + "\"");
      }

      const double bound = relative ? tolerance * std::abs(expected) : tolerance;
      const bool pass = std::abs(got - expected) <= bound;
      failures += pass ? 0 : 1;
      out << name << ", " << solver << ", " << label << ": expected " << fmt17(expected)
          << ", got " << fmt17(got) << ", " << (pass ? "PASS" : "FAIL") << "\n";
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed golden or summary file: ") + e.what());
  }
  return failures;
}

}  // namespace tspmp
