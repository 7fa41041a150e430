// SPDX-License-Identifier: MIT
#include "tspmp/pmp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace tspmp {

namespace {

std::size_t node_index(const std::vector<GridNode>& grid, double t) {
  auto it = std::lower_bound(grid.begin(), grid.end(), t,
                             [](const GridNode& n, double v) { return n.t < v; });
  for (auto c : {it, it == grid.begin() ? it : it - 1}) {
    if (c != grid.end() && std::abs(c->t - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
      return static_cast<std::size_t>(c - grid.begin());
    }
  }
  throw GridMismatch("instant t = " + std::to_string(t) + " is not a grid node");
}

void check_aligned(const Trajectory& traj, const AdjointArc& adj) {
  const std::size_t N = traj.grid.size();
  if (N == 0 || traj.q.size() != N || adj.p.size() != N) {
    throw GridMismatch("trajectory and adjoint are not on one grid");
  }
}

/// Adjoint value paired with node i in jump-aware expressions: the successor
/// node's value after a gap, the node's own value inside a continuum run.
const Vec& successor_adjoint(const std::vector<GridNode>& grid, const AdjointArc& adj,
                             std::size_t i) {
  const bool scattered = grid[i].cls.kind == PointKind::RightScattered;
  return scattered && i + 1 < adj.p.size() ? adj.p[i + 1] : adj.p[i];
}

/// Integral of dH/du over grid nodes [i0, i1] with the control frozen.
Vec interval_gradient(const ControlProblem& p, const Trajectory& tr, const AdjointArc& adj,
                      std::size_t i0, std::size_t i1, const Vec& frozen) {
  const std::size_t m = frozen.size();
  std::vector<Vec> node_grad(i1 - i0 + 1);
  for (std::size_t i = i0; i <= i1; ++i) {
    node_grad[i - i0] = hamiltonian_control_gradient(
        p, tr.grid[i].t, tr.q[i], successor_adjoint(tr.grid, adj, i), adj.p0, frozen);
  }
  Vec out(m, 0.0);
  std::vector<double> vals(tr.grid.size(), 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = i0; i <= i1; ++i) vals[i] = node_grad[i - i0][j];
    out[j] = grid_delta_integral(tr.grid, vals, i0, i1);
  }
  return out;
}

double inf_norm_diff(const Vec& x, const Vec& y) {
  double m = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) m = std::max(m, std::abs(x[j] - y[j]));
  return m;
}

void append_num(std::string& row, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), ",%.17g", v);
  row += buf;
}

}  // namespace

double hamiltonian(const ControlProblem& problem, double t, const Vec& q, const Vec& p,
                   double p0, const Vec& u) {
  const DynamicsEval e = eval_dynamics(problem, t, q, u);
  return dot(p, e.f) + p0 * e.f0;
}

Vec hamiltonian_control_gradient(const ControlProblem& problem, double t, const Vec& q,
                                 const Vec& p, double p0, const Vec& u) {
  const DynamicsEval e = eval_dynamics(problem, t, q, u);
  Vec g = matTvec(e.df_du, p);
  axpy(p0, e.df0_du, g);
  return g;
}

Vec hamiltonian_state_gradient(const ControlProblem& problem, double t, const Vec& q,
                               const Vec& p, double p0, const Vec& u) {
  const DynamicsEval e = eval_dynamics(problem, t, q, u);
  Vec g = matTvec(e.df_dq, p);
  axpy(p0, e.df0_dq, g);
  return g;
}

std::vector<Vec> scattered_gradients(const ControlProblem& problem, const SampledControl& u,
                                     const Trajectory& traj, const AdjointArc& adj) {
  check_aligned(traj, adj);
  const auto& sc = u.structure().scattered;
  std::vector<Vec> out;
  out.reserve(sc.size());
  for (std::size_t k = 0; k < sc.size(); ++k) {
    const std::size_t i0 = node_index(traj.grid, sc[k].r);
    const std::size_t i1 = node_index(traj.grid, sc[k].sigma_star);
    out.push_back(interval_gradient(problem, traj, adj, i0, i1, u.scattered_value(k)));
  }
  return out;
}

std::vector<Vec> dense_gradients(const ControlProblem& problem, const SampledControl& u,
                                 const Trajectory& traj, const AdjointArc& adj,
                                 std::size_t portion) {
  check_aligned(traj, adj);
  if (portion >= u.structure().dense.size()) throw InvalidRange("no such permanent portion");
  const auto& table = u.dense_table(portion);
  std::vector<Vec> out;
  out.reserve(table.values.size());
  for (std::size_t c = 0; c < table.values.size(); ++c) {
    const std::size_t i0 = node_index(traj.grid, table.edges[c]);
    const std::size_t i1 = node_index(traj.grid, table.edges[c + 1]);
    out.push_back(interval_gradient(problem, traj, adj, i0, i1, table.values[c]));
  }
  return out;
}

bool CertificateReport::certified() const {
  return std::all_of(rows.begin(), rows.end(), [](const Residual& r) { return r.pass; });
}

const Residual* CertificateReport::find(std::string_view name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

double CertificateReport::value_of(std::string_view name) const {
  const Residual* r = find(name);
  if (!r) throw MissingResult("no residual named " + std::string(name));
  return r->value;
}

void CertificateReport::write_text(std::ostream& os) const {
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), " = %.12g (tolerance %.6g) ", r.value, r.tolerance);
    os << r.name << buf << (r.pass ? "PASS" : "FAIL") << "\n";
  }
  os << (certified() ? "certified: all optimality residuals within bounds"
                     : "not certified: at least one residual out of bounds")
     << "\n";
}

void CertificateReport::write_csv(std::ostream& os) const {
  os << "name,residual,tolerance,pass\n";
  for (const auto& r : rows) {
    std::string row = r.name;
    append_num(row, r.value);
    append_num(row, r.tolerance);
    row += r.pass ? ",1" : ",0";
    os << row << "\n";
  }
}

CertificateReport evaluate_certificate(const ControlProblem& problem, const SampledControl& u,
                                       const Trajectory& traj, const AdjointArc& adj) {
  check_aligned(traj, adj);
  const auto& grid = traj.grid;
  const std::size_t N = grid.size();

  double p_scale = 0.0;
  for (const Vec& pv : adj.p) p_scale = std::max(p_scale, inf_norm(pv));
  const double adjoint_tol = kAdjointDefectTol * (1.0 + p_scale);

  CertificateReport rep;
  const auto push = [&](std::string name, double value, double tol) {
    rep.rows.push_back({std::move(name), value, tol, value <= tol});
  };

  // Difference form of the adjoint equation at every right-scattered node.
  double scattered_defect = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    if (grid[i].cls.kind != PointKind::RightScattered) continue;
    const double mu = grid[i].cls.mu;
    const Vec g = hamiltonian_state_gradient(problem, grid[i].t, traj.q[i], adj.p[i + 1],
                                             adj.p0, u.value(grid[i].t));
    for (std::size_t j = 0; j < g.size(); ++j) {
      scattered_defect =
          std::max(scattered_defect, std::abs((adj.p[i + 1][j] - adj.p[i][j]) / mu + g[j]));
    }
  }
  push("adjoint_defect_scattered", scattered_defect, adjoint_tol);

  // Differential form at interior nodes of continuum runs, three-point
  // stencil; skipped where the control switches or the run ends since the
  // adjoint is only continuous across such nodes.
  double dense_defect = 0.0;
  for (std::size_t i = 1; i + 1 < N; ++i) {
    if (grid[i - 1].cls.kind != PointKind::RightDense ||
        grid[i].cls.kind != PointKind::RightDense) {
      continue;
    }
    const Vec um = u.value(grid[i - 1].t);
    const Vec ui = u.value(grid[i].t);
    if (um != ui || ui != u.value(grid[i + 1].t)) continue;

    const double h1 = grid[i].t - grid[i - 1].t;
    const double h2 = grid[i + 1].t - grid[i].t;
    const double c0 = -h2 / (h1 * (h1 + h2));
    const double c1 = (h2 - h1) / (h1 * h2);
    const double c2 = h1 / (h2 * (h1 + h2));
    const Vec g =
        hamiltonian_state_gradient(problem, grid[i].t, traj.q[i], adj.p[i], adj.p0, ui);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double deriv = c0 * adj.p[i - 1][j] + c1 * adj.p[i][j] + c2 * adj.p[i + 1][j];
      dense_defect = std::max(dense_defect, std::abs(deriv + g[j]));
    }
  }
  push("adjoint_defect_dense", dense_defect, adjoint_tol);

  // Pointwise maximum condition on densely sampled portions: no scanned
  // control value may beat the candidate by more than noise, relative to the
  // local Hamiltonian size.
  double max_defect = 0.0;
  const std::vector<Vec> scan = problem.omega().scan_grid(kCertificateScanPoints);
  for (const auto& d : u.structure().dense) {
    const std::size_t i0 = node_index(grid, d.lo);
    const std::size_t i1 = node_index(grid, d.hi);
    for (std::size_t i = i0; i < i1; ++i) {
      const double h_here = hamiltonian(problem, grid[i].t, traj.q[i], adj.p[i], adj.p0,
                                        u.value(grid[i].t));
      double best = h_here;
      for (const Vec& z : scan) {
        best = std::max(best,
                        hamiltonian(problem, grid[i].t, traj.q[i], adj.p[i], adj.p0, z));
      }
      max_defect = std::max(max_defect, (best - h_here) / (1.0 + std::abs(h_here)));
    }
  }
  push("dense_maximum_defect", max_defect, kMaximumDefectTol);

  // First-order optimality of each scattered decision over its interval:
  // no box corner (nor the center) may offer an ascent direction.
  double stationarity_defect = 0.0;
  const std::vector<Vec> probes = problem.omega().probe_points();
  const auto& sc = u.structure().scattered;
  for (std::size_t k = 0; k < sc.size(); ++k) {
    const std::size_t i0 = node_index(grid, sc[k].r);
    const std::size_t i1 = node_index(grid, sc[k].sigma_star);
    const Vec& uk = u.scattered_value(k);
    const Vec grad = interval_gradient(problem, traj, adj, i0, i1, uk);
    double h_scale = 0.0;
    for (std::size_t i = i0; i <= i1; ++i) {
      h_scale = std::max(h_scale, std::abs(hamiltonian(problem, grid[i].t, traj.q[i],
                                                       successor_adjoint(grid, adj, i),
                                                       adj.p0, uk)));
    }
    for (const Vec& y : probes) {
      double improvement = 0.0;
      for (std::size_t j = 0; j < grad.size(); ++j) improvement += grad[j] * (y[j] - uk[j]);
      stationarity_defect = std::max(stationarity_defect, improvement / (1.0 + h_scale));
    }
  }
  push("scattered_stationarity_defect", stationarity_defect, kMaximumDefectTol);

  switch (problem.terminal().kind) {
    case TerminalKind::FixedInitialFreeFinal:
      push("transversality_terminal", inf_norm(adj.p.back()), kTransversalityTol);
      push("cost_multiplier_normalization", std::abs(adj.p0 + 1.0), kTransversalityTol);
      break;
    case TerminalKind::Periodic:
      push("transversality_periodic", inf_norm_diff(adj.p.front(), adj.p.back()),
           kTransversalityTol);
      break;
    case TerminalKind::FixedBoth: {
      // Fixed endpoints leave the adjoint free; only triviality of the whole
      // multiplier pair disqualifies a candidate.  Indicator residual.
      const bool trivial = p_scale == 0.0 && adj.p0 == 0.0;
      push("multiplier_nontriviality", trivial ? 1.0 : 0.0, 0.5);
      break;
    }
  }

  if (problem.terminal().free_final_time &&
      problem.state_scale().segments().back().lo < problem.b()) {
    const double hb = hamiltonian(problem, grid.back().t, traj.q.back(), adj.p.back(), adj.p0,
                                  u.value(grid.back().t));
    push("final_time_stationarity", std::abs(hb), kTransversalityTol);
  }

  return rep;
}

}  // namespace tspmp
