// SPDX-License-Identifier: MIT
#include "tspmp/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace tspmp {

namespace {

// dH/dq with the successor adjoint value: (df/dq)^T p + p0 df0/dq.
Vec ham_state_grad(const DynamicsEval& e, const Vec& p_sigma, double p0) {
  Vec g = matTvec(e.df_dq, p_sigma);
  axpy(p0, e.df0_dq, g);
  return g;
}

void ensure_finite(const Vec& q, double t) {
  for (double v : q) {
    if (!std::isfinite(v)) {
      throw NonFiniteState("state became non-finite at t = " + std::to_string(t));
    }
  }
}

// Cubic Hermite midpoint of q on one gap; keeps the interpolated state as
// accurate as the RK4 nodes themselves.
Vec hermite_mid(const Vec& q0, const Vec& f0, const Vec& q1, const Vec& f1, double dt) {
  Vec m(q0.size());
  for (std::size_t i = 0; i < q0.size(); ++i) {
    m[i] = 0.5 * (q0[i] + q1[i]) + 0.125 * dt * (f0[i] - f1[i]);
  }
  return m;
}

std::size_t find_node(const std::vector<GridNode>& grid, double t) {
  auto it = std::lower_bound(grid.begin(), grid.end(), t,
                             [](const GridNode& n, double v) { return n.t < v; });
  for (auto c : {it, it == grid.begin() ? it : it - 1}) {
    if (c != grid.end() && std::abs(c->t - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
      return static_cast<std::size_t>(c - grid.begin());
    }
  }
  throw GridMismatch("instant t = " + std::to_string(t) + " is not a grid node");
}

// Action of the augmented linearized dynamics on w = (w_state, w_cost):
// the cost row depends on the state part only.
Vec aug_A(const DynamicsEval& e, const Vec& w) {
  const std::size_t n = e.f.size();
  Vec out(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += e.df_dq.at(i, j) * w[j];
  }
  for (std::size_t j = 0; j < n; ++j) out[n] += e.df0_dq[j] * w[j];
  return out;
}

Vec aug_B(const DynamicsEval& e, const Vec& v) {
  const std::size_t n = e.f.size();
  const std::size_t m = v.size();
  Vec out(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) out[i] += e.df_du.at(i, k) * v[k];
  }
  for (std::size_t k = 0; k < m; ++k) out[n] += e.df0_du[k] * v[k];
  return out;
}

/// Advances the augmented linear variation system from node i0 to node i1
/// along the stored trajectory. With `delta_u` the system is forced by the
/// constant control offset; with `frozen_ctrl` the coefficient matrices use
/// that control value instead of the sampled control (needed while a
/// scattered decision is being varied).
void advance_linear(const ControlProblem& p, const SampledControl& u, const Trajectory& tr,
                    std::size_t i0, std::size_t i1, Vec& w, const Vec* delta_u,
                    const Vec* frozen_ctrl) {
  const auto& grid = tr.grid;
  for (std::size_t i = i0; i < i1; ++i) {
    const double t = grid[i].t;
    const Vec ui = frozen_ctrl ? *frozen_ctrl : u.value(t);
    const auto rhs = [&](const DynamicsEval& e, const Vec& x) {
      Vec r = aug_A(e, x);
      if (delta_u) axpy(1.0, aug_B(e, *delta_u), r);
      return r;
    };
    if (grid[i].cls.kind == PointKind::RightScattered) {
      const DynamicsEval e = p.dynamics().eval(t, tr.q[i], ui);
      axpy(grid[i].cls.mu, rhs(e, w), w);
    } else {
      const double dt = grid[i + 1].t - t;
      const DynamicsEval e0 = p.dynamics().eval(t, tr.q[i], ui);
      const DynamicsEval e1 = p.dynamics().eval(t + dt, tr.q[i + 1], ui);
      const Vec qm = hermite_mid(tr.q[i], e0.f, tr.q[i + 1], e1.f, dt);
      const DynamicsEval em = p.dynamics().eval(t + 0.5 * dt, qm, ui);

      const Vec k1 = rhs(e0, w);
      Vec x = w;
      axpy(0.5 * dt, k1, x);
      const Vec k2 = rhs(em, x);
      x = w;
      axpy(0.5 * dt, k2, x);
      const Vec k3 = rhs(em, x);
      x = w;
      axpy(dt, k3, x);
      const Vec k4 = rhs(e1, x);
      for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      }
    }
  }
}

void append_num(std::string& row, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), ",%.17g", v);
  row += buf;
}

}  // namespace

Trajectory forward(const ControlProblem& p, const SampledControl& u, const Vec& q_a, double h,
                   const std::vector<double>& extra) {
  if (q_a.size() != p.n()) throw DimensionMismatch("initial state has wrong size");

  std::vector<double> nodes = extra;
  for (double e : u.interior_edges()) nodes.push_back(e);

  Trajectory tr;
  tr.grid = build_grid(p.state_scale(), p.control_scale(), h, nodes);
  const std::size_t N = tr.grid.size();
  tr.q.assign(N, Vec());
  tr.q0.assign(N, 0.0);
  tr.q[0] = q_a;

  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double t = tr.grid[i].t;
    const Vec ui = u.value(t);
    if (tr.grid[i].cls.kind == PointKind::RightScattered) {
      const double mu = tr.grid[i].cls.mu;
      const DynamicsEval e = p.dynamics().eval(t, tr.q[i], ui);
      tr.q[i + 1] = tr.q[i];
      axpy(mu, e.f, tr.q[i + 1]);
      tr.q0[i + 1] = tr.q0[i] + mu * e.f0;
    } else {
      // One RK4 step of the augmented system (q, q0); the running cost gets
      // the same fourth order as the state, so the discretized objective's
      // optimizer stays within rounding of the continuous optimum.
      const double dt = tr.grid[i + 1].t - t;
      const DynamicsEval e1 = p.dynamics().eval(t, tr.q[i], ui);
      Vec x = tr.q[i];
      axpy(0.5 * dt, e1.f, x);
      const DynamicsEval e2 = p.dynamics().eval(t + 0.5 * dt, x, ui);
      x = tr.q[i];
      axpy(0.5 * dt, e2.f, x);
      const DynamicsEval e3 = p.dynamics().eval(t + 0.5 * dt, x, ui);
      x = tr.q[i];
      axpy(dt, e3.f, x);
      const DynamicsEval e4 = p.dynamics().eval(t + dt, x, ui);

      tr.q[i + 1] = tr.q[i];
      for (std::size_t j = 0; j < tr.q[i].size(); ++j) {
        tr.q[i + 1][j] += dt / 6.0 * (e1.f[j] + 2.0 * e2.f[j] + 2.0 * e3.f[j] + e4.f[j]);
      }
      tr.q0[i + 1] = tr.q0[i] + dt / 6.0 * (e1.f0 + 2.0 * e2.f0 + 2.0 * e3.f0 + e4.f0);
    }
    ensure_finite(tr.q[i + 1], tr.grid[i + 1].t);
  }
  return tr;
}

AdjointArc backward_adjoint(const ControlProblem& p, const SampledControl& u,
                            const Trajectory& traj, Vec p_b, double p0) {
  const std::size_t N = traj.grid.size();
  if (traj.q.size() != N || traj.q0.size() != N || N == 0) {
    throw GridMismatch("trajectory arrays are inconsistent");
  }
  if (p_b.size() != p.n()) throw DimensionMismatch("terminal adjoint has wrong size");
  if (p0 > 0.0) throw InvalidRange("cost multiplier must be nonpositive");

  AdjointArc arc;
  arc.p0 = p0;
  arc.p.assign(N, Vec());
  arc.p[N - 1] = std::move(p_b);

  for (std::size_t i = N - 1; i-- > 0;) {
    const double t = traj.grid[i].t;
    const Vec ui = u.value(t);
    const Vec& pn = arc.p[i + 1];
    if (traj.grid[i].cls.kind == PointKind::RightScattered) {
      const DynamicsEval e = p.dynamics().eval(t, traj.q[i], ui);
      arc.p[i] = pn;
      axpy(traj.grid[i].cls.mu, ham_state_grad(e, pn, p0), arc.p[i]);
    } else {
      const double dt = traj.grid[i + 1].t - t;
      const DynamicsEval e0 = p.dynamics().eval(t, traj.q[i], ui);
      const DynamicsEval e1 = p.dynamics().eval(t + dt, traj.q[i + 1], ui);
      const Vec qm = hermite_mid(traj.q[i], e0.f, traj.q[i + 1], e1.f, dt);
      const DynamicsEval em = p.dynamics().eval(t + 0.5 * dt, qm, ui);

      // Backward RK4 for dp/dt = -dH/dq(t, q(t), p, p0, u).
      const auto g = [&](const DynamicsEval& e, const Vec& pv) {
        Vec r = ham_state_grad(e, pv, p0);
        for (double& v : r) v = -v;
        return r;
      };
      const Vec k1 = g(e1, pn);
      Vec x = pn;
      axpy(-0.5 * dt, k1, x);
      const Vec k2 = g(em, x);
      x = pn;
      axpy(-0.5 * dt, k2, x);
      const Vec k3 = g(em, x);
      x = pn;
      axpy(-dt, k3, x);
      const Vec k4 = g(e0, x);
      arc.p[i] = pn;
      for (std::size_t j = 0; j < pn.size(); ++j) {
        arc.p[i][j] -= dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      }
    }
    ensure_finite(arc.p[i], t);
  }
  return arc;
}

VariationResult variation_endpoint(const ControlProblem& p, const SampledControl& u,
                                   const Trajectory& traj, const VariationRequest& req) {
  const std::size_t N = traj.grid.size();
  if (traj.q.size() != N || N == 0) throw GridMismatch("trajectory arrays are inconsistent");
  const std::size_t n = p.n();

  VariationResult out;
  switch (req.kind) {
    case VariationKind::Scattered: {
      const double r = p.control_scale().snap(req.at);
      const auto& sc = u.structure().scattered;
      std::size_t k = sc.size();
      for (std::size_t j = 0; j < sc.size(); ++j) {
        if (sc[j].r == r) k = j;
      }
      if (k == sc.size()) {
        throw WrongPointClass("variation target is not a scattered sampling instant");
      }
      if (req.direction.size() != p.m() || !p.omega().contains(req.direction)) {
        throw ConstraintViolation("variation target control must lie in the box");
      }
      const Vec ur = u.scattered_value(k);
      Vec delta = req.direction;
      for (std::size_t j = 0; j < delta.size(); ++j) delta[j] -= ur[j];

      const std::size_t ir = find_node(traj.grid, r);
      const std::size_t is = find_node(traj.grid, sc[k].sigma_star);
      Vec w(n + 1, 0.0);
      advance_linear(p, u, traj, ir, is, w, &delta, &ur);
      out.start_t = sc[k].sigma_star;
      out.w_start = w;
      advance_linear(p, u, traj, is, N - 1, w, nullptr, nullptr);
      out.w_b.assign(w.begin(), w.begin() + n);
      out.w0_b = w[n];
      return out;
    }
    case VariationKind::Dense: {
      const double s = p.control_scale().snap(req.at);
      bool dense_instant = false;
      for (const auto& d : u.structure().dense) {
        if (d.lo <= s && s < d.hi) dense_instant = true;
      }
      if (!dense_instant) {
        throw WrongPointClass("variation instant is not in a permanent-control portion");
      }
      if (req.direction.size() != p.m() || !p.omega().contains(req.direction)) {
        throw ConstraintViolation("variation target control must lie in the box");
      }
      const std::size_t is = find_node(traj.grid, s);
      const Vec us = u.value(s);
      const DynamicsEval ez = p.dynamics().eval(s, traj.q[is], req.direction);
      const DynamicsEval eu = p.dynamics().eval(s, traj.q[is], us);
      Vec w(n + 1, 0.0);
      for (std::size_t j = 0; j < n; ++j) w[j] = ez.f[j] - eu.f[j];
      w[n] = ez.f0 - eu.f0;
      out.start_t = s;
      out.w_start = w;
      advance_linear(p, u, traj, is, N - 1, w, nullptr, nullptr);
      out.w_b.assign(w.begin(), w.begin() + n);
      out.w0_b = w[n];
      return out;
    }
    case VariationKind::Initial: {
      if (req.direction.size() != n) throw DimensionMismatch("initial direction has wrong size");
      Vec w(n + 1, 0.0);
      for (std::size_t j = 0; j < n; ++j) w[j] = req.direction[j];
      out.start_t = traj.grid.front().t;
      out.w_start = w;
      advance_linear(p, u, traj, 0, N - 1, w, nullptr, nullptr);
      out.w_b.assign(w.begin(), w.begin() + n);
      out.w0_b = w[n];
      return out;
    }
  }
  throw Error("unreachable variation kind");
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const AdjointArc* adj) {
  const std::size_t N = traj.grid.size();
  if (adj && adj->p.size() != N) throw GridMismatch("adjoint arc is not on the trajectory grid");
  const std::size_t n = N == 0 ? 0 : traj.q.front().size();

  std::string header = "t,class";
  for (std::size_t j = 1; j <= n; ++j) header += ",q" + std::to_string(j);
  header += ",q0";
  if (adj) {
    for (std::size_t j = 1; j <= n; ++j) header += ",p" + std::to_string(j);
    header += ",p0";
  }
  os << header << "\n";

  for (std::size_t i = 0; i < N; ++i) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", traj.grid[i].t);
    std::string row = buf;
    row += traj.grid[i].cls.kind == PointKind::RightScattered ? ",rs" : ",rd";
    for (std::size_t j = 0; j < n; ++j) append_num(row, traj.q[i][j]);
    append_num(row, traj.q0[i]);
    if (adj) {
      for (std::size_t j = 0; j < n; ++j) append_num(row, adj->p[i][j]);
      append_num(row, adj->p0);
    }
    os << row << "\n";
  }
}

}  // namespace tspmp
