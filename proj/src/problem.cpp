// SPDX-License-Identifier: MIT
#include "tspmp/problem.hpp"

#include <algorithm>
#include <cmath>

namespace tspmp {

namespace {

void check_square(const Mat& m, std::size_t n, const char* what) {
  if (m.rows != n || m.cols != n) throw DimensionMismatch(std::string(what) + " has wrong shape");
}

Mat symmetrized(Mat m) {
  Mat out = m;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      out.at(i, j) = 0.5 * (m.at(i, j) + m.at(j, i));
    }
  }
  return out;
}

}  // namespace

DynamicsSpec DynamicsSpec::consumption() {
  return DynamicsSpec(Kind::Consumption, "consumption", 1, 1);
}

DynamicsSpec DynamicsSpec::linear_quadratic(Mat A, Mat B, Mat Q, Mat R) {
  if (A.rows != A.cols || A.rows == 0) throw DimensionMismatch("A must be square and nonempty");
  const std::size_t n = A.rows;
  if (B.rows != n || B.cols == 0) throw DimensionMismatch("B must have n rows");
  const std::size_t m = B.cols;
  check_square(Q, n, "Q");
  check_square(R, m, "R");
  DynamicsSpec spec(Kind::LinearQuadratic, "linear_quadratic", n, m);
  spec.A_ = std::move(A);
  spec.B_ = std::move(B);
  spec.Q_ = symmetrized(std::move(Q));
  spec.R_ = symmetrized(std::move(R));
  return spec;
}

DynamicsEval DynamicsSpec::eval(double /*t*/, const Vec& q, const Vec& u) const {
  if (q.size() != n_) throw DimensionMismatch("state vector has wrong size");
  if (u.size() != m_) throw DimensionMismatch("control vector has wrong size");

  DynamicsEval out;
  switch (kind_) {
    case Kind::Consumption: {
      out.f = {u[0] * q[0]};
      out.f0 = (u[0] - 1.0) * q[0];
      out.df_dq = Mat(1, 1);
      out.df_dq.at(0, 0) = u[0];
      out.df_du = Mat(1, 1);
      out.df_du.at(0, 0) = q[0];
      out.df0_dq = {u[0] - 1.0};
      out.df0_du = {q[0]};
      break;
    }
    case Kind::LinearQuadratic: {
      out.f = matvec(A_, q);
      axpy(1.0, matvec(B_, u), out.f);
      const Vec Qq = matvec(Q_, q);
      const Vec Ru = matvec(R_, u);
      out.f0 = 0.5 * (dot(q, Qq) + dot(u, Ru));
      out.df_dq = A_;
      out.df_du = B_;
      out.df0_dq = Qq;
      out.df0_du = Ru;
      break;
    }
  }
  return out;
}

ControlBox::ControlBox(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.empty() || lo_.size() != hi_.size()) {
    throw DimensionMismatch("control box bounds must be nonempty and equally sized");
  }
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!(lo_[i] <= hi_[i])) throw InvalidRange("control box has lo > hi");
  }
}

Vec ControlBox::clamp(Vec u) const {
  if (u.size() != lo_.size()) throw DimensionMismatch("control vector has wrong size");
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = std::min(std::max(u[i], lo_[i]), hi_[i]);
  }
  return u;
}

bool ControlBox::contains(const Vec& u, double tol) const {
  if (u.size() != lo_.size()) return false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < lo_[i] - tol || u[i] > hi_[i] + tol) return false;
  }
  return true;
}

std::vector<Vec> ControlBox::probe_points() const {
  const std::size_t m = dim();
  if (m > 16) throw UnsupportedScenario("control dimension too large for vertex probing");
  std::vector<Vec> pts;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    Vec v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = (mask >> i) & 1 ? hi_[i] : lo_[i];
    pts.push_back(std::move(v));
  }
  Vec center(m);
  for (std::size_t i = 0; i < m; ++i) center[i] = 0.5 * (lo_[i] + hi_[i]);
  pts.push_back(std::move(center));
  return pts;
}

std::vector<Vec> ControlBox::scan_grid(std::size_t per_axis) const {
  const std::size_t m = dim();
  if (per_axis < 2) throw InvalidRange("scan grid needs at least two values per axis");
  if (m > 4) throw UnsupportedScenario("control dimension too large for a dense scan");
  std::vector<Vec> pts;
  std::vector<std::size_t> idx(m, 0);
  while (true) {
    Vec v(m);
    for (std::size_t i = 0; i < m; ++i) {
      v[i] = lo_[i] + (hi_[i] - lo_[i]) * static_cast<double>(idx[i]) /
                          static_cast<double>(per_axis - 1);
    }
    pts.push_back(std::move(v));
    std::size_t i = 0;
    for (; i < m; ++i) {
      if (++idx[i] < per_axis) break;
      idx[i] = 0;
    }
    if (i == m) break;
  }
  return pts;
}

TerminalSpec TerminalSpec::fixed_initial_free_final(Vec qa, bool free_time) {
  TerminalSpec t;
  t.kind = TerminalKind::FixedInitialFreeFinal;
  t.q_a = std::move(qa);
  t.free_final_time = free_time;
  return t;
}

TerminalSpec TerminalSpec::fixed_both(Vec qa, Vec qb, bool free_time) {
  TerminalSpec t;
  t.kind = TerminalKind::FixedBoth;
  t.q_a = std::move(qa);
  t.q_b = std::move(qb);
  t.free_final_time = free_time;
  return t;
}

TerminalSpec TerminalSpec::periodic(bool free_time) {
  TerminalSpec t;
  t.kind = TerminalKind::Periodic;
  t.free_final_time = free_time;
  return t;
}

ControlProblem::ControlProblem(TimeScale state_scale, TimeScale control_scale,
                               DynamicsSpec dynamics, ControlBox omega, TerminalSpec terminal)
    : state_scale_(std::move(state_scale)),
      control_scale_(std::move(control_scale)),
      dynamics_(std::move(dynamics)),
      omega_(std::move(omega)),
      terminal_(std::move(terminal)) {
  if (control_scale_.a() != state_scale_.a()) {
    throw InvalidRange("state and sampling scales must share their first instant");
  }
  // Every sampling segment must sit inside one state segment.
  const auto& ss = state_scale_.segments();
  for (const auto& c : control_scale_.segments()) {
    const bool inside = std::any_of(ss.begin(), ss.end(), [&](const TimeScale::Segment& s) {
      return s.lo <= c.lo && c.hi <= s.hi;
    });
    if (!inside) throw InvalidRange("sampling scale is not a subset of the state scale");
  }
  if (omega_.dim() != dynamics_.control_dim()) {
    throw DimensionMismatch("control box dimension disagrees with the dynamics");
  }
  const std::size_t n = dynamics_.state_dim();
  switch (terminal_.kind) {
    case TerminalKind::FixedInitialFreeFinal:
      if (terminal_.q_a.size() != n) throw DimensionMismatch("initial state has wrong size");
      break;
    case TerminalKind::FixedBoth:
      if (terminal_.q_a.size() != n || terminal_.q_b.size() != n) {
        throw DimensionMismatch("endpoint states have wrong size");
      }
      break;
    case TerminalKind::Periodic:
      break;
  }
}

ControlStructure control_structure(const ControlProblem& p) {
  ControlStructure cs;
  const auto& segs = p.control_scale().segments();
  const double b = p.b();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    const double next = (i + 1 < segs.size()) ? segs[i + 1].lo : b;
    if (s.lo == s.hi) {
      // Isolated sampling instant; the decision holds to the next sampling
      // instant or to the window end, whichever comes first.
      if (s.lo < b) cs.scattered.push_back({s.lo, std::min(next, b)});
    } else {
      cs.dense.push_back({s.lo, std::min(s.hi, b)});
      // A continuum piece ending before b leaves its final instant in charge
      // of the remaining gap, as a scattered decision.
      if (s.hi < b) cs.scattered.push_back({s.hi, std::min(next, b)});
    }
  }
  return cs;
}

SampledControl::SampledControl(TimeScale control_scale, ControlBox box, ControlStructure structure)
    : control_scale_(std::move(control_scale)),
      box_(std::move(box)),
      structure_(std::move(structure)) {
  scattered_.assign(structure_.scattered.size(), Vec(box_.dim(), 0.0));
  dense_.resize(structure_.dense.size());
  for (std::size_t k = 0; k < dense_.size(); ++k) {
    dense_[k].edges = {structure_.dense[k].lo, structure_.dense[k].hi};
    dense_[k].values = {Vec(box_.dim(), 0.0)};
  }
}

SampledControl SampledControl::constant(const ControlProblem& p, Vec u) {
  if (u.size() != p.m()) throw DimensionMismatch("control vector has wrong size");
  SampledControl c(p.control_scale(), p.omega(), control_structure(p));
  const Vec v = c.box_.clamp(std::move(u));
  for (auto& s : c.scattered_) s = v;
  for (auto& t : c.dense_) t.values[0] = v;
  return c;
}

void SampledControl::set_scattered_value(std::size_t k, Vec u) {
  if (k >= scattered_.size()) throw InvalidRange("scattered control index out of range");
  if (u.size() != box_.dim()) throw DimensionMismatch("control vector has wrong size");
  scattered_[k] = box_.clamp(std::move(u));
}

void SampledControl::set_dense_table(std::size_t k, Table table) {
  if (k >= dense_.size()) throw InvalidRange("dense portion index out of range");
  const DensePortion& portion = structure_.dense[k];
  if (table.edges.size() < 2 || table.values.size() + 1 != table.edges.size()) {
    throw InvalidRange("dense table needs one value per cell");
  }
  if (std::abs(table.edges.front() - portion.lo) > kNodeMergeTol ||
      std::abs(table.edges.back() - portion.hi) > kNodeMergeTol) {
    throw InvalidRange("dense table must span its portion exactly");
  }
  table.edges.front() = portion.lo;
  table.edges.back() = portion.hi;
  for (std::size_t i = 0; i + 1 < table.edges.size(); ++i) {
    if (!(table.edges[i] < table.edges[i + 1])) {
      throw InvalidRange("dense table edges must increase strictly");
    }
  }
  for (auto& v : table.values) {
    if (v.size() != box_.dim()) throw DimensionMismatch("control vector has wrong size");
    v = box_.clamp(std::move(v));
  }
  dense_[k] = std::move(table);
}

void SampledControl::set_dense_value(std::size_t k, Vec u) {
  if (k >= dense_.size()) throw InvalidRange("dense portion index out of range");
  Table t;
  t.edges = {structure_.dense[k].lo, structure_.dense[k].hi};
  t.values = {std::move(u)};
  set_dense_table(k, std::move(t));
}

void SampledControl::set_dense_cell(std::size_t k, std::size_t cell, Vec u) {
  if (k >= dense_.size()) throw InvalidRange("dense portion index out of range");
  if (cell >= dense_[k].values.size()) throw InvalidRange("dense cell index out of range");
  if (u.size() != box_.dim()) throw DimensionMismatch("control vector has wrong size");
  dense_[k].values[cell] = box_.clamp(std::move(u));
}

double SampledControl::effective_window_end() const {
  double e = control_scale_.b();
  if (!structure_.scattered.empty()) {
    e = std::max(e, structure_.scattered.back().sigma_star);
  }
  if (!structure_.dense.empty()) e = std::max(e, structure_.dense.back().hi);
  return e;
}

Vec SampledControl::value(double t) const {
  if (t >= effective_window_end()) {
    // Left limit at the window end: the last structure element governs.
    if (!structure_.dense.empty() &&
        (structure_.scattered.empty() ||
         structure_.dense.back().lo > structure_.scattered.back().r)) {
      return dense_[structure_.dense.size() - 1].values.back();
    }
    if (!structure_.scattered.empty()) return scattered_.back();
    throw PointNotInScale("control requested on an empty structure");
  }
  const double s = phi(control_scale_, t);

  // Dense portion containing s?
  const auto& dense = structure_.dense;
  auto it = std::upper_bound(dense.begin(), dense.end(), s,
                             [](double v, const DensePortion& d) { return v < d.lo; });
  if (it != dense.begin()) {
    const std::size_t k = static_cast<std::size_t>(it - dense.begin()) - 1;
    if (s < dense[k].hi) {
      const auto& tab = dense_[k];
      auto eit = std::upper_bound(tab.edges.begin(), tab.edges.end(), s);
      std::size_t c = static_cast<std::size_t>(eit - tab.edges.begin());
      c = c == 0 ? 0 : c - 1;
      if (c >= tab.values.size()) c = tab.values.size() - 1;
      return tab.values[c];
    }
  }

  // Otherwise s is a scattered sampling instant.
  const auto& sc = structure_.scattered;
  auto sit = std::upper_bound(sc.begin(), sc.end(), s,
                              [](double v, const SamplingInterval& si) { return v < si.r; });
  if (sit == sc.begin()) throw PointNotInScale("no sampling decision covers the instant");
  return scattered_[static_cast<std::size_t>(sit - sc.begin()) - 1];
}

std::vector<double> SampledControl::interior_edges() const {
  std::vector<double> out;
  for (const auto& t : dense_) {
    for (std::size_t i = 1; i + 1 < t.edges.size(); ++i) out.push_back(t.edges[i]);
  }
  return out;
}

DynamicsEval eval_dynamics(const ControlProblem& p, double t, const Vec& q, const Vec& u) {
  if (!p.omega().contains(u)) throw ConstraintViolation("control outside the admissible box");
  return p.dynamics().eval(t, q, u);
}

Vec control_value(const SampledControl& u, double t) { return u.value(t); }

}  // namespace tspmp
