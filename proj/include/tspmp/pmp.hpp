// SPDX-License-Identifier: MIT
#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tspmp/integrate.hpp"

namespace tspmp {

/// Absolute bound on adjoint-equation defects, scaled by (1 + max |p|).
inline constexpr double kAdjointDefectTol = 1e-3;

/// Bound on the pointwise and interval maximum-condition defects after
/// normalizing each sample by (1 + |H|) at that sample.
inline constexpr double kMaximumDefectTol = 1e-5;

/// Absolute bound on endpoint (transversality) residuals.
inline constexpr double kTransversalityTol = 1e-6;

/// Samples per control axis when scanning for a better Hamiltonian value.
inline constexpr int kCertificateScanPoints = 101;

/// Control Hamiltonian <p, f(t,q,u)> + p0 f0(t,q,u).
double hamiltonian(const ControlProblem& problem, double t, const Vec& q, const Vec& p,
                   double p0, const Vec& u);

/// Gradient of the Hamiltonian in the control argument, an m-vector.
Vec hamiltonian_control_gradient(const ControlProblem& problem, double t, const Vec& q,
                                 const Vec& p, double p0, const Vec& u);

/// Gradient of the Hamiltonian in the state argument, an n-vector.
Vec hamiltonian_state_gradient(const ControlProblem& problem, double t, const Vec& q,
                               const Vec& p, double p0, const Vec& u);

/// Gradient of the maximized objective -q0(b) with respect to each sampled
/// decision value, one m-vector per scattered interval of the control
/// structure.  Each entry accumulates dH/du over the interval the decision
/// governs, pairing every node with the adjoint value just after it.  Moving
/// decision k by alpha*(y - u_k) moves -q0(b) by alpha*<G_k, y - u_k> to
/// first order, so these are plain ascent directions.
///
/// The trajectory and adjoint must share the same grid (as produced by
/// forward() followed by backward_adjoint()).
std::vector<Vec> scattered_gradients(const ControlProblem& problem, const SampledControl& u,
                                     const Trajectory& traj, const AdjointArc& adj);

/// Same objective gradient for every cell of dense portion `portion`, one
/// m-vector per cell of that portion's table.  Cell edges must be grid nodes,
/// which forward() guarantees for the control it integrated.
std::vector<Vec> dense_gradients(const ControlProblem& problem, const SampledControl& u,
                                 const Trajectory& traj, const AdjointArc& adj,
                                 std::size_t portion);

/// One measured optimality residual with its pinned acceptance bound.
struct Residual {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Outcome of checking a candidate (trajectory, adjoint, control) triple
/// against the first-order optimality conditions.
struct CertificateReport {
  std::vector<Residual> rows;

  /// True when every residual is within its bound.
  bool certified() const;

  /// Row lookup by name; nullptr when absent.
  const Residual* find(std::string_view name) const;

  /// Value of a named row; throws MissingResult when absent.
  double value_of(std::string_view name) const;

  /// Human-readable listing, one "name = value (tolerance ...) PASS" line
  /// per row followed by an overall verdict line.
  void write_text(std::ostream& os) const;

  /// Machine-readable listing: header "name,residual,tolerance,pass" and one
  /// row per residual, pass encoded as 1 or 0.
  void write_csv(std::ostream& os) const;
};

/// Measures how far a candidate solution is from satisfying the necessary
/// optimality conditions.  Rows:
///
///  - adjoint_defect_scattered: worst defect of the difference form of the
///    adjoint equation at right-scattered nodes.  Bound
///    kAdjointDefectTol * (1 + max |p|).
///  - adjoint_defect_dense: worst defect of the differential form at interior
///    nodes of continuum runs, using a three-point derivative stencil.  Nodes
///    where the control or the point class changes nearby are skipped since
///    the adjoint is only continuous there.  Same bound.
///  - dense_maximum_defect: worst normalized amount by which some scanned
///    control value beats the candidate's Hamiltonian at a node governed by a
///    densely sampled portion.  Bound kMaximumDefectTol.
///  - scattered_stationarity_defect: worst normalized first-order improvement
///    <G_k, y - u_k> over box corners and the box center, per scattered
///    decision.  Bound kMaximumDefectTol.
///  - terminal rows depending on the endpoint constraint: free final state
///    requires |p(b)| and |p0 + 1| below kTransversalityTol; a periodic
///    constraint requires |p(a) - p(b)| below it; fixed endpoints only
///    require the multiplier pair to be nontrivial.
///  - final_time_stationarity: |H| at the right endpoint, emitted only for
///    free-final-time problems whose window ends in a continuum run.
CertificateReport evaluate_certificate(const ControlProblem& problem, const SampledControl& u,
                                       const Trajectory& traj, const AdjointArc& adj);

}  // namespace tspmp
