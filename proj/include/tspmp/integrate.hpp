// SPDX-License-Identifier: MIT
#pragma once

#include <iosfwd>
#include <vector>

#include "tspmp/problem.hpp"

namespace tspmp {

/// State trajectory sampled on an evaluation grid. q0 is the running cost
/// accumulated from a (so q0.front() == 0 and q0.back() is the total cost).
struct Trajectory {
  std::vector<GridNode> grid;
  std::vector<Vec> q;
  std::vector<double> q0;
};

/// Adjoint arc aligned with a trajectory grid. p0 is the constant cost
/// multiplier (nonpositive; -1 for the normalized problems solved here).
struct AdjointArc {
  std::vector<Vec> p;
  double p0 = -1.0;
};

/**
 * Integrates the state and running cost forward under a sampled control.
 *
 * The grid is built from the problem scales with step <= h and additionally
 * contains every control-switch instant (dense-table edges) and every
 * instant of `extra`, so no integration step ever crosses a control jump.
 * Continuum gaps advance by one classical RK4 step each (the control is
 * constant on a gap); scattered nodes advance exactly by
 * q(sigma) = q + mu f. The running cost rides along as an augmented RK4
 * component on continuum gaps and accumulates mu f0 at scattered nodes, so
 * state and cost share the same fourth order.
 *
 * Throws NonFiniteState as soon as any state component stops being finite.
 */
Trajectory forward(const ControlProblem& p, const SampledControl& u, const Vec& q_a, double h,
                   const std::vector<double>& extra = {});

/**
 * Solves the adjoint recursion backward from p(b) = p_b on the trajectory
 * grid: dp = -dH/dq with the successor value of p entering at scattered
 * nodes (p(t) = p(sigma(t)) + mu dH/dq(t, q, p(sigma(t)), p0, u)), and a
 * backward RK4 sweep on continuum gaps where successor and value coincide.
 * State values between nodes come from cubic Hermite interpolation, which
 * preserves the fourth-order accuracy of the forward pass.
 *
 * Throws GridMismatch when the trajectory arrays are inconsistent and
 * DimensionMismatch when p_b has the wrong size.
 */
AdjointArc backward_adjoint(const ControlProblem& p, const SampledControl& u,
                            const Trajectory& traj, Vec p_b, double p0);

/// The three elementary control/state perturbations whose first-order
/// endpoint effect the library can compute exactly.
enum class VariationKind {
  Scattered,  ///< move one scattered decision toward a target value
  Dense,      ///< needle: replace the control by z at one permanent instant
  Initial,    ///< perturb the initial state
};

struct VariationRequest {
  VariationKind kind = VariationKind::Initial;
  double at = 0.0;  ///< r (Scattered) or s (Dense); ignored for Initial
  Vec direction;    ///< y (Scattered), z (Dense), dq_a (Initial)
};

/// Endpoint effect of a variation, together with the instant and value at
/// which the homogeneous propagation started (useful for conservation
/// checks: the pairing with any adjoint arc is constant from there on).
struct VariationResult {
  Vec w_b;             ///< state part at b
  double w0_b = 0.0;   ///< cost part at b: the directional derivative of q0(b)
  double start_t = 0;  ///< start of the homogeneous run
  Vec w_start;         ///< augmented (n+1) value at start_t
};

/**
 * Integrates the variation equations along a stored trajectory.
 *
 * Scattered at r with target y: the forced linearized system runs on
 * [r, sigma_star(r)] from zero with constant input y - u(r), then propagates
 * homogeneously to b. Dense at a right-dense sampling instant s with value
 * z: starts at s from f(s, q(s), z) - f(s, q(s), u(s)) (augmented) and
 * propagates homogeneously. Initial: starts at a from (direction, 0).
 *
 * Throws WrongPointClass when `at` is not of the class the kind requires,
 * GridMismatch when `at` is not a grid node, ConstraintViolation when the
 * target value leaves the admissible box.
 */
VariationResult variation_endpoint(const ControlProblem& p, const SampledControl& u,
                                   const Trajectory& traj, const VariationRequest& req);

/// Writes "t,class,q...,q0,p...,p0" rows (17 significant digits, '\n' line
/// ends). Pass adj = nullptr to omit the adjoint columns.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const AdjointArc* adj);

}  // namespace tspmp
