// SPDX-License-Identifier: MIT
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tspmp/pmp.hpp"

namespace tspmp {

/// Root and crossing searches in the closed-form sweep stop at this width.
inline constexpr double kRootTol = 1e-10;

/// Sample count when scanning a decision sensitivity for sign changes.
inline constexpr int kDecisionScanPoints = 1001;

/// Below this |x| the sensitivity functions switch to their series forms.
inline constexpr double kSeriesGuard = 1e-6;

/**
 * Sensitivity of the endpoint profit to the decision x taken on a sampling
 * interval of length mu1 that is backed by a continuum run, given the
 * adjoint value P at the interval's right end.  Positive values push the
 * decision up, negative down; the optimal interior decision is a root.
 */
double gamma_sensitivity(double x, double mu1, double P);

/// Same sensitivity for an interval backed by mu1 unit steps.
double lambda_sensitivity(double x, double mu1, double P);

/// Relative continuation value used when the sensitivity gives no usable
/// sign information: profit accrued over the interval plus the value of the
/// capital handed on, per unit of capital at the interval start.
double decision_objective(double x, double mu1, double P, bool unit_steps);

/// Number of sign changes of f over [lo, hi] sampled at `samples` points;
/// values within a small band of zero are treated as zero.
int count_sign_changes(const std::function<double(double)>& f, double lo, double hi,
                       int samples);

/// Outcome of choosing one scattered decision.
struct DecisionOutcome {
  double value = 0.0;   ///< chosen control in [0, 1]
  int sign_changes = 0; ///< sign changes of the sensitivity over the scan
  bool fallback = false;///< golden-section search decided (flat or irregular)
};

/**
 * Chooses the decision on one sampling interval of the consumption model.
 * A scan of the sensitivity picks one of: saturate low, saturate high, or
 * bracket and bisect the interior root.  When the scan gives no usable sign
 * pattern (a flat sensitivity, or several sign changes) the decision falls
 * back to a golden-section search on the continuation value.
 */
DecisionOutcome decide_scattered_value(double mu1, double P, bool unit_steps);

/// Everything a solve produces: the control, its arcs, the optimality
/// certificate, and the achieved objective -q0(b).
struct SolveResult {
  explicit SolveResult(SampledControl c) : control(std::move(c)) {}

  SampledControl control;
  Trajectory trajectory;
  AdjointArc adjoint;
  CertificateReport certificate;
  double objective = 0.0;
  int iterations = 0;            ///< direct method only
  double projected_gradient = 0; ///< direct method only
  std::string method;
  std::vector<std::string> notes;
};

/**
 * Backward closed-form sweep for the consumption model with a fixed initial
 * state and a free final state.  Walks the decision structure from the
 * window end, choosing each scattered decision through the sensitivity
 * functions and switching permanent portions where the adjoint crosses 1,
 * then integrates forward and certifies.  Throws UnsupportedScenario for
 * other dynamics, endpoint constraints, control boxes, or for sampling
 * intervals backed by anything but a continuum run or unit steps.
 */
SolveResult solve_closed_form(const ControlProblem& p, double h = 0.0);

/// Knobs for the direct method.
struct DirectOptions {
  double step = 0.0;        ///< grid step; 0 picks the scale default
  int max_iterations = 10000;
  double tolerance = 1e-8;  ///< projected-gradient stopping threshold
  unsigned seed = 0;        ///< 0: start at the box center; else random start
};

/// Once the line search cannot improve the objective beyond its rounding
/// noise, the projected gradient is only required to be below this fraction
/// of (1 + |objective|).  The Armijo progress test runs out of resolution
/// when the gradient falls to about |C| sqrt(eps C''/C); growth rates up to
/// 12 put that near 2e-7 |C|, so 1e-6 leaves a safety factor.
inline constexpr double kStallRelativeFloor = 1e-6;

/**
 * Projected gradient ascent on the endpoint objective -q0(b) over all
 * sampled decisions and permanent-portion cells, with an Armijo backtracking
 * line search.  Works for any dynamics with a fixed initial and free final
 * state.  Stops when the projected gradient falls under `tolerance`; when
 * the line search stalls at the numerical noise floor the run is accepted
 * once the projected gradient is below kStallRelativeFloor * (1 + |C|).
 * Throws SolveError when neither happens within max_iterations.
 */
SolveResult solve_projected_gradient(const ControlProblem& p, const DirectOptions& opt = {});

}  // namespace tspmp
