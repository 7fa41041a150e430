// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tspmp/linalg.hpp"
#include "tspmp/timescale.hpp"

namespace tspmp {

/// Right-hand side and running cost at one instant, with exact first
/// derivatives in state and control.
struct DynamicsEval {
  Vec f;       ///< state velocity, size n
  double f0;   ///< running cost integrand
  Mat df_dq;   ///< n x n
  Mat df_du;   ///< n x m
  Vec df0_dq;  ///< size n
  Vec df0_du;  ///< size m
};

/**
 * A named dynamics/cost template with hand-written derivatives. Two are
 * built in:
 *
 *  - "consumption": scalar exponential growth q' = u q with running cost
 *    (u - 1) q, i.e. reinvestment fraction u of the produced quantity;
 *    minimizing the cost maximizes total consumption.
 *  - "linear_quadratic": q' = A q + B u with cost (q'Qq + u'Ru) / 2
 *    (Q and R are symmetrized on construction).
 */
class DynamicsSpec {
 public:
  static DynamicsSpec consumption();
  static DynamicsSpec linear_quadratic(Mat A, Mat B, Mat Q, Mat R);

  const std::string& id() const { return id_; }
  std::size_t state_dim() const { return n_; }
  std::size_t control_dim() const { return m_; }

  /// Evaluates dynamics, cost and their exact partials. Throws
  /// DimensionMismatch when q or u have the wrong size.
  DynamicsEval eval(double t, const Vec& q, const Vec& u) const;

 private:
  enum class Kind { Consumption, LinearQuadratic };

  DynamicsSpec(Kind kind, std::string id, std::size_t n, std::size_t m)
      : kind_(kind), id_(std::move(id)), n_(n), m_(m) {}

  Kind kind_;
  std::string id_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  Mat A_, B_, Q_, R_;  // linear_quadratic only
};

/// Axis-aligned box of admissible control values.
class ControlBox {
 public:
  ControlBox(Vec lo, Vec hi);

  std::size_t dim() const { return lo_.size(); }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }

  /// Euclidean projection onto the box (componentwise clamp). Idempotent
  /// and 1-Lipschitz in every component.
  Vec clamp(Vec u) const;

  bool contains(const Vec& u, double tol = 1e-9) const;

  /// Probe values for variational inequality checks: all box vertices plus
  /// the center.
  std::vector<Vec> probe_points() const;

  /// Cartesian per-axis grid with `per_axis` values, for argmax scans.
  std::vector<Vec> scan_grid(std::size_t per_axis) const;

 private:
  Vec lo_, hi_;
};

/// Shape of the endpoint constraint set.
enum class TerminalKind {
  FixedInitialFreeFinal,  ///< q(a) pinned, q(b) free
  FixedBoth,              ///< both endpoints pinned
  Periodic,               ///< q(a) == q(b)
};

/// Endpoint constraints plus the free-final-time flag.
struct TerminalSpec {
  TerminalKind kind = TerminalKind::FixedInitialFreeFinal;
  Vec q_a;  ///< used by FixedInitialFreeFinal and FixedBoth
  Vec q_b;  ///< used by FixedBoth
  bool free_final_time = false;

  static TerminalSpec fixed_initial_free_final(Vec qa, bool free_time = false);
  static TerminalSpec fixed_both(Vec qa, Vec qb, bool free_time = false);
  static TerminalSpec periodic(bool free_time = false);
};

/**
 * Sampled-data control problem: dynamics on a state scale, control decisions
 * on a sampling sub-scale, box-constrained controls, endpoint constraints.
 * Construction validates that the sampling scale is a subset of the state
 * scale, that both start at the same instant, and that all dimensions agree.
 */
class ControlProblem {
 public:
  ControlProblem(TimeScale state_scale, TimeScale control_scale, DynamicsSpec dynamics,
                 ControlBox omega, TerminalSpec terminal);

  const TimeScale& state_scale() const { return state_scale_; }
  const TimeScale& control_scale() const { return control_scale_; }
  const DynamicsSpec& dynamics() const { return dynamics_; }
  const ControlBox& omega() const { return omega_; }
  const TerminalSpec& terminal() const { return terminal_; }

  double a() const { return state_scale_.a(); }
  double b() const { return state_scale_.b(); }
  std::size_t n() const { return dynamics_.state_dim(); }
  std::size_t m() const { return dynamics_.control_dim(); }

 private:
  TimeScale state_scale_;
  TimeScale control_scale_;
  DynamicsSpec dynamics_;
  ControlBox omega_;
  TerminalSpec terminal_;
};

/// One scattered sampling interval [r, sigma_star): the decision taken at r
/// is held until the next sampling instant, clipped at the window end (the
/// last sampling instant always governs through to b).
struct SamplingInterval {
  double r = 0.0;
  double sigma_star = 0.0;
  double mu1() const { return sigma_star - r; }
};

/// One continuum piece [lo, hi) of the sampling scale: the control there is
/// permanent (re-decided at every instant).
struct DensePortion {
  double lo = 0.0;
  double hi = 0.0;
};

/// The decision structure of a problem: scattered intervals and dense
/// portions, mutually disjoint, together covering [a, b).
struct ControlStructure {
  std::vector<SamplingInterval> scattered;
  std::vector<DensePortion> dense;
};

ControlStructure control_structure(const ControlProblem& p);

/**
 * A concrete admissible control: one value per scattered sampling interval
 * and a piecewise-constant table per dense portion. Values are projected
 * onto the admissible box whenever they are set, so a SampledControl is
 * admissible by construction.
 */
class SampledControl {
 public:
  /// Piecewise-constant table on a dense portion. edges.front() == lo,
  /// edges.back() == hi, values[k] rules [edges[k], edges[k+1]).
  struct Table {
    std::vector<double> edges;
    std::vector<Vec> values;
  };

  /// Same value everywhere (clamped to the box).
  static SampledControl constant(const ControlProblem& p, Vec u);

  const ControlStructure& structure() const { return structure_; }

  const Vec& scattered_value(std::size_t k) const { return scattered_[k]; }
  void set_scattered_value(std::size_t k, Vec u);

  const Table& dense_table(std::size_t k) const { return dense_[k]; }
  /// Replaces the table of dense portion k. Edge list must start/end at the
  /// portion bounds and increase strictly; values are clamped to the box.
  void set_dense_table(std::size_t k, Table table);

  /// Convenience for single-cell dense portions.
  void set_dense_value(std::size_t k, Vec u);

  /// Replaces the value of one cell of dense portion k (clamped to the box).
  void set_dense_cell(std::size_t k, std::size_t cell, Vec u);

  /// Control in effect at instant t: the value decided at the latest
  /// sampling instant phi(t). For t >= b returns the value in effect just
  /// left of b.
  Vec value(double t) const;

  /// Interior dense-table edges: instants where the control may switch
  /// inside a continuum run. Integration grids must include these.
  std::vector<double> interior_edges() const;

  std::size_t dim() const { return box_.dim(); }

 private:
  SampledControl(TimeScale control_scale, ControlBox box, ControlStructure structure);

  /// End of the window governed by the structure (the problem's b).
  double effective_window_end() const;

  TimeScale control_scale_;
  ControlBox box_;
  ControlStructure structure_;
  std::vector<Vec> scattered_;
  std::vector<Table> dense_;
};

/// Dynamics evaluation with dimension checks against the problem.
DynamicsEval eval_dynamics(const ControlProblem& p, double t, const Vec& q, const Vec& u);

/// Control in effect at instant t (see SampledControl::value).
Vec control_value(const SampledControl& u, double t);

}  // namespace tspmp
