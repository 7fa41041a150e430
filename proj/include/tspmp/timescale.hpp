// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "tspmp/errors.hpp"

namespace tspmp {

/// Absolute tolerance for membership tests on user-supplied instants.
/// Internally generated grid nodes are compared exactly.
inline constexpr double kMembershipTol = 1e-9;

/// Nearly coincident mandatory grid points are merged within this tolerance.
inline constexpr double kNodeMergeTol = 1e-12;

/// Classification of an instant by its forward jump.
enum class PointKind {
  RightDense,      ///< sigma(t) == t, zero graininess
  RightScattered,  ///< sigma(t) > t, positive graininess
};

/// Point classification bundled with the graininess mu(t) = sigma(t) - t.
/// The invariant mu == 0 iff kind == RightDense holds by construction.
struct PointClass {
  PointKind kind = PointKind::RightDense;
  double mu = 0.0;
};

/// Forward jump data at one instant.
struct Jump {
  double sigma = 0.0;  ///< next instant of the scale (clipped at the window end)
  double mu = 0.0;     ///< sigma - t
  PointKind kind = PointKind::RightDense;
};

/// One node of an evaluation grid produced by build_grid().
struct GridNode {
  double t = 0.0;
  PointClass cls;
  bool controlling = false;  ///< true when the node belongs to the sampling scale
};

/**
 * A time scale: a closed subset of the reals inside a working window [a, b],
 * stored as ordered pairwise-disjoint closed segments. A degenerate segment
 * (lo == hi) is an isolated point; a nondegenerate one is a continuum piece.
 *
 * The window convention is baked in: the scale owns its endpoints,
 * a = min(scale) and b = max(scale), and the forward jump of b is b itself
 * (graininess zero), so b is treated as right-dense regardless of structure.
 */
class TimeScale {
 public:
  /// Closed segment [lo, hi]; lo == hi encodes an isolated point.
  struct Segment {
    double lo = 0.0;
    double hi = 0.0;
  };

  /// Builds a scale from segments. Segments must be finite, ordered and
  /// strictly disjoint (hi_i < lo_{i+1}); adjacent touching segments are not
  /// merged automatically and are rejected instead, since they indicate a
  /// construction bug upstream. Throws InvalidRange on any violation.
  static TimeScale from_segments(std::vector<Segment> segments);

  /// Single continuum segment [lo, hi].
  static TimeScale interval(double lo, double hi);

  /// Finite set of isolated points (sorted copies of `values`).
  static TimeScale points(std::vector<double> values);

  /// Set union of two scales (overlapping segments are merged).
  static TimeScale unite(const TimeScale& x, const TimeScale& y);

  double a() const { return segments_.front().lo; }
  double b() const { return segments_.back().hi; }

  const std::vector<Segment>& segments() const { return segments_; }

  /// True when every segment is an isolated point.
  bool discrete() const;

  /// Membership test with absolute tolerance on the segment boundaries.
  bool contains(double t, double tol = kMembershipTol) const;

  /// Returns t unchanged when it lies in the scale, the nearest segment
  /// boundary when t is within `tol` of one, and throws PointNotInScale
  /// otherwise.
  double snap(double t, double tol = kMembershipTol) const;

  /// Intersection with [lo, hi]. Both bounds must lie in the scale so the
  /// result is again a valid window-owning scale. Throws InvalidRange when
  /// lo > hi and PointNotInScale when a bound is outside the scale.
  TimeScale restricted(double lo, double hi) const;

  /// Index of the segment containing t (after snapping). Throws
  /// PointNotInScale when t lies in a gap or outside the window.
  std::size_t segment_index(double t, double tol = kMembershipTol) const;

 private:
  explicit TimeScale(std::vector<Segment> segments) : segments_(std::move(segments)) {}

  std::vector<Segment> segments_;
};

/// Forward jump sigma(t), graininess mu(t) and the point classification.
/// Pre: t in the scale (tolerance kMembershipTol). At t == b the jump is
/// clipped: sigma(b) == b, mu == 0, right-dense.
Jump jump(const TimeScale& ts, double t);

/// Latest sampling instant: phi(t) = sup{ s in ts1 : s <= t }.
/// Pre: t >= min(ts1) - kMembershipTol, else EmptyPredecessor. The argument
/// is snapped to ts1 boundaries within tolerance before the lookup, so an
/// instant numerically just below a segment start resolves to that start.
double phi(const TimeScale& ts1, double t);

/**
 * Delta-integral of f over [c, d) within the scale: the Lebesgue integral of
 * f over the continuum part plus sum of mu(r) * f(r) over right-scattered r
 * in [c, d). Both bounds must lie in the scale, c <= d.
 *
 * The continuum part is evaluated by composite Simpson quadrature on uniform
 * subdivisions of each continuum piece, with the subdivision step bounded by
 * `h` (default: 1e-3 times the window length). f must be continuous on the
 * continuum pieces for the quadrature to converge; no smoothness is needed
 * at scattered points.
 */
double delta_integral(const TimeScale& ts, const std::function<double(double)>& f, double c,
                      double d, double h = 0.0);

/**
 * Generalized exponential e_L(t, c) for a constant nonnegative rate L:
 * the product of exp(L * len) over continuum stretches of [c, t) and of
 * (1 + L * mu(r)) over scattered points r in [c, t). Evaluated in closed
 * form (log-accumulated), no quadrature is involved.
 * Pre: c, t in the scale, c <= t, L >= 0.
 */
double exp_generalized(const TimeScale& ts, double L, double c, double t);

/**
 * Shared evaluation grid for integrators, residual checks and exporters.
 *
 * Nodes: every segment boundary of the scale, every boundary of the sampling
 * scale ts1, every instant of `extra` (all must lie in ts), with each
 * resulting continuum gap subdivided uniformly into an even number of steps
 * of length <= h. Node classification follows the scale; `controlling` marks
 * membership in ts1. For a purely discrete scale the grid is exactly its
 * point set. Throws InvalidStep when h <= 0.
 */
std::vector<GridNode> build_grid(const TimeScale& ts, const TimeScale& ts1, double h,
                                 const std::vector<double>& extra = {});

/// Default integration step for a window: 1e-3 * (b - a).
double default_step(const TimeScale& ts);

/**
 * Delta-integral over [t_{i0}, t_{i1}) of a function sampled on grid nodes:
 * Simpson on uniform continuum runs (trapezoid on a trailing odd interval or
 * a non-uniform run) plus mu * v at scattered nodes with index < i1.
 * Pre: values.size() == grid.size(), i0 <= i1 < grid.size().
 */
double grid_delta_integral(const std::vector<GridNode>& grid, const std::vector<double>& values,
                           std::size_t i0, std::size_t i1);

}  // namespace tspmp
