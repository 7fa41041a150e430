// SPDX-License-Identifier: MIT
#include "tspmp/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tspmp {

namespace {

std::string num(double x) { return std::to_string(x); }

/// Number of uniform steps covering `len` with step <= h, rounded up to even
/// so composite Simpson applies to every subdivided gap.
int even_steps(double len, double h) {
  int n = static_cast<int>(std::ceil(len / h - 1e-12));
  if (n < 1) n = 1;
  if (n % 2 != 0) ++n;
  return n;
}

/// Lebesgue integral of node samples over one continuum run [s, e] of the
/// grid: composite Simpson when the spacing is uniform (trapezoid cleanup on
/// a trailing odd interval), plain trapezoid otherwise.
double run_integral(const std::vector<GridNode>& g, const std::vector<double>& v, std::size_t s,
                    std::size_t e) {
  if (e <= s) return 0.0;
  const std::size_t count = e - s;
  const double g0 = g[s + 1].t - g[s].t;
  bool uniform = true;
  for (std::size_t k = s; k + 1 <= e && uniform; ++k) {
    const double gk = g[k + 1].t - g[k].t;
    if (std::abs(gk - g0) > 1e-9 * std::abs(g0) + 1e-15) uniform = false;
  }
  double total = 0.0;
  std::size_t stop = e;
  if (uniform && count >= 2) {
    if (count % 2 != 0) stop = e - 1;  // leave the last interval to trapezoid
    for (std::size_t k = s; k + 2 <= stop; k += 2) {
      total += (g0 / 3.0) * (v[k] + 4.0 * v[k + 1] + v[k + 2]);
    }
  } else {
    stop = s;
  }
  for (std::size_t k = stop; k + 1 <= e; ++k) {
    total += 0.5 * (g[k + 1].t - g[k].t) * (v[k] + v[k + 1]);
  }
  return total;
}

}  // namespace

TimeScale TimeScale::from_segments(std::vector<Segment> segments) {
  if (segments.empty()) throw InvalidRange("time scale needs at least one segment");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    if (!std::isfinite(s.lo) || !std::isfinite(s.hi)) {
      throw InvalidRange("time scale segment bounds must be finite");
    }
    if (s.lo > s.hi) {
      throw InvalidRange("time scale segment [" + num(s.lo) + ", " + num(s.hi) +
                         "] has lo > hi");
    }
    if (i > 0 && segments[i - 1].hi >= s.lo) {
      throw InvalidRange("time scale segments must be ordered and disjoint near t = " +
                         num(s.lo));
    }
  }
  return TimeScale(std::move(segments));
}

TimeScale TimeScale::interval(double lo, double hi) { return from_segments({{lo, hi}}); }

TimeScale TimeScale::points(std::vector<double> values) {
  if (values.empty()) throw InvalidRange("point scale needs at least one point");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<Segment> segs;
  segs.reserve(values.size());
  for (double v : values) segs.push_back({v, v});
  return from_segments(std::move(segs));
}

TimeScale TimeScale::unite(const TimeScale& x, const TimeScale& y) {
  std::vector<Segment> all = x.segments_;
  all.insert(all.end(), y.segments_.begin(), y.segments_.end());
  std::sort(all.begin(), all.end(), [](const Segment& p, const Segment& q) {
    return p.lo < q.lo || (p.lo == q.lo && p.hi < q.hi);
  });
  std::vector<Segment> merged;
  for (const Segment& s : all) {
    if (!merged.empty() && s.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, s.hi);
    } else {
      merged.push_back(s);
    }
  }
  return from_segments(std::move(merged));
}

bool TimeScale::discrete() const {
  for (const Segment& s : segments_) {
    if (s.lo < s.hi) return false;
  }
  return true;
}

bool TimeScale::contains(double t, double tol) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const Segment& s) { return v < s.lo; });
  if (it != segments_.end() && it->lo - t <= tol) return true;
  if (it != segments_.begin()) {
    const Segment& prev = *(it - 1);
    if (t - prev.hi <= tol) return true;
  }
  return false;
}

double TimeScale::snap(double t, double tol) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const Segment& s) { return v < s.lo; });
  if (it != segments_.begin()) {
    const Segment& prev = *(it - 1);
    if (t <= prev.hi) return t;  // interior of a segment
    if (t - prev.hi <= tol) {
      // Between two boundaries both within tolerance, pick the nearer one.
      if (it != segments_.end() && it->lo - t <= tol && it->lo - t < t - prev.hi) return it->lo;
      return prev.hi;
    }
  }
  if (it != segments_.end() && it->lo - t <= tol) return it->lo;
  throw PointNotInScale("instant t = " + num(t) + " is not in the time scale");
}

std::size_t TimeScale::segment_index(double t, double tol) const {
  const double s = snap(t, tol);
  auto it = std::upper_bound(segments_.begin(), segments_.end(), s,
                             [](double v, const Segment& seg) { return v < seg.lo; });
  // snap() guarantees s lies inside the segment preceding `it`.
  return static_cast<std::size_t>((it - segments_.begin()) - 1);
}

TimeScale TimeScale::restricted(double lo, double hi) const {
  const double c = snap(lo);
  const double d = snap(hi);
  if (c > d) throw InvalidRange("restriction bounds out of order");
  std::vector<Segment> out;
  for (const Segment& s : segments_) {
    if (s.hi < c || s.lo > d) continue;
    out.push_back({std::max(s.lo, c), std::min(s.hi, d)});
  }
  return from_segments(std::move(out));
}

Jump jump(const TimeScale& ts, double t) {
  const double s = ts.snap(t);
  const std::size_t i = ts.segment_index(s);
  const auto& segs = ts.segments();
  if (s < segs[i].hi || i + 1 == segs.size()) {
    // Interior of a continuum piece, or the window end b (clipped jump).
    return {s, 0.0, PointKind::RightDense};
  }
  const double sigma = segs[i + 1].lo;
  return {sigma, sigma - s, PointKind::RightScattered};
}

double phi(const TimeScale& ts1, double t) {
  const auto& segs = ts1.segments();
  if (t < segs.front().lo) {
    if (segs.front().lo - t <= kMembershipTol) return segs.front().lo;
    throw EmptyPredecessor("no sampling instant at or before t = " + num(t));
  }
  // Last segment whose start does not exceed t (allowing for the snap band
  // just below a segment start).
  auto it = std::upper_bound(segs.begin(), segs.end(), t + kMembershipTol,
                             [](double v, const TimeScale::Segment& s) { return v < s.lo; });
  const TimeScale::Segment& seg = *(it - 1);
  if (t < seg.lo) return seg.lo;  // snapped up onto the segment start
  return std::min(t, seg.hi);
}

double delta_integral(const TimeScale& ts, const std::function<double(double)>& f, double c,
                      double d, double h) {
  const double lo = ts.snap(c);
  const double hi = ts.snap(d);
  if (lo > hi) throw InvalidRange("integration bounds out of order");
  if (lo == hi) return 0.0;
  if (h == 0.0) h = default_step(ts);
  if (h <= 0.0) throw InvalidStep("integration step must be positive");

  const TimeScale part = ts.restricted(lo, hi);
  double total = 0.0;
  for (const TimeScale::Segment& s : part.segments()) {
    if (s.lo < s.hi) {
      const int n = even_steps(s.hi - s.lo, h);
      const double step = (s.hi - s.lo) / n;
      double acc = f(s.lo) + f(s.hi);
      for (int k = 1; k < n; ++k) {
        acc += (k % 2 == 1 ? 4.0 : 2.0) * f(s.lo + k * step);
      }
      total += acc * step / 3.0;
    }
    if (s.hi < hi) {
      const Jump j = jump(ts, s.hi);
      if (j.kind == PointKind::RightScattered) total += j.mu * f(s.hi);
    }
  }
  return total;
}

double exp_generalized(const TimeScale& ts, double L, double c, double t) {
  if (L < 0.0) throw InvalidRange("generalized exponential needs a nonnegative rate");
  const double lo = ts.snap(c);
  const double hi = ts.snap(t);
  if (lo > hi) throw InvalidRange("exponential bounds out of order");
  if (lo == hi) return 1.0;
  const TimeScale part = ts.restricted(lo, hi);
  double log_acc = 0.0;
  for (const TimeScale::Segment& s : part.segments()) {
    log_acc += L * (s.hi - s.lo);
    if (s.hi < hi) {
      const Jump j = jump(ts, s.hi);
      if (j.kind == PointKind::RightScattered) log_acc += std::log1p(L * j.mu);
    }
  }
  return std::exp(log_acc);
}

double default_step(const TimeScale& ts) {
  const double len = ts.b() - ts.a();
  return len > 0.0 ? 1e-3 * len : 1.0;
}

std::vector<GridNode> build_grid(const TimeScale& ts, const TimeScale& ts1, double h,
                                 const std::vector<double>& extra) {
  if (!(h > 0.0)) throw InvalidStep("grid step must be positive");

  std::vector<double> mandatory;
  for (const TimeScale::Segment& s : ts1.segments()) {
    mandatory.push_back(s.lo);
    mandatory.push_back(s.hi);
  }
  for (double e : extra) mandatory.push_back(ts.snap(e));
  std::sort(mandatory.begin(), mandatory.end());

  std::vector<GridNode> grid;
  const auto& segs = ts.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const TimeScale::Segment& s = segs[i];

    // Breakpoints of this segment: its ends plus mandatory interior points,
    // with near-coincident values merged onto a single node.
    std::vector<double> brk{s.lo};
    for (double m : mandatory) {
      if (m <= s.lo || m >= s.hi) continue;
      if (m - brk.back() > kNodeMergeTol * std::max(1.0, std::abs(m))) brk.push_back(m);
    }
    if (s.hi > s.lo) {
      if (s.hi - brk.back() <= kNodeMergeTol * std::max(1.0, std::abs(s.hi))) {
        brk.back() = s.hi;
      } else {
        brk.push_back(s.hi);
      }
    }

    for (std::size_t k = 0; k + 1 < brk.size(); ++k) {
      const int n = even_steps(brk[k + 1] - brk[k], h);
      const double step = (brk[k + 1] - brk[k]) / n;
      for (int j = 0; j < n; ++j) {
        grid.push_back({brk[k] + j * step, {PointKind::RightDense, 0.0}, false});
      }
    }

    // Segment end: right-scattered towards the next segment, or the window
    // end b, which is right-dense by the clipping convention.
    GridNode end{s.hi, {PointKind::RightDense, 0.0}, false};
    if (i + 1 < segs.size()) {
      end.cls = {PointKind::RightScattered, segs[i + 1].lo - s.hi};
    }
    grid.push_back(end);
  }

  for (GridNode& n : grid) n.controlling = ts1.contains(n.t, kNodeMergeTol);
  return grid;
}

double grid_delta_integral(const std::vector<GridNode>& grid, const std::vector<double>& values,
                           std::size_t i0, std::size_t i1) {
  if (values.size() != grid.size()) {
    throw GridMismatch("sample count does not match the grid");
  }
  if (i0 > i1 || i1 >= grid.size()) {
    throw InvalidRange("grid integration indices out of range");
  }

  double total = 0.0;
  std::size_t cur = i0;
  while (cur < i1) {
    std::size_t j = cur;
    while (j < i1 && grid[j].cls.kind == PointKind::RightDense) ++j;
    total += run_integral(grid, values, cur, j);
    if (j < i1 && grid[j].cls.kind == PointKind::RightScattered) {
      total += grid[j].cls.mu * values[j];
    }
    cur = j + 1;
  }
  return total;
}

}  // namespace tspmp
