// SPDX-License-Identifier: MIT
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "test_util.hpp"
#include "tspmp/problem.hpp"

using namespace tspmp;
using testutil::uniform;

namespace {

ControlProblem consumption_problem(TimeScale state, TimeScale control) {
  return ControlProblem(std::move(state), std::move(control), DynamicsSpec::consumption(),
                        ControlBox({0.0}, {1.0}),
                        TerminalSpec::fixed_initial_free_final({1.0}));
}

DynamicsSpec lq_example() {
  Mat A(2, 2), B(2, 1), Q(2, 2), R(1, 1);
  A.at(0, 0) = 0.1;
  A.at(0, 1) = 1.0;
  A.at(1, 0) = -0.5;
  A.at(1, 1) = 0.2;
  B.at(0, 0) = 0.3;
  B.at(1, 0) = 1.0;
  Q.at(0, 0) = 1.0;
  Q.at(0, 1) = 0.2;
  Q.at(1, 0) = 0.2;
  Q.at(1, 1) = 2.0;
  R.at(0, 0) = 0.5;
  return DynamicsSpec::linear_quadratic(A, B, Q, R);
}

// Central finite difference of a scalar-valued component.
template <typename F>
double central_fd(F&& g, Vec x, std::size_t j, double step) {
  Vec hi = x, lo = x;
  hi[j] += step;
  lo[j] -= step;
  return (g(hi) - g(lo)) / (2.0 * step);
}

void check_partials(const DynamicsSpec& dyn, std::mt19937_64& rng, double qlo, double qhi,
                    double ulo, double uhi) {
  const std::size_t n = dyn.state_dim();
  const std::size_t m = dyn.control_dim();
  constexpr double kStep = 1e-5;
  constexpr double kRelTol = 1e-6;

  Vec q(n), u(m);
  for (auto& v : q) v = uniform(rng, qlo, qhi);
  for (auto& v : u) v = uniform(rng, ulo, uhi);
  const double t = uniform(rng, 0.0, 12.0);
  const DynamicsEval e = dyn.eval(t, q, u);

  const auto close = [&](double got, double want) {
    CHECK(std::abs(got - want) <= kRelTol * (1.0 + std::abs(want)));
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double fd =
          central_fd([&](const Vec& x) { return dyn.eval(t, x, u).f[i]; }, q, j, kStep);
      close(e.df_dq.at(i, j), fd);
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double fd =
          central_fd([&](const Vec& x) { return dyn.eval(t, q, x).f[i]; }, u, j, kStep);
      close(e.df_du.at(i, j), fd);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double fd =
        central_fd([&](const Vec& x) { return dyn.eval(t, x, u).f0; }, q, j, kStep);
    close(e.df0_dq[j], fd);
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double fd =
        central_fd([&](const Vec& x) { return dyn.eval(t, q, x).f0; }, u, j, kStep);
    close(e.df0_du[j], fd);
  }
}

}  // namespace

TEST_CASE("dynamics templates match finite differences") {
  std::mt19937_64 rng(20240815u);
  const DynamicsSpec cons = DynamicsSpec::consumption();
  const DynamicsSpec lq = lq_example();
  for (int draw = 0; draw < 100; ++draw) {
    check_partials(cons, rng, 0.2, 5.0, 0.0, 1.0);
    check_partials(lq, rng, -2.0, 2.0, -3.0, 3.0);
  }
}

TEST_CASE("consumption dynamics by hand") {
  const DynamicsSpec dyn = DynamicsSpec::consumption();
  const DynamicsEval e = dyn.eval(0.0, {2.0}, {0.5});
  CHECK(e.f[0] == 1.0);
  CHECK(e.f0 == -1.0);
  CHECK(e.df_dq.at(0, 0) == 0.5);
  CHECK(e.df_du.at(0, 0) == 2.0);
  CHECK(e.df0_dq[0] == -0.5);
  CHECK(e.df0_du[0] == 2.0);
  CHECK_THROWS_AS(dyn.eval(0.0, {1.0, 2.0}, {0.5}), DimensionMismatch);
  CHECK_THROWS_AS(DynamicsSpec::linear_quadratic(Mat(2, 2), Mat(1, 1), Mat(2, 2), Mat(1, 1)),
                  DimensionMismatch);
}

TEST_CASE("control box projection") {
  const ControlBox box({0.0, -1.0}, {1.0, 2.0});
  CHECK_THROWS_AS(ControlBox({1.0}, {0.0}), InvalidRange);
  CHECK_THROWS_AS(ControlBox({1.0}, {0.0, 1.0}), DimensionMismatch);

  std::mt19937_64 rng(7u);
  for (int i = 0; i < 200; ++i) {
    Vec u{uniform(rng, -3, 3), uniform(rng, -3, 3)};
    Vec v{uniform(rng, -3, 3), uniform(rng, -3, 3)};
    const Vec pu = box.clamp(u);
    const Vec pv = box.clamp(v);
    CHECK(box.contains(pu, 0.0));
    CHECK(box.clamp(pu) == pu);  // idempotent
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(std::abs(pu[j] - pv[j]) <= std::abs(u[j] - v[j]) + 1e-15);  // 1-Lipschitz
    }
  }

  const ControlBox unit({0.0}, {1.0});
  const auto probes = unit.probe_points();
  REQUIRE(probes.size() == 3);
  CHECK(probes[0][0] == 0.0);
  CHECK(probes[1][0] == 1.0);
  CHECK(probes[2][0] == 0.5);

  const auto grid = unit.scan_grid(101);
  REQUIRE(grid.size() == 101);
  CHECK(grid.front()[0] == 0.0);
  CHECK(grid.back()[0] == 1.0);
  CHECK(grid[50][0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("problem construction validates scales and sizes") {
  const TimeScale window = TimeScale::interval(0, 12);
  CHECK_NOTHROW(consumption_problem(window, TimeScale::points({0, 2, 4, 6, 8, 10, 12})));

  // Sampling scale escaping the window.
  CHECK_THROWS_AS(consumption_problem(window, TimeScale::points({0, 13})), InvalidRange);
  // Different first instant.
  CHECK_THROWS_AS(consumption_problem(window, TimeScale::points({2, 4})), InvalidRange);
  // Dense sampling piece over a discrete state scale.
  CHECK_THROWS_AS(
      consumption_problem(TimeScale::points({0, 1, 2, 3}), TimeScale::interval(0, 2)),
      InvalidRange);
  // Control box dimension mismatch.
  CHECK_THROWS_AS(ControlProblem(window, TimeScale::points({0.0}), DynamicsSpec::consumption(),
                                 ControlBox({0.0, 0.0}, {1.0, 1.0}),
                                 TerminalSpec::fixed_initial_free_final({1.0})),
                  DimensionMismatch);
  // Initial state dimension mismatch.
  CHECK_THROWS_AS(ControlProblem(window, TimeScale::points({0.0}), DynamicsSpec::consumption(),
                                 ControlBox({0.0}, {1.0}),
                                 TerminalSpec::fixed_initial_free_final({1.0, 2.0})),
                  DimensionMismatch);
}

TEST_CASE("decision structure enumeration") {
  const TimeScale window = TimeScale::interval(0, 12);

  SUBCASE("periodic sampling") {
    const auto cs =
        control_structure(consumption_problem(window, TimeScale::points({0, 2, 4, 6, 8, 10, 12})));
    CHECK(cs.dense.empty());
    REQUIRE(cs.scattered.size() == 6);
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(cs.scattered[k].r == 2.0 * k);
      CHECK(cs.scattered[k].sigma_star == 2.0 * k + 2.0);
      CHECK(cs.scattered[k].mu1() == 2.0);
    }
  }

  SUBCASE("sampling scale ending before the window does") {
    const auto cs = control_structure(consumption_problem(window, TimeScale::points({0, 9})));
    REQUIRE(cs.scattered.size() == 2);
    CHECK(cs.scattered[0].r == 0.0);
    CHECK(cs.scattered[0].sigma_star == 9.0);
    CHECK(cs.scattered[1].r == 9.0);
    CHECK(cs.scattered[1].sigma_star == 12.0);  // held to the window end
  }

  SUBCASE("single decision") {
    const auto cs = control_structure(consumption_problem(window, TimeScale::points({0, 12})));
    REQUIRE(cs.scattered.size() == 1);
    CHECK(cs.scattered[0].r == 0.0);
    CHECK(cs.scattered[0].sigma_star == 12.0);
  }

  SUBCASE("mixed continuum and isolated sampling") {
    const TimeScale ts1 = TimeScale::from_segments({{0, 6}, {10, 10}, {11.5, 12}});
    const auto cs = control_structure(consumption_problem(window, ts1));
    REQUIRE(cs.dense.size() == 2);
    REQUIRE(cs.scattered.size() == 2);
    CHECK(cs.dense[0].lo == 0.0);
    CHECK(cs.dense[0].hi == 6.0);
    CHECK(cs.scattered[0].r == 6.0);
    CHECK(cs.scattered[0].sigma_star == 10.0);
    CHECK(cs.scattered[1].r == 10.0);
    CHECK(cs.scattered[1].sigma_star == 11.5);
    CHECK(cs.dense[1].lo == 11.5);
    CHECK(cs.dense[1].hi == 12.0);
  }

  SUBCASE("fully discrete") {
    std::vector<double> pts;
    for (int k = 0; k <= 12; ++k) pts.push_back(k);
    const TimeScale unit = TimeScale::points(pts);
    const auto cs = control_structure(consumption_problem(unit, unit));
    CHECK(cs.dense.empty());
    REQUIRE(cs.scattered.size() == 12);
    for (std::size_t k = 0; k < 12; ++k) CHECK(cs.scattered[k].mu1() == 1.0);
  }
}

TEST_CASE("sampled control evaluation through the latest sampling instant") {
  const TimeScale window = TimeScale::interval(0, 12);
  const TimeScale ts1 = TimeScale::from_segments({{0, 6}, {10, 10}, {11.5, 12}});
  const ControlProblem p = consumption_problem(window, ts1);

  SampledControl u = SampledControl::constant(p, {0.25});
  CHECK(u.value(3.0)[0] == 0.25);

  // Scattered decisions at 6 and 10 (indices follow the structure order).
  u.set_scattered_value(0, {0.75});
  u.set_scattered_value(1, {0.5});
  // Dense portion [0, 6) with an interior switch, and [11.5, 12) constant.
  u.set_dense_table(0, {{0.0, 2.5, 6.0}, {{1.0}, {0.3}}});
  u.set_dense_value(1, {0.0});

  CHECK(u.value(0.0)[0] == 1.0);
  CHECK(u.value(2.4999)[0] == 1.0);
  CHECK(u.value(2.5)[0] == 0.3);
  CHECK(u.value(5.9)[0] == 0.3);
  CHECK(u.value(6.0)[0] == 0.75);   // scattered decision at 6
  CHECK(u.value(8.7)[0] == 0.75);   // held through the gap
  CHECK(u.value(10.0)[0] == 0.5);
  CHECK(u.value(11.2)[0] == 0.5);
  CHECK(u.value(11.5)[0] == 0.0);
  CHECK(u.value(11.9)[0] == 0.0);
  CHECK(u.value(12.0)[0] == 0.0);   // left limit at the window end

  const auto edges = u.interior_edges();
  REQUIRE(edges.size() == 1);
  CHECK(edges[0] == 2.5);

  // Values are projected onto the box when set.
  u.set_scattered_value(0, {1.7});
  CHECK(u.value(7.0)[0] == 1.0);
  u.set_scattered_value(0, {-0.3});
  CHECK(u.value(7.0)[0] == 0.0);

  CHECK_THROWS_AS(u.set_scattered_value(5, {0.5}), InvalidRange);
  CHECK_THROWS_AS(u.set_scattered_value(0, {0.5, 0.5}), DimensionMismatch);
  CHECK_THROWS_AS(u.set_dense_table(0, {{0.0, 6.0}, {{0.5}, {0.5}}}), InvalidRange);
  CHECK_THROWS_AS(u.set_dense_table(0, {{0.0, 5.0}, {{0.5}}}), InvalidRange);

  // Left limit when the last decision is scattered.
  const ControlProblem p2 = consumption_problem(window, TimeScale::points({0, 9}));
  SampledControl u2 = SampledControl::constant(p2, {0.5});
  u2.set_scattered_value(1, {0.8});
  CHECK(u2.value(12.0)[0] == 0.8);

  CHECK_THROWS_AS(eval_dynamics(p, 0.0, {1.0}, {1.5}), ConstraintViolation);
  CHECK(eval_dynamics(p, 0.0, {2.0}, control_value(u, 0.0)).f[0] == 2.0);
}
