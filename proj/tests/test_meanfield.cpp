#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mflq/linalg.hpp"
#include "mflq/meanfield.hpp"
#include "oracles.hpp"

using namespace mflq;
using fixtures::m1;
using fixtures::v1;

namespace {

// Riccati path with Pi frozen at a constant value; only the fields the offset
// solver reads are filled.
FiniteRiccatiPath frozen_path(const Matrix& Pi, double T, std::size_t M) {
  FiniteRiccatiPath path;
  path.grid = make_grid(T, M);
  const auto n = Pi.rows();
  path.Pi.assign(path.grid.size(), Pi);
  path.Pi_rate.assign(path.grid.size(), Matrix::Zero(n, n));
  path.P.assign(path.grid.size(), Matrix::Zero(n, n));
  path.P_rate = path.Pi_rate;
  return path;
}

MeanFieldPath stationary_path(const ProblemData& p, double s, double T, std::size_t M) {
  const auto Pi = solve_are_Pi(p);
  OffsetSolution off;
  off.value = v1(s);
  return solve_mean_field_path(p, Pi, off, T, M);
}

}  // namespace

TEST_SUITE("meanfield") {
  TEST_CASE("zero forcing gives a zero offset") {
    fixtures::Scalar sc;
    sc.eta = 0.0;
    sc.f = 0.0;
    const ProblemData p = sc.problem();
    const auto path = solve_dre(p, 2.0, 400);
    for (const auto& s : solve_offset_finite(p, path)) CHECK(s.norm() == 0.0);
    const auto planar_path = solve_dre(fixtures::benchmark_planar(), 5.0, 500);
    CHECK(solve_offset_finite(fixtures::benchmark_planar(), planar_path).back().norm() == 0.0);
  }

  TEST_CASE("frozen Pi matches the variation-of-constants formula") {
    const ProblemData p = fixtures::benchmark_scalar();
    const double Pi = solve_are_Pi(p).X(0, 0);
    const double L = p.rho - (0.8 - 0.2 - Pi);
    const double g = Pi * 1.0 - derived_weights(p).eta_bar(0.0)(0);
    const double T = 10.0;
    const auto path = frozen_path(m1(Pi), T, 1000);
    const auto s = solve_offset_finite(p, path);
    for (std::size_t k = 0; k < path.grid.size(); k += 50)
      CHECK(std::abs(s[k](0) - oracle::backward_linear(L, g, T - path.grid.t(k))) <= 1e-8);
  }

  TEST_CASE("stationary offset of the scalar benchmark") {
    const ProblemData p = fixtures::benchmark_scalar();
    CHECK(derived_weights(p).eta_bar(0.0)(0) == doctest::Approx(-0.4).epsilon(1e-14));
    const auto Pi = solve_are_Pi(p);
    const auto off = solve_offset_infinite(p, Pi);
    CHECK(off.constant);
    CHECK_FALSE(off.singular);
    const double Pi0 = Pi.X(0, 0);
    CHECK(off.value(0) == doctest::Approx((Pi0 + 0.4) / Pi0).epsilon(1e-12));
    CHECK(off.value(0) == doctest::Approx(1.86722).epsilon(1e-5));
  }

  TEST_CASE("balanced forcing gives a zero offset") {
    OffsetProblem op;
    op.closed_loop = m1(-0.5);
    op.rho = 0.6;
    op.forcing = [](double) { return v1(0.0); };
    const auto off = solve_offset_linear(op);
    CHECK(off.value.norm() == 0.0);
    CHECK_FALSE(off.singular);
  }

  TEST_CASE("singular regime: Pi = 0 and s = 0") {
    const ProblemData p = fixtures::singular_scalar(1.0);
    const auto Pi = maximal_solution(p.A + p.G, p.S(), derived_weights(p).Q_bar, p.rho);
    CHECK(Pi.X(0, 0) == 0.0);
    CHECK(derived_weights(p).eta_bar(0.0)(0) == 0.0);
    const auto off = solve_offset_infinite(p, Pi);
    CHECK(off.singular);
    CHECK(off.value.norm() == 0.0);
  }

  TEST_CASE("nonzero forcing with a non-stabilizing loop is rejected") {
    OffsetProblem op;
    op.closed_loop = m1(0.5);
    op.rho = 0.6;
    op.forcing = [](double) { return v1(1.0); };
    try {
      solve_offset_linear(op);
      FAIL("expected NotStabilizing");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotStabilizing);
    }
  }

  TEST_CASE("stationary solve and quadrature agree") {
    for (const ProblemData& p : {fixtures::benchmark_scalar(), fixtures::benchmark_planar()}) {
      const auto op = offset_problem(p, solve_are_Pi(p));
      const Vector stationary = solve_offset_linear(op).value;
      const auto quad = offset_quadrature(op, make_grid(20.0, 2000));
      for (const auto& s : quad) CHECK((s - stationary).norm() <= 1e-6);
    }
  }

  TEST_CASE("table forcing: quadrature against a piecewise closed form") {
    // g = 1 - t on [0, 1], 0 afterwards, scalar L = rho - m = 1.
    OffsetProblem op;
    op.closed_loop = m1(-0.4);
    op.rho = 0.6;
    op.forcing = [](double t) { return v1(std::max(0.0, 1.0 - t)); };
    op.knots = {1.0};
    op.constant = false;
    const TimeGrid grid = make_grid(4.0, 400);
    const auto off = solve_offset_linear(op, grid);
    CHECK_FALSE(off.constant);
    CHECK_FALSE(off.truncated_approximation);
    for (std::size_t k = 0; k <= 100; k += 10) {
      const double w = 1.0 - grid.t(k);
      CHECK(std::abs(off.samples[k](0) - (w - 1.0 + std::exp(-w))) <= 1e-9);
    }
    for (std::size_t k = 110; k < grid.size(); k += 10) CHECK(std::abs(off.samples[k](0)) <= 1e-12);
    try {
      solve_offset_linear(op);
      FAIL("expected InvalidArgument");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidArgument);
    }
  }

  TEST_CASE("finite path satisfies the offset equation") {
    const ProblemData p = fixtures::benchmark_planar();
    const auto path = solve_dre(p, 20.0, 4000);
    const Signal eta_bar = derived_weights(p).eta_bar;
    const Matrix S = p.S();
    const double h = path.grid.h();
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < path.grid.size(); ++k) {
      const Vector ds = (path.s[k + 1] - path.s[k - 1]) / (2.0 * h);
      const Matrix Mcl = p.A + p.G - S * path.Pi[k];
      const Vector r = p.rho * path.s[k] - ds - Mcl.transpose() * path.s[k] - path.Pi[k] * p.f(0.0) +
                       eta_bar(0.0);
      worst = std::max(worst, r.norm());
    }
    CHECK(worst <= 1e-4);
    CHECK(path.s.back().norm() == 0.0);
    // separate integration of the same equation
    const auto again = solve_offset_finite(p, path);
    for (std::size_t k = 0; k < path.grid.size(); k += 100) CHECK((again[k] - path.s[k]).norm() <= 1e-8);
  }

  TEST_CASE("zero data keeps the mean at zero") {
    fixtures::Scalar sc;
    sc.mean = 0.0;
    sc.f = 0.0;
    const auto mf = stationary_path(sc.problem(), 0.0, 10.0, 500);
    for (const auto& x : mf.xbar) CHECK(x.norm() == 0.0);
    CHECK(mf.rho_integrable);
  }

  TEST_CASE("scalar mean path against the closed form") {
    const ProblemData p = fixtures::benchmark_scalar();
    const auto Pi = solve_are_Pi(p);
    const auto off = solve_offset_infinite(p, Pi);
    const auto mf = solve_mean_field_path(p, Pi, off, 20.0, 4000);
    const double m = 0.6 - Pi.X(0, 0);
    const double c = 1.0 - off.value(0);
    for (std::size_t k = 0; k < mf.grid.size(); k += 200) {
      const double expected = oracle::forward_linear(m, c, 5.0, mf.grid.t(k));
      CHECK(std::abs(mf.xbar[k](0) - expected) <= 1e-8 * std::max(1.0, std::abs(expected)));
    }
    REQUIRE(mf.xbar_equilibrium.has_value());
    CHECK((*mf.xbar_equilibrium)(0) == doctest::Approx(-c / m).epsilon(1e-12));
    CHECK((*mf.xbar_equilibrium)(0) == doctest::Approx(6.25).epsilon(1e-3));
    // 0 < m < rho/2: the path drifts away from the equilibrium but stays discounted-integrable
    CHECK_FALSE(mf.xbar_limit.has_value());
    CHECK(mf.rho_integrable);
  }

  TEST_CASE("Hurwitz closed loop converges to its limit") {
    fixtures::Scalar sc;
    sc.q = 1.0;
    const ProblemData p = sc.problem();
    const auto Pi = solve_are_Pi(p);
    const auto mf = solve_mean_field_path(p, Pi, solve_offset_infinite(p, Pi), 60.0, 3000);
    REQUIRE(mf.xbar_limit.has_value());
    CHECK((mf.xbar.back() - *mf.xbar_limit).norm() <= 1e-6);
  }

  TEST_CASE("singular regime integrability depends on the start") {
    const double f = 1.0, rho = 0.6;
    for (double x0 : {-2.0 * f / rho, 1.0, -3.0, 0.0}) {
      const ProblemData p = fixtures::singular_scalar(x0);
      const auto Pi = maximal_solution(p.A + p.G, p.S(), derived_weights(p).Q_bar, p.rho);
      const auto off = solve_offset_infinite(p, Pi);
      const auto mf = solve_mean_field_path(p, Pi, off, 60.0, 6000);
      CHECK(mf.offset_singular);
      CHECK(mf.rho_integrable == (x0 == -2.0 * f / rho));
    }
  }

  TEST_CASE("integrability checker") {
    const TimeGrid g = make_grid(40.0, 4000);
    std::vector<Vector> zero(g.size(), v1(0.0)), grow(g.size()), decay(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      grow[k] = v1(std::exp((0.3 + 0.1) * g.t(k)));
      decay[k] = v1(std::exp(-0.5 * g.t(k)));
    }
    CHECK(check_rho_integrable(zero, g, 0.6));
    CHECK_FALSE(check_rho_integrable(grow, g, 0.6));
    CHECK(check_rho_integrable(decay, g, 0.6));
    CHECK(check_rho_integrable(grow, g, 0.6, true));
    CHECK_THROWS_AS(check_rho_integrable(zero, make_grid(40.0, 10), 0.6), Error);
  }

  TEST_CASE("mean path is affine in its data") {
    auto run = [](double x0, double f, double s) {
      fixtures::Scalar sc;
      sc.mean = x0;
      sc.f = f;
      return stationary_path(sc.problem(), s, 10.0, 1000).xbar;
    };
    const auto full = run(5.0, 1.0, 1.8);
    const auto a = run(5.0, 0.0, 0.0);
    const auto b = run(0.0, 1.0, 0.0);
    const auto c = run(0.0, 0.0, 1.8);
    for (std::size_t k = 0; k < full.size(); ++k)
      CHECK(std::abs(full[k](0) - a[k](0) - b[k](0) - c[k](0)) <= 1e-10 * std::max(1.0, std::abs(full[k](0))));
  }

  TEST_CASE("finite mean path starts at the initial mean") {
    const ProblemData p = fixtures::benchmark_planar();
    const auto path = solve_dre(p, 20.0, 2000);
    const auto mf = solve_mean_field_path(p, path);
    CHECK((mf.xbar.front() - p.init_mean).norm() == 0.0);
    CHECK(mf.s.back().norm() == 0.0);
    CHECK(mf.s0 == path.s.front());
  }
}
