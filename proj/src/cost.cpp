#include "mflq/cost.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

#include "mflq/linalg.hpp"

namespace mflq {

namespace {

double sq_norm(const Vector& v, const Matrix& W) { return v.dot(W * v); }

double simpson_on(const TimeGrid& g, const std::function<double(std::size_t)>& integrand) {
  std::vector<double> y(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) y[k] = integrand(k);
  return linalg::simpson(y, g.h());
}

// int_0^inf e^{-rho t} c(t) dt where c is constant beyond `settle`.
double discounted_infinite(double rho, double settle, const std::function<double(double)>& c) {
  const double tail = std::exp(-rho * settle) * c(settle) / rho;
  if (settle <= 0.0) return tail;
  const TimeGrid g = make_grid(settle, 4000);
  return simpson_on(g, [&](std::size_t k) { return std::exp(-rho * g.t(k)) * c(g.t(k)); }) + tail;
}

double settle_time(const ProblemData& p) {
  return std::max({p.f.settle_time(), p.sigma.settle_time(), p.eta.settle_time()});
}

// s(t) for the infinite horizon on [0, settle] and beyond.
std::function<Vector(double)> offset_function(const ProblemData& p, const AlgebraicSolution& Pi,
                                              const OffsetSolution& s) {
  if (s.constant) {
    const Vector v = s.value;
    return [v](double) { return v; };
  }
  const double settle = settle_time(p);
  const TimeGrid g = make_grid(std::max(settle, 1e-9), 4000);
  auto samples = std::make_shared<std::vector<Vector>>(offset_quadrature(offset_problem(p, Pi), g));
  return [g, samples](double t) -> Vector {
    const double x = std::clamp(t / g.h(), 0.0, static_cast<double>(g.M));
    const auto k = std::min(static_cast<std::size_t>(x), g.M - 1);
    const double w = x - static_cast<double>(k);
    return (1.0 - w) * (*samples)[k] + w * (*samples)[k + 1];
  };
}

double initial_term(const ProblemData& p, const Matrix& P0, const Matrix& Pi0, const Vector& s0, std::size_t N) {
  const double n = static_cast<double>(N);
  return (n - 1.0) * (P0 * p.init_cov).trace() + n * sq_norm(p.init_mean, Pi0) + (Pi0 * p.init_cov).trace() +
         2.0 * n * s0.dot(p.init_mean);
}

}  // namespace

double q_finite(const ProblemData& p, const FiniteRiccatiPath& path) {
  path.require_complete();
  const Matrix R_inv = p.R_inv();
  const TimeGrid& g = path.grid;
  return simpson_on(g, [&](std::size_t k) {
    const double t = g.t(k);
    const Vector sig = p.sigma(t);
    const Vector Bs = p.B.transpose() * path.s[k];
    return std::exp(-p.rho * t) *
           (sq_norm(sig, path.P[k]) + sq_norm(sig, path.Pi[k]) - sq_norm(Bs, R_inv) + 2.0 * path.s[k].dot(p.f(t)));
  });
}

double q_infinite(const ProblemData& p, const AlgebraicSolution& P, const AlgebraicSolution& Pi,
                  const OffsetSolution& s) {
  const Matrix R_inv = p.R_inv();
  const auto s_at = offset_function(p, Pi, s);
  return discounted_infinite(p.rho, settle_time(p), [&](double t) {
    const Vector sig = p.sigma(t);
    const Vector sv = s_at(t);
    const Vector Bs = p.B.transpose() * sv;
    return sq_norm(sig, P.X) + sq_norm(sig, Pi.X) - sq_norm(Bs, R_inv) + 2.0 * sv.dot(p.f(t));
  });
}

CostBreakdown analytic_social_cost(const ProblemData& p, const FiniteRiccatiPath& path, std::size_t N,
                                   double epsilon) {
  path.require_complete();
  const TimeGrid& g = path.grid;
  const double n = static_cast<double>(N);
  CostBreakdown c;
  c.N = N;
  c.initial_term = initial_term(p, path.P.front(), path.Pi.front(), path.s.front(), N);
  c.q_term = q_finite(p, path);
  c.reference_term = simpson_on(g, [&](std::size_t k) {
    const double t = g.t(k);
    return std::exp(-p.rho * t) * sq_norm(p.eta(t), p.Q);
  });
  c.noise_adjustment = -simpson_on(g, [&](std::size_t k) {
    const double t = g.t(k);
    const Vector sig = p.sigma(t);
    return std::exp(-p.rho * t) * (sq_norm(sig, path.P[k]) + (n - 1.0) * sq_norm(sig, path.Pi[k]));
  });
  c.epsilon_term = epsilon;
  c.total = c.initial_term + n * (c.q_term + c.reference_term) + c.noise_adjustment + n * c.epsilon_term;
  return c;
}

CostBreakdown analytic_social_cost(const ProblemData& p, const AlgebraicSolution& P, const AlgebraicSolution& Pi,
                                   const OffsetSolution& s, std::size_t N, double epsilon) {
  const double n = static_cast<double>(N);
  const double settle = settle_time(p);
  CostBreakdown c;
  c.N = N;
  c.initial_term = initial_term(p, P.X, Pi.X, s.s0(), N);
  c.q_term = q_infinite(p, P, Pi, s);
  c.reference_term = discounted_infinite(p.rho, settle, [&](double t) { return sq_norm(p.eta(t), p.Q); });
  c.noise_adjustment = -discounted_infinite(p.rho, settle, [&](double t) {
    const Vector sig = p.sigma(t);
    return sq_norm(sig, P.X) + (n - 1.0) * sq_norm(sig, Pi.X);
  });
  c.epsilon_term = epsilon;
  c.total = c.initial_term + n * (c.q_term + c.reference_term) + c.noise_adjustment + n * c.epsilon_term;
  return c;
}

AsymptoticOptimum asymptotic_average_optimum(const ProblemData& p, const AlgebraicSolution& P,
                                             const AlgebraicSolution& Pi, const OffsetSolution& s) {
  AsymptoticOptimum out;
  const Vector s0 = s.s0();
  const double q_inf = q_infinite(p, P, Pi, s);
  out.published_value =
      (P.X * p.init_cov).trace() + sq_norm(p.init_mean, Pi.X) + 2.0 * s0.dot(p.init_mean) + q_inf;
  const double settle = settle_time(p);
  const double reference = discounted_infinite(p.rho, settle, [&](double t) { return sq_norm(p.eta(t), p.Q); });
  const double pi_noise = discounted_infinite(p.rho, settle, [&](double t) { return sq_norm(p.sigma(t), Pi.X); });
  out.value = out.published_value + reference - pi_noise;

  try {
    const auto Pm = solve_are_antistabilizing(P.A_eff, P.S, P.Q_eff, p.rho);
    const auto Pim = solve_are_antistabilizing(Pi.A_eff, Pi.S, Pi.Q_eff, p.rho);
    out.P_minus = Pm.X;
    out.Pi_minus = Pim.X;
    const auto neg_def = [](const Matrix& X) {
      return -linalg::min_eigenvalue_sym(-X) < -1e-9 * std::max(1.0, X.norm());
    };
    out.hypothesis_verified = neg_def(Pm.X) && neg_def(Pim.X);
  } catch (const Error&) {
    out.hypothesis_verified = false;
  }
  return out;
}

}  // namespace mflq
