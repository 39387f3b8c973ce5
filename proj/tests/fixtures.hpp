#pragma once

#include <random>

#include "mflq/control.hpp"
#include "mflq/model.hpp"

namespace fixtures {

inline mflq::Matrix m1(double v) { return mflq::Matrix::Constant(1, 1, v); }
inline mflq::Vector v1(double v) { return mflq::Vector::Constant(1, v); }

struct Scalar {
  double a = 0.8, b = 1, g = -0.2, q = -0.1, r = 1, gamma = 0.2, rho = 0.6;
  double f = 1, sigma = 0.2, eta = 5, mean = 5, var = 0.3;

  mflq::ProblemConfig config() const {
    mflq::ProblemConfig c;
    c.A = m1(a);
    c.B = m1(b);
    c.G = m1(g);
    c.Q = m1(q);
    c.R = m1(r);
    c.Gamma = m1(gamma);
    c.rho = rho;
    c.f = mflq::Signal::constant(v1(f));
    c.sigma = mflq::Signal::constant(v1(sigma));
    c.eta = mflq::Signal::constant(v1(eta));
    c.init_mean = v1(mean);
    c.init_cov = m1(var);
    return c;
  }
  mflq::ProblemData problem() const { return mflq::build_problem(config()); }
};

/// The numerical scalar benchmark.
inline mflq::ProblemData benchmark_scalar() { return Scalar{}.problem(); }

/// The planar benchmark (rho and R as documented in the README).
inline mflq::ProblemData benchmark_planar() {
  mflq::ProblemConfig c;
  c.A.resize(2, 2);
  c.A << 0.1, 0, -1, 0.2;
  c.B.resize(2, 1);
  c.B << 1, 1;
  c.G.resize(2, 2);
  c.G << -0.5, 0, 0, -0.3;
  c.Q = mflq::Matrix::Identity(2, 2);
  c.R = m1(1);
  c.Gamma.resize(2, 2);
  c.Gamma << 1, 0, 1, 1;
  c.rho = 0.6;
  mflq::Vector f(2), sigma(2), eta(2), mean(2);
  f << 1, 1;
  sigma << 0.5, 0.5;
  eta << 0, 0.5;
  mean << 5, 5;
  c.f = mflq::Signal::constant(f);
  c.sigma = mflq::Signal::constant(sigma);
  c.eta = mflq::Signal::constant(eta);
  c.init_mean = mean;
  c.init_cov = 0.5 * mflq::Matrix::Identity(2, 2);
  return mflq::build_problem(c);
}

/// a + g = rho / 2 and gamma = 1.
inline mflq::ProblemData singular_scalar(double x0) {
  Scalar s;
  s.a = 0.5;
  s.g = -0.2;
  s.q = 1.0;
  s.gamma = 1.0;
  s.f = 1.0;
  s.eta = 2.0;
  s.mean = x0;
  s.var = 0.0;
  return s.problem();
}

/// f = 0, G = 0, q = 1, gamma = 0.5.
inline mflq::ProblemData legacy_scalar() {
  Scalar s;
  s.a = 0.4;
  s.g = 0.0;
  s.q = 1.0;
  s.gamma = 0.5;
  s.f = 0.0;
  s.sigma = 0.3;
  s.eta = 2.0;
  s.mean = 1.0;
  s.var = 0.2;
  return s.problem();
}

/// Random scalar problem; q_class < 0, == 0, > 0 selects the sign of q.
inline mflq::ProblemData random_scalar(std::mt19937_64& rng, int q_class) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Scalar s;
  s.a = -1.0 + 2.5 * u(rng);
  s.b = 0.2 + 1.8 * u(rng);
  if (u(rng) < 0.5) s.b = -s.b;
  s.g = -1.0 + 2.0 * u(rng);
  s.r = 0.5 + 1.5 * u(rng);
  s.gamma = -1.0 + 3.0 * u(rng);
  s.rho = 0.1 + 1.4 * u(rng);
  s.q = q_class > 0 ? 0.05 + 2.0 * u(rng) : (q_class < 0 ? -(0.01 + u(rng)) : 0.0);
  return s.problem();
}

/// Stationary decentralized law with its ingredients.
struct InfiniteLaw {
  mflq::AlgebraicSolution P, Pi;
  mflq::OffsetSolution s;
  mflq::MeanFieldPath mf;
  mflq::ControlLaw law;
};

inline InfiniteLaw infinite_law(const mflq::ProblemData& p, double T, std::size_t M) {
  InfiniteLaw out{mflq::solve_are_P(p), mflq::solve_are_Pi(p), {}, {}, {}};
  out.s = mflq::solve_offset_infinite(p, out.Pi);
  out.mf = mflq::solve_mean_field_path(p, out.Pi, out.s, T, M);
  out.law = mflq::decentralized_law_infinite(p, out.P, out.Pi, out.mf);
  return out;
}

/// Finite-horizon decentralized law with its ingredients.
struct FiniteLaw {
  mflq::FiniteRiccatiPath path;
  mflq::MeanFieldPath mf;
  mflq::ControlLaw law;
};

inline FiniteLaw finite_law(const mflq::ProblemData& p, double T, std::size_t M) {
  FiniteLaw out;
  out.path = mflq::solve_dre(p, T, M);
  out.mf = mflq::solve_mean_field_path(p, out.path);
  out.law = mflq::decentralized_law_finite(p, out.path, out.mf);
  return out;
}

}  // namespace fixtures
