#include "mflq/meanfield.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mflq/linalg.hpp"

namespace mflq {

namespace {

void check_blowup(const Vector& v, double t) {
  if (!v.allFinite() || v.norm() > 1e12) {
    std::ostringstream os;
    os << "path escapes at t = " << t;
    throw Error(ErrorCode::BlowUp, os.str());
  }
}

}  // namespace

std::vector<Vector> solve_offset_finite(const ProblemData& p, const FiniteRiccatiPath& path) {
  path.require_complete();
  const TimeGrid& g = path.grid;
  const Signal eta_bar = derived_weights(p).eta_bar;
  const Matrix S = p.S();
  const Matrix AG = p.A + p.G;
  auto rate = [&](double t, const Matrix& Pi, const Vector& s) -> Vector {
    return p.rho * s - (AG - S * Pi).transpose() * s - Pi * p.f(t) + eta_bar(t);
  };
  std::vector<Vector> s(g.size());
  s[g.M] = Vector::Zero(p.n);
  const double h = g.h();
  for (std::size_t k = g.M; k-- > 0;) {
    const double t1 = g.t(k + 1), tm = t1 - 0.5 * h, t0 = g.t(k);
    const Matrix Pm = path.Pi_mid(k);
    const Vector k1 = rate(t1, path.Pi[k + 1], s[k + 1]);
    const Vector k2 = rate(tm, Pm, s[k + 1] - 0.5 * h * k1);
    const Vector k3 = rate(tm, Pm, s[k + 1] - 0.5 * h * k2);
    const Vector k4 = rate(t0, path.Pi[k], s[k + 1] - h * k3);
    s[k] = s[k + 1] - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_blowup(s[k], t0);
  }
  return s;
}

OffsetProblem offset_problem(const ProblemData& p, const AlgebraicSolution& Pi) {
  OffsetProblem op;
  op.closed_loop = p.A + p.G - p.S() * Pi.X;
  op.rho = p.rho;
  const Matrix PiX = Pi.X;
  const Signal f = p.f;
  const Signal eta_bar = derived_weights(p).eta_bar;
  op.forcing = [PiX, f, eta_bar](double t) -> Vector { return PiX * f(t) - eta_bar(t); };
  op.knots = p.f.knots();
  op.knots.insert(op.knots.end(), p.eta.knots().begin(), p.eta.knots().end());
  std::sort(op.knots.begin(), op.knots.end());
  op.constant = p.f.is_constant() && p.eta.is_constant();
  return op;
}

std::vector<Vector> offset_quadrature(const OffsetProblem& op, const TimeGrid& grid, bool* truncated) {
  const auto n = op.closed_loop.rows();
  const Matrix L = op.rho * Matrix::Identity(n, n) - op.closed_loop.transpose();
  const double h = grid.h();
  const Matrix E_half = (-0.5 * h * L).exp();
  const Matrix E_full = E_half * E_half;

  double gmax = std::max(op.forcing(0.0).norm(), op.forcing(grid.T).norm());
  for (double t : op.knots) gmax = std::max(gmax, op.forcing(t).norm());

  // Beyond max(T, last knot) the integrand is e^{-L u} times a constant; march
  // until that bound drops below 1e-12.
  const double settle = op.knots.empty() ? 0.0 : op.knots.back();
  const double start = std::max(grid.T, settle);
  std::size_t extra = 0;
  Matrix decay = Matrix::Identity(n, n);
  const std::size_t cap = 10000000;
  while (linalg::norm2(decay) * gmax >= 1e-12 && extra < cap) {
    decay = E_full * decay;
    ++extra;
  }
  if (truncated) *truncated = extra == cap;

  const auto k_start = static_cast<std::size_t>(std::ceil(start / h - 1e-9));
  const std::size_t k_end = k_start + extra;
  Vector s = Vector::Zero(n);
  std::vector<Vector> out(grid.size(), Vector::Zero(n));
  for (std::size_t k = k_end; k-- > 0;) {
    const double t0 = static_cast<double>(k) * h;
    const Vector local = h / 6.0 * (op.forcing(t0) + 4.0 * E_half * op.forcing(t0 + 0.5 * h) +
                                    E_full * op.forcing(t0 + h));
    s = E_full * s + local;
    if (k <= grid.M) out[k] = s;
  }
  return out;
}

OffsetSolution solve_offset_linear(const OffsetProblem& op, std::optional<TimeGrid> grid) {
  const auto n = op.closed_loop.rows();
  bool zero_forcing = op.forcing(0.0).norm() == 0.0;
  for (double t : op.knots) zero_forcing = zero_forcing && op.forcing(t).norm() == 0.0;

  const bool stabilizing = linalg::spectral_abscissa(op.closed_loop) < 0.5 * op.rho;
  OffsetSolution out;
  out.constant = op.constant;
  if (!stabilizing) {
    if (!zero_forcing) {
      throw Error(ErrorCode::NotStabilizing, "closed loop is not rho-stabilizing; the offset integral diverges");
    }
    out.singular = true;
    out.constant = true;
    out.value = Vector::Zero(n);
    return out;
  }
  if (op.constant) {
    const Matrix L = op.rho * Matrix::Identity(n, n) - op.closed_loop.transpose();
    out.value = L.partialPivLu().solve(op.forcing(0.0));
    return out;
  }
  if (!grid) throw Error(ErrorCode::InvalidArgument, "table-signal offset needs a sampling grid");
  out.grid = *grid;
  out.samples = offset_quadrature(op, *grid, &out.truncated_approximation);
  return out;
}

OffsetSolution solve_offset_infinite(const ProblemData& p, const AlgebraicSolution& Pi,
                                     std::optional<TimeGrid> grid) {
  return solve_offset_linear(offset_problem(p, Pi), grid);
}

std::vector<Vector> integrate_affine_forward(const Matrix& D, const std::function<Vector(std::size_t)>& c,
                                             const Vector& x0, const TimeGrid& g) {
  std::vector<Vector> x(g.size());
  x[0] = x0;
  const double h = g.h();
  for (std::size_t k = 0; k < g.M; ++k) {
    const std::size_t j = 2 * k;
    const Vector cm = c(j + 1);
    const Vector k1 = D * x[k] + c(j);
    const Vector k2 = D * (x[k] + 0.5 * h * k1) + cm;
    const Vector k3 = D * (x[k] + 0.5 * h * k2) + cm;
    const Vector k4 = D * (x[k] + h * k3) + c(j + 2);
    x[k + 1] = x[k] + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_blowup(x[k + 1], g.t(k + 1));
  }
  return x;
}

MeanFieldPath solve_mean_field_path(const ProblemData& p, const FiniteRiccatiPath& path) {
  path.require_complete();
  MeanFieldPath mf;
  mf.grid = path.grid;
  mf.s = path.s;
  mf.s0 = path.s.front();
  const TimeGrid& g = mf.grid;
  const Matrix S = p.S();
  const Matrix AG = p.A + p.G;
  auto rate = [&](const Matrix& Pi, const Vector& s, double t, const Vector& x) -> Vector {
    return AG * x - S * (Pi * x + s) + p.f(t);
  };
  mf.xbar.resize(g.size());
  mf.xbar[0] = p.init_mean;
  const double h = g.h();
  for (std::size_t k = 0; k < g.M; ++k) {
    const double t0 = g.t(k), tm = t0 + 0.5 * h, t1 = g.t(k + 1);
    const Matrix Pm = path.Pi_mid(k);
    const Vector sm = path.s_mid(k);
    const Vector& x = mf.xbar[k];
    const Vector k1 = rate(path.Pi[k], path.s[k], t0, x);
    const Vector k2 = rate(Pm, sm, tm, x + 0.5 * h * k1);
    const Vector k3 = rate(Pm, sm, tm, x + 0.5 * h * k2);
    const Vector k4 = rate(path.Pi[k + 1], path.s[k + 1], t1, x + h * k3);
    mf.xbar[k + 1] = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_blowup(mf.xbar[k + 1], t1);
  }
  mf.rho_integrable = check_rho_integrable(mf.xbar, mf.grid, p.rho);
  return mf;
}

MeanFieldPath solve_mean_field_path(const ProblemData& p, const AlgebraicSolution& Pi, const OffsetSolution& s,
                                    double T, std::size_t M) {
  MeanFieldPath mf;
  mf.grid = make_grid(T, M);
  mf.offset_singular = s.singular;
  const TimeGrid fine_grid = make_grid(T, 2 * M);
  std::vector<Vector> fine;
  if (!s.constant) {
    if (s.grid == fine_grid) {
      fine = s.samples;
    } else if (s.grid == mf.grid) {
      fine = offset_quadrature(offset_problem(p, Pi), fine_grid);
    } else {
      throw Error(ErrorCode::GridMismatch, "offset samples are on a different grid");
    }
  }
  auto s_half = [&](std::size_t j) -> Vector { return s.constant ? s.value : fine[j]; };
  const Matrix S = p.S();
  const Matrix Mcl = p.A + p.G - S * Pi.X;
  const double h2 = 0.5 * mf.grid.h();
  mf.xbar = integrate_affine_forward(
      Mcl, [&](std::size_t j) -> Vector { return p.f(h2 * static_cast<double>(j)) - S * s_half(j); }, p.init_mean,
      mf.grid);
  mf.s.resize(mf.grid.size());
  for (std::size_t k = 0; k < mf.grid.size(); ++k) mf.s[k] = s_half(2 * k);
  mf.s0 = mf.s.front();

  const double abscissa = linalg::spectral_abscissa(Mcl);
  if (s.constant && p.f.is_constant()) {
    const Eigen::FullPivLU<Matrix> lu(Mcl);
    if (lu.isInvertible()) {
      mf.xbar_equilibrium = lu.solve(S * s.value - p.f(0.0));
      if (abscissa < 0.0) mf.xbar_limit = mf.xbar_equilibrium;
    }
  }
  const bool shifted_hurwitz = abscissa < 0.5 * p.rho;
  mf.rho_integrable = check_rho_integrable(mf.xbar, mf.grid, p.rho,
                                           shifted_hurwitz ? std::optional<bool>(true) : std::nullopt);
  return mf;
}

bool check_rho_integrable(const std::vector<Vector>& path, const TimeGrid& grid, double rho,
                          std::optional<bool> closed_loop_hurwitz) {
  if (closed_loop_hurwitz && *closed_loop_hurwitz) return true;
  if (path.size() != grid.size() || grid.M < 4) {
    throw Error(ErrorCode::GridMismatch, "rho-integrability needs a path on a grid of at least 4 steps");
  }
  std::vector<double> e(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) e[k] = std::exp(-rho * grid.t(k)) * path[k].squaredNorm();
  const double h = grid.h();
  const double whole = linalg::simpson(e, h);
  if (whole == 0.0) return true;
  const std::size_t q = (3 * grid.M) / 4;
  const std::vector<double> tail(e.begin() + static_cast<std::ptrdiff_t>(q), e.end());
  return linalg::simpson(tail, h) < 1e-8 * whole;
}

}  // namespace mflq
