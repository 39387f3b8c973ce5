#include "mflq/riccati.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mflq/linalg.hpp"

namespace mflq {

using linalg::symmetrize;

TimeGrid make_grid(double T, std::size_t M) {
  if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorCode::InvalidArgument, "horizon T must be positive");
  if (M < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 steps");
  return TimeGrid{T, M};
}

Matrix dre_rate_P(const ProblemData& p, const Matrix& P) {
  const Matrix S = p.S();
  return p.rho * P - p.A.transpose() * P - P * p.A - p.Q + P * S * P;
}

Matrix dre_rate_Pi(const ProblemData& p, const Matrix& Xi, const Matrix& Pi) {
  const Matrix S = p.S();
  const Matrix AG = p.A + p.G;
  return p.rho * Pi - AG.transpose() * Pi - Pi * AG + Pi * S * Pi - (p.Q - Xi);
}

Matrix dre_rate_K(const ProblemData& p, const Matrix& Xi, const Matrix& P, const Matrix& K) {
  const Matrix S = p.S();
  const Matrix AG = p.A + p.G;
  const Matrix PK = P + K;
  return p.rho * K - AG.transpose() * K - K * AG - p.G.transpose() * P - P * p.G + PK * S * PK - P * S * P + Xi;
}

Vector dre_rate_s(const ProblemData& p, const Matrix& Pi, const Vector& s, const Vector& f,
                  const Vector& eta_bar) {
  const Matrix M = p.A + p.G - p.S() * Pi;
  return p.rho * s - M.transpose() * s - Pi * f + eta_bar;
}

namespace {

struct DreState {
  Matrix P, K, Pi;
  Vector s;
};

struct DreRates {
  Matrix P, K, Pi;
  Vector s;
};

class DreSystem {
 public:
  DreSystem(const ProblemData& p) : p_(p), S_(p.S()), AG_(p.A + p.G), Xi_(derived_weights(p).Xi),
                                    eta_bar_(derived_weights(p).eta_bar) {}

  DreRates rates(double t, const DreState& y) const {
    DreRates d;
    d.P = p_.rho * y.P - p_.A.transpose() * y.P - y.P * p_.A - p_.Q + y.P * S_ * y.P;
    const Matrix PK = y.P + y.K;
    d.K = p_.rho * y.K - AG_.transpose() * y.K - y.K * AG_ - p_.G.transpose() * y.P - y.P * p_.G +
          PK * S_ * PK - y.P * S_ * y.P + Xi_;
    d.Pi = p_.rho * y.Pi - AG_.transpose() * y.Pi - y.Pi * AG_ + y.Pi * S_ * y.Pi - (p_.Q - Xi_);
    const Matrix M = AG_ - S_ * y.Pi;
    d.s = p_.rho * y.s - M.transpose() * y.s - y.Pi * p_.f(t) + eta_bar_(t);
    return d;
  }

 private:
  const ProblemData& p_;
  Matrix S_, AG_, Xi_;
  Signal eta_bar_;
};

DreState axpy(const DreState& y, double a, const DreRates& d) {
  return {y.P + a * d.P, y.K + a * d.K, y.Pi + a * d.Pi, y.s + a * d.s};
}

bool escaped(const DreState& y, double threshold) {
  const auto bad = [&](const auto& m) { return !m.allFinite() || m.norm() > threshold; };
  return bad(y.P) || bad(y.K) || bad(y.Pi) || bad(y.s);
}

}  // namespace

FiniteRiccatiPath solve_dre(const ProblemData& p, double T, std::size_t M, const DreOptions& opt) {
  FiniteRiccatiPath path;
  path.grid = make_grid(T, M);
  const auto n = p.n;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Matrix nan_m = Matrix::Constant(n, n, nan);
  const Vector nan_v = Vector::Constant(n, nan);
  path.P.assign(M + 1, nan_m);
  path.K.assign(M + 1, nan_m);
  path.K_direct.assign(M + 1, nan_m);
  path.Pi.assign(M + 1, nan_m);
  path.s.assign(M + 1, nan_v);
  path.P_rate.assign(M + 1, nan_m);
  path.Pi_rate.assign(M + 1, nan_m);
  path.s_rate.assign(M + 1, nan_v);

  const DreSystem sys(p);
  const double h = path.grid.h();
  DreState y{Matrix::Zero(n, n), Matrix::Zero(n, n), Matrix::Zero(n, n), Vector::Zero(n)};

  auto store = [&](std::size_t k, const DreState& v) {
    path.P[k] = v.P;
    path.K_direct[k] = v.K;
    path.Pi[k] = v.Pi;
    path.K[k] = v.Pi - v.P;
    path.s[k] = v.s;
    const DreRates d = sys.rates(path.grid.t(k), v);
    path.P_rate[k] = d.P;
    path.Pi_rate[k] = d.Pi;
    path.s_rate[k] = d.s;
  };
  store(M, y);

  // Classical RK4 with step -h.
  for (std::size_t k = M; k-- > 0;) {
    const double t1 = path.grid.t(k + 1);
    const double tm = t1 - 0.5 * h;
    const double t0 = path.grid.t(k);
    const DreRates k1 = sys.rates(t1, y);
    const DreRates k2 = sys.rates(tm, axpy(y, -0.5 * h, k1));
    const DreRates k3 = sys.rates(tm, axpy(y, -0.5 * h, k2));
    const DreRates k4 = sys.rates(t0, axpy(y, -h, k3));
    DreState next;
    next.P = symmetrize(y.P - h / 6.0 * (k1.P + 2.0 * k2.P + 2.0 * k3.P + k4.P));
    next.K = symmetrize(y.K - h / 6.0 * (k1.K + 2.0 * k2.K + 2.0 * k3.K + k4.K));
    next.Pi = symmetrize(y.Pi - h / 6.0 * (k1.Pi + 2.0 * k2.Pi + 2.0 * k3.Pi + k4.Pi));
    next.s = y.s - h / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
    if (escaped(next, opt.blowup_threshold)) {
      path.blowup_index = k;
      path.blowup_time = t0;
      return path;
    }
    y = std::move(next);
    store(k, y);
  }

  if (opt.check_refinement && M >= 4) {
    const FiniteRiccatiPath coarse = solve_dre(p, T, M / 2, DreOptions{opt.blowup_threshold, false});
    if (!coarse.complete()) {
      throw Error(ErrorCode::StepTooCoarse, "coarser grid escapes while the fine grid does not");
    }
    const double diff = (coarse.P.front() - path.P.front()).norm();
    if (diff > 1e-6 * (1.0 + path.P.front().norm())) {
      std::ostringstream os;
      os << "halving the step count moves P(0) by " << diff;
      throw Error(ErrorCode::StepTooCoarse, os.str());
    }
  }
  return path;
}

void FiniteRiccatiPath::require_complete() const {
  if (!complete()) {
    std::ostringstream os;
    os.precision(10);
    os << "Riccati solution escapes at t = " << *blowup_time << " (grid index " << *blowup_index << ")";
    throw Error(ErrorCode::BlowUp, os.str());
  }
}

double FiniteRiccatiPath::pi_identity_error() const {
  double worst = 0.0;
  const std::size_t first = blowup_index ? *blowup_index + 1 : 0;
  for (std::size_t k = first; k < Pi.size(); ++k) {
    worst = std::max(worst, (Pi[k] - P[k] - K_direct[k]).norm());
  }
  return worst;
}

// Cubic Hermite midpoint on [t_k, t_k+1].
Matrix FiniteRiccatiPath::P_mid(std::size_t k) const {
  return 0.5 * (P[k] + P[k + 1]) + grid.h() / 8.0 * (P_rate[k] - P_rate[k + 1]);
}

Matrix FiniteRiccatiPath::Pi_mid(std::size_t k) const {
  return 0.5 * (Pi[k] + Pi[k + 1]) + grid.h() / 8.0 * (Pi_rate[k] - Pi_rate[k + 1]);
}

Vector FiniteRiccatiPath::s_mid(std::size_t k) const {
  return 0.5 * (s[k] + s[k + 1]) + grid.h() / 8.0 * (s_rate[k] - s_rate[k + 1]);
}

double are_residual(const Matrix& X, const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff, double rho) {
  return (rho * X - A_eff.transpose() * X - X * A_eff + X * S * X - Q_eff).norm();
}

AlgebraicSolution evaluate_solution(const Matrix& X, const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff,
                                    double rho) {
  AlgebraicSolution sol;
  sol.X = X;
  sol.A_eff = A_eff;
  sol.S = S;
  sol.Q_eff = Q_eff;
  sol.rho = rho;
  sol.closed_loop = A_eff - S * X;
  sol.residual = are_residual(X, A_eff, S, Q_eff, rho);
  sol.spectral_abscissa = linalg::spectral_abscissa(sol.closed_loop);
  sol.is_rho_stabilizing = sol.spectral_abscissa < rho / 2.0;
  return sol;
}

namespace {

lapack_logical select_stable(const double* wr, const double*) { return *wr < 0.0; }
lapack_logical select_antistable(const double* wr, const double*) { return *wr > 0.0; }

void check_dimensions(const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff) {
  const auto n = A_eff.rows();
  if (A_eff.cols() != n || S.rows() != n || S.cols() != n || Q_eff.rows() != n || Q_eff.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "ARE coefficients must all be n x n");
  }
}

// Solve Ac^T D + D Ac = R by Kronecker vectorization; n is small here.
Matrix lyapunov(const Matrix& Ac, const Matrix& R) {
  const auto n = Ac.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix L = Matrix::Zero(n * n, n * n);
  const Matrix At = Ac.transpose();
  // vec(At D) = (I kron At) vec(D); vec(D Ac) = (Ac^T kron I) vec(D)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      L.block(i * n, j * n, n, n) += I(i, j) * At + At(i, j) * I;
    }
  }
  const Vector d = L.fullPivLu().solve(Eigen::Map<const Vector>(R.data(), n * n));
  return Eigen::Map<const Matrix>(d.data(), n, n);
}

AlgebraicSolution schur_solve(const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff, double rho,
                              const AreOptions& opt, bool stable) {
  check_dimensions(A_eff, S, Q_eff);
  const auto n = A_eff.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix H(2 * n, 2 * n);
  H << A_eff - 0.5 * rho * I, S, Q_eff, -A_eff.transpose() + 0.5 * rho * I;

  const double scale = std::max(1.0, linalg::norm2(H));
  Matrix T = H;
  Matrix Z(2 * n, 2 * n);
  Vector wr(2 * n), wi(2 * n);
  lapack_int sdim = 0;
  const lapack_int N = static_cast<lapack_int>(2 * n);
  const lapack_int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'S', stable ? select_stable : select_antistable, N,
                                        T.data(), N, &sdim, wr.data(), wi.data(), Z.data(), N);
  if (info != 0) {
    throw Error(ErrorCode::SubspaceNotGraph, "real Schur decomposition failed (dgees info " +
                                                 std::to_string(info) + ")");
  }
  const double gap = wr.cwiseAbs().minCoeff();
  if (gap <= opt.axis_tol * scale) {
    std::ostringstream os;
    os << "Hamiltonian has an eigenvalue with |Re| = " << gap << " on the imaginary axis";
    throw Error(ErrorCode::ImaginaryAxisEigenvalue, os.str());
  }
  if (sdim != n) {
    throw Error(ErrorCode::SubspaceNotGraph, "selected invariant subspace has wrong dimension");
  }

  // H [I; -X] = [I; -X] (A_eff - rho/2 I - S X) is exactly the ARE in its
  // second block row, so span[Z1; Z2] = span[I; -X] gives X = -Z2 Z1^-1.
  const Matrix Z1 = Z.topLeftCorner(n, n);
  const Matrix Z2 = Z.bottomLeftCorner(n, n);
  const Eigen::JacobiSVD<Matrix> svd(Z1);
  const Vector sv = svd.singularValues();
  if (!(sv(n - 1) > 1e-12 * sv(0))) {
    throw Error(ErrorCode::SubspaceNotGraph, "invariant subspace is not the graph of a matrix");
  }
  const Matrix Xraw = -Z1.transpose().partialPivLu().solve(Z2.transpose()).transpose();
  const double asym = (Xraw - Xraw.transpose()).norm() / std::max(1.0, Xraw.norm());
  if (asym > 1e-7) {
    std::ostringstream os;
    os << "Schur solution asymmetry " << asym;
    throw Error(ErrorCode::AsymmetricResult, os.str());
  }
  Matrix X = symmetrize(Xraw);

  if (opt.defect_correction) {
    const Matrix R = rho * X - A_eff.transpose() * X - X * A_eff + X * S * X - Q_eff;
    const Matrix Ac = A_eff - S * X - 0.5 * rho * I;
    const Matrix D = lyapunov(Ac, R);
    if (D.allFinite()) {
      const Matrix Xn = symmetrize(X + D);
      if (are_residual(Xn, A_eff, S, Q_eff, rho) < are_residual(X, A_eff, S, Q_eff, rho)) X = Xn;
    }
  }
  return evaluate_solution(X, A_eff, S, Q_eff, rho);
}

}  // namespace

AlgebraicSolution solve_are(const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff, double rho,
                            const AreOptions& opt) {
  return schur_solve(A_eff, S, Q_eff, rho, opt, true);
}

AlgebraicSolution solve_are_antistabilizing(const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff, double rho,
                                            const AreOptions& opt) {
  return schur_solve(A_eff, S, Q_eff, rho, opt, false);
}

std::vector<double> scalar_are_roots(double a, double s, double q, double rho) {
  // s x^2 + (rho - 2a) x - q = 0
  const double b = rho - 2.0 * a;
  std::vector<double> roots;
  if (s == 0.0) {
    if (b != 0.0) roots.push_back(q / b);
    return roots;
  }
  const double disc = b * b + 4.0 * s * q;
  if (disc < 0.0) return roots;
  const double sq = std::sqrt(disc);
  // Cancellation-free pair.
  const double qq = -0.5 * (b + std::copysign(sq, b));
  if (qq == 0.0) {
    roots.push_back(0.0);
    return roots;
  }
  double r1 = qq / s;
  double r2 = -q / qq;
  if (r1 > r2) std::swap(r1, r2);
  roots.push_back(r1);
  if (disc > 0.0) roots.push_back(r2);
  return roots;
}

AlgebraicSolution maximal_solution(const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff, double rho) {
  try {
    return solve_are(A_eff, S, Q_eff, rho);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ImaginaryAxisEigenvalue || A_eff.rows() != 1) throw;
    const auto roots = scalar_are_roots(A_eff(0, 0), S(0, 0), Q_eff(0, 0), rho);
    if (roots.empty()) throw;
    return evaluate_solution(Matrix::Constant(1, 1, roots.back()), A_eff, S, Q_eff, rho);
  }
}

Classification classify_solution(const AlgebraicSolution& sol, double rho) {
  Classification c;
  c.spectral_abscissa = linalg::spectral_abscissa(sol.closed_loop);
  c.is_rho_stabilizing = c.spectral_abscissa < rho / 2.0;
  if (sol.X.rows() == 1) {
    c.scalar_roots = scalar_are_roots(sol.A_eff(0, 0), sol.S(0, 0), sol.Q_eff(0, 0), rho);
    const double x = sol.X(0, 0);
    const double tol = 1e-8 * (1.0 + std::abs(x));
    bool maximal = true;
    for (double r : c.scalar_roots) maximal = maximal && r <= x + tol;
    c.is_maximal = maximal;
  }
  return c;
}

AlgebraicSolution solve_are_P(const ProblemData& p) { return solve_are(p.A, p.S(), p.Q, p.rho); }

AlgebraicSolution solve_are_Pi(const ProblemData& p) {
  return solve_are(p.A + p.G, p.S(), derived_weights(p).Q_bar, p.rho);
}

}  // namespace mflq
