#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mflq/model.hpp"

namespace mflq {

/// Uniform grid 0 = t_0 < ... < t_M = T.
struct TimeGrid {
  double T = 0.0;
  std::size_t M = 0;

  double h() const { return T / static_cast<double>(M); }
  double t(std::size_t k) const { return k == M ? T : static_cast<double>(k) * h(); }
  std::size_t size() const { return M + 1; }
  bool operator==(const TimeGrid& o) const { return T == o.T && M == o.M; }
};

TimeGrid make_grid(double T, std::size_t M);

struct DreOptions {
  double blowup_threshold = 1e12;
  /// Re-solve on M/2 steps and raise StepTooCoarse if P(0) moves by more
  /// than 1e-6 (1 + |P(0)|).
  bool check_refinement = false;
};

/// Backward solution of the finite-horizon Riccati system. Entries at grid
/// indices below blowup_index are NaN when the solve escaped.
struct FiniteRiccatiPath {
  TimeGrid grid;
  std::vector<Matrix> P;
  std::vector<Matrix> K;         // Pi - P
  std::vector<Matrix> K_direct;  // integrated from its own equation
  std::vector<Matrix> Pi;
  std::vector<Vector> s;
  // Time derivatives at the nodes, used for Hermite midpoints.
  std::vector<Matrix> P_rate, Pi_rate;
  std::vector<Vector> s_rate;
  std::optional<double> blowup_time;
  std::optional<std::size_t> blowup_index;

  bool complete() const { return !blowup_index.has_value(); }
  /// Throws BlowUp if the backward solve escaped.
  void require_complete() const;
  /// max_k |Pi - P - K_direct|_F
  double pi_identity_error() const;

  Matrix P_mid(std::size_t k) const;
  Matrix Pi_mid(std::size_t k) const;
  Matrix K_mid(std::size_t k) const { return Pi_mid(k) - P_mid(k); }
  Vector s_mid(std::size_t k) const;
};

FiniteRiccatiPath solve_dre(const ProblemData& p, double T, std::size_t M, const DreOptions& opt = {});

/// Right-hand sides dY/dt of the Riccati system, exposed for residual checks.
Matrix dre_rate_P(const ProblemData& p, const Matrix& P);
Matrix dre_rate_Pi(const ProblemData& p, const Matrix& Xi, const Matrix& Pi);
Matrix dre_rate_K(const ProblemData& p, const Matrix& Xi, const Matrix& P, const Matrix& K);
Vector dre_rate_s(const ProblemData& p, const Matrix& Pi, const Vector& s, const Vector& f,
                  const Vector& eta_bar);

/// Solution of rho X = A_eff^T X + X A_eff - X S X + Q_eff.
struct AlgebraicSolution {
  Matrix X;
  Matrix closed_loop;  // A_eff - S X
  double residual = 0.0;
  bool is_rho_stabilizing = false;
  double spectral_abscissa = 0.0;

  Matrix A_eff, S, Q_eff;
  double rho = 0.0;
};

struct AreOptions {
  /// Relative imaginary-axis tolerance on the Hamiltonian spectrum.
  double axis_tol = 1e-8;
  /// One Newton step on the Lyapunov linearization; kept only if it lowers the residual.
  bool defect_correction = true;
};

/// Stabilizing (maximal) solution from the stable invariant subspace of
/// [[A_eff - rho/2 I, S], [Q_eff, -A_eff^T + rho/2 I]].
AlgebraicSolution solve_are(const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff, double rho,
                            const AreOptions& opt = {});
/// Minimal solution from the antistable subspace.
AlgebraicSolution solve_are_antistabilizing(const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff,
                                            double rho, const AreOptions& opt = {});
/// solve_are, except that for n = 1 an imaginary-axis Hamiltonian falls back
/// to the largest real root of the scalar quadratic.
AlgebraicSolution maximal_solution(const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff, double rho);

/// Wraps an arbitrary candidate X with its closed loop, residual and flags.
AlgebraicSolution evaluate_solution(const Matrix& X, const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff,
                                    double rho);

double are_residual(const Matrix& X, const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff, double rho);

struct Classification {
  bool is_rho_stabilizing = false;
  double spectral_abscissa = 0.0;
  /// Only decided for n = 1.
  std::optional<bool> is_maximal;
  /// Real roots of the scalar equation, ascending (n = 1 only).
  std::vector<double> scalar_roots;
};

Classification classify_solution(const AlgebraicSolution& sol, double rho);

/// Real roots of s x^2 + (rho - 2a) x - q = 0, ascending.
std::vector<double> scalar_are_roots(double a, double s, double q, double rho);

AlgebraicSolution solve_are_P(const ProblemData& p);
AlgebraicSolution solve_are_Pi(const ProblemData& p);

}  // namespace mflq
