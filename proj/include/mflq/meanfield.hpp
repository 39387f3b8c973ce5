#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mflq/riccati.hpp"

namespace mflq {

/// Offset of the infinite-horizon law. Constant signals give a single
/// stationary vector; table signals give samples on a grid.
struct OffsetSolution {
  bool constant = true;
  Vector value;                 // constant case
  TimeGrid grid;                // table case
  std::vector<Vector> samples;  // table case, one per grid node
  /// Pi is not rho-stabilizing and the forcing vanishes, so s = 0 was taken
  /// as the only admissible solution.
  bool singular = false;
  /// Table signals that never settle within the truncation window.
  bool truncated_approximation = false;

  Vector at_node(std::size_t k) const { return constant ? value : samples.at(k); }
  Vector s0() const { return constant ? value : samples.front(); }
};

struct MeanFieldPath {
  TimeGrid grid;
  std::vector<Vector> s;
  std::vector<Vector> xbar;
  Vector s0;
  /// Limit of xbar when the closed loop is Hurwitz and signals are constant.
  std::optional<Vector> xbar_limit;
  /// Stationary point of the xbar ODE (may be repelling).
  std::optional<Vector> xbar_equilibrium;
  bool rho_integrable = false;
  bool offset_singular = false;
};

/// Linear offset equation ds/dt = (rho I - M^T) s - g(t); its C_{rho/2}
/// solution is s(t) = int_t^inf e^{-(rho I - M^T)(tau - t)} g(tau) dtau.
struct OffsetProblem {
  Matrix closed_loop;  // M
  double rho = 0.0;
  std::function<Vector(double)> forcing;  // g
  /// Times where g may change slope; g is constant after the last one.
  std::vector<double> knots;
  bool constant = true;
};

OffsetSolution solve_offset_linear(const OffsetProblem& op, std::optional<TimeGrid> grid = std::nullopt);

/// Backward Simpson recursion for the integral formula on the grid, started
/// where the integrand has decayed below 1e-12.
std::vector<Vector> offset_quadrature(const OffsetProblem& op, const TimeGrid& grid, bool* truncated = nullptr);

/// Forward RK4 of dx/dt = D x + c(j), where c is sampled at half-step index j in [0, 2M].
std::vector<Vector> integrate_affine_forward(const Matrix& D, const std::function<Vector(std::size_t)>& c,
                                             const Vector& x0, const TimeGrid& grid);

/// Backward RK4 of the s equation on the path's grid, Pi taken from the path
/// (Hermite midpoints).
std::vector<Vector> solve_offset_finite(const ProblemData& p, const FiniteRiccatiPath& path);

/// Stationary solve for constant signals, quadrature otherwise. A table-signal
/// solve needs a grid to sample on.
OffsetSolution solve_offset_infinite(const ProblemData& p, const AlgebraicSolution& Pi,
                                     std::optional<TimeGrid> grid = std::nullopt);

/// The offset problem with M = A + G - S Pi and g = Pi f - eta_bar.
OffsetProblem offset_problem(const ProblemData& p, const AlgebraicSolution& Pi);

MeanFieldPath solve_mean_field_path(const ProblemData& p, const FiniteRiccatiPath& path);
MeanFieldPath solve_mean_field_path(const ProblemData& p, const AlgebraicSolution& Pi, const OffsetSolution& s,
                                    double T, std::size_t M);

/// Final-quarter discounted energy below 1e-8 of the total, zero energy, or a
/// supplied closed-loop verdict.
bool check_rho_integrable(const std::vector<Vector>& path, const TimeGrid& grid, double rho,
                          std::optional<bool> closed_loop_hurwitz = std::nullopt);

}  // namespace mflq
