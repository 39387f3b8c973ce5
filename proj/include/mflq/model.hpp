#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mflq/error.hpp"

namespace mflq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Time signal on [0, inf): either a constant vector or a table of knots with
/// linear interpolation. Outside the knot range the nearest end value is held.
class Signal {
 public:
  Signal() = default;

  static Signal constant(Vector value);
  static Signal table(std::vector<double> knots, std::vector<Vector> values);

  /// Throws NegativeTime for t < 0.
  Vector operator()(double t) const;

  bool is_constant() const { return knots_.empty(); }
  Eigen::Index dimension() const { return values_.empty() ? 0 : values_.front().size(); }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<Vector>& values() const { return values_; }
  /// Time after which the signal is constant (0 for constant signals).
  double settle_time() const { return knots_.empty() ? 0.0 : knots_.back(); }

  /// Pointwise image under a fixed linear map.
  Signal mapped(const Matrix& map) const;

 private:
  std::vector<double> knots_;
  std::vector<Vector> values_;
};

/// Unvalidated coefficients as read from a scenario file.
struct ProblemConfig {
  Matrix A, B, G, Q, R, Gamma;
  double rho = 0.0;
  Signal f, sigma, eta;
  Vector init_mean;
  Matrix init_cov;
};

/// Validated model coefficients. Treated as immutable once built.
struct ProblemData {
  Eigen::Index n = 0;
  Eigen::Index r = 0;
  Matrix A, B, G, Q, R, Gamma;
  double rho = 0.0;
  Signal f, sigma, eta;
  Vector init_mean;
  Matrix init_cov;

  Matrix R_inv() const;
  /// B R^-1 B^T
  Matrix S() const;
  bool signals_constant() const;
};

struct DerivedWeights {
  Matrix Xi;      // Gamma^T Q + Q Gamma - Gamma^T Q Gamma
  Signal eta_bar; // (I - Gamma)^T Q eta
  Matrix Q_bar;   // (I - Gamma)^T Q (I - Gamma) = Q - Xi
};

/// Relative asymmetry tolerance; beyond it Q and R are rejected.
inline constexpr double kSymmetryTolerance = 1e-9;

ProblemData build_problem(const ProblemConfig& config);
DerivedWeights derived_weights(const ProblemData& p);

}  // namespace mflq
