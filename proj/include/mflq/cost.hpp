#pragma once

#include <optional>

#include "mflq/meanfield.hpp"

namespace mflq {

/// total = initial_term + N (q_term + reference_term) + noise_adjustment + N epsilon_term.
/// q_term is the published q functional; reference_term (the constant
/// int e^{-rho t} |eta|_Q^2) and noise_adjustment (exact minus published
/// diffusion contribution) make total equal the expected social cost.
struct CostBreakdown {
  std::size_t N = 1;
  double initial_term = 0.0;
  double q_term = 0.0;
  double reference_term = 0.0;
  double noise_adjustment = 0.0;
  double epsilon_term = 0.0;
  double total = 0.0;
};

double q_finite(const ProblemData& p, const FiniteRiccatiPath& path);
double q_infinite(const ProblemData& p, const AlgebraicSolution& P, const AlgebraicSolution& Pi,
                  const OffsetSolution& s);

/// Finite horizon, decentralized law; epsilon supplied (0 in deterministic runs).
CostBreakdown analytic_social_cost(const ProblemData& p, const FiniteRiccatiPath& path, std::size_t N,
                                   double epsilon = 0.0);
/// Infinite-horizon counterpart with stationary P, Pi.
CostBreakdown analytic_social_cost(const ProblemData& p, const AlgebraicSolution& P, const AlgebraicSolution& Pi,
                                   const OffsetSolution& s, std::size_t N, double epsilon = 0.0);

struct AsymptoticOptimum {
  /// lim (1/N) J_soc including the tracking constant and exact noise terms.
  double value = 0.0;
  /// tr(P Sigma0) + |xbar0|_Pi^2 + 2 s(0)^T xbar0 + q_inf, as published.
  double published_value = 0.0;
  /// Both minimal ARE solutions exist and are negative definite.
  bool hypothesis_verified = false;
  std::optional<Matrix> P_minus, Pi_minus;
};

AsymptoticOptimum asymptotic_average_optimum(const ProblemData& p, const AlgebraicSolution& P,
                                             const AlgebraicSolution& Pi, const OffsetSolution& s);

}  // namespace mflq
