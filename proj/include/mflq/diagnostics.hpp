#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "mflq/riccati.hpp"

namespace mflq {

/// One PBH rank test per tested eigenvalue.
struct PbhCertificate {
  std::vector<std::complex<double>> eigenvalues;
  std::vector<double> min_singular_values;
  std::vector<int> ranks;
  int n = 0;
};

struct PbhResult {
  bool holds = false;
  PbhCertificate certificate;
};

/// Rank and eigenvalue thresholds.
inline constexpr double kRankTolerance = 1e-9;
inline constexpr double kEigenTolerance = 1e-9;

/// Stabilizability of (A_eff - rho/2 I, B).
PbhResult pbh_stabilizable(const Matrix& A_eff, const Matrix& B, double rho);

enum class ObservabilityMode { observable, detectable };

/// Observability or detectability of (A_eff - rho/2 I, C).
PbhResult pbh_observable(const Matrix& A_eff, const Matrix& C, double rho, ObservabilityMode mode);

struct HamiltonianPair {
  Matrix M1, M2;
};

HamiltonianPair hamiltonian_matrices(const ProblemData& p);

struct AxisResult {
  bool free = false;
  double min_abs_real = 0.0;
  double threshold = 0.0;
  std::vector<std::complex<double>> eigenvalues;
};

AxisResult imaginary_axis_free(const Matrix& M, double tol = 1e-8);

enum class CaseTag { observable, detectable, hamiltonian, unclassified };

std::string to_string(CaseTag tag);

/// Either a solution or the error the solver raised.
struct AreOutcome {
  std::optional<AlgebraicSolution> solution;
  std::optional<ErrorCode> error;
  std::string message;
};

struct StabilizationReport {
  CaseTag case_tag = CaseTag::unclassified;

  bool q_psd = false;
  bool q_bar_psd = false;
  PbhResult stab_P;   // (A - rho/2, B)
  PbhResult stab_Pi;  // (A + G - rho/2, B)
  bool a2_holds = false;
  std::optional<PbhResult> obs_P;   // (A - rho/2, sqrt(Q))
  std::optional<PbhResult> obs_Pi;  // (A + G - rho/2, sqrt(Q)(I - Gamma))
  AxisResult axis_M1, axis_M2;
  bool a3_variant_holds = false;

  AreOutcome are_P, are_Pi;
  bool abar_plus_G_hurwitz = false;
  std::optional<double> abar_plus_G_shift;  // spectral abscissa of A - S P + G - rho/2 I

  bool condition_ii = false;
  bool condition_iii = false;
  /// Absent when unclassified.
  std::optional<bool> verdict;
  /// Hypothesis family that licensed the verdict; empty when unclassified.
  std::string basis;
};

StabilizationReport stabilization_report(const ProblemData& p);

}  // namespace mflq
