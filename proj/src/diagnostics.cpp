#include "mflq/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "mflq/linalg.hpp"

namespace mflq {

namespace {

using CMatrix = Eigen::MatrixXcd;

int numerical_rank(const CMatrix& m, double* min_sv) {
  const Eigen::JacobiSVD<CMatrix> svd(m);
  const Vector sv = svd.singularValues();
  *min_sv = sv.size() ? sv(sv.size() - 1) : 0.0;
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double thr = kRankTolerance * sv(0);
  return static_cast<int>((sv.array() > thr).count());
}

// Shared PBH loop; `stacked` builds the test matrix for eigenvalue lambda.
template <class Build>
PbhResult pbh(const Matrix& Ashift, bool all_modes, Build stacked) {
  PbhResult res;
  const auto n = Ashift.rows();
  res.certificate.n = static_cast<int>(n);
  res.holds = true;
  const auto eig = linalg::eigenvalues(Ashift);
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const std::complex<double> lambda = eig(i);
    if (!all_modes && lambda.real() < -kEigenTolerance) continue;
    double min_sv = 0.0;
    const int rank = numerical_rank(stacked(lambda), &min_sv);
    res.certificate.eigenvalues.push_back(lambda);
    res.certificate.min_singular_values.push_back(min_sv);
    res.certificate.ranks.push_back(rank);
    if (rank < n) res.holds = false;
  }
  return res;
}

}  // namespace

PbhResult pbh_stabilizable(const Matrix& A_eff, const Matrix& B, double rho) {
  const auto n = A_eff.rows();
  if (A_eff.cols() != n || B.rows() != n) throw Error(ErrorCode::DimensionMismatch, "PBH: B must have n rows");
  const Matrix As = A_eff - 0.5 * rho * Matrix::Identity(n, n);
  return pbh(As, false, [&](std::complex<double> lambda) {
    CMatrix m(n, n + B.cols());
    m.leftCols(n) = lambda * CMatrix::Identity(n, n) - As.cast<std::complex<double>>();
    m.rightCols(B.cols()) = B.cast<std::complex<double>>();
    return m;
  });
}

PbhResult pbh_observable(const Matrix& A_eff, const Matrix& C, double rho, ObservabilityMode mode) {
  const auto n = A_eff.rows();
  if (A_eff.cols() != n || C.cols() != n) throw Error(ErrorCode::DimensionMismatch, "PBH: C must have n columns");
  const Matrix As = A_eff - 0.5 * rho * Matrix::Identity(n, n);
  return pbh(As, mode == ObservabilityMode::observable, [&](std::complex<double> lambda) {
    CMatrix m(n + C.rows(), n);
    m.topRows(n) = lambda * CMatrix::Identity(n, n) - As.cast<std::complex<double>>();
    m.bottomRows(C.rows()) = C.cast<std::complex<double>>();
    return m;
  });
}

HamiltonianPair hamiltonian_matrices(const ProblemData& p) {
  const auto n = p.n;
  const Matrix I = Matrix::Identity(n, n);
  const Matrix S = p.S();
  const Matrix AG = p.A + p.G;
  const DerivedWeights w = derived_weights(p);
  HamiltonianPair h;
  h.M1.resize(2 * n, 2 * n);
  h.M1 << p.A - 0.5 * p.rho * I, S, p.Q, -p.A.transpose() + 0.5 * p.rho * I;
  h.M2.resize(2 * n, 2 * n);
  h.M2 << AG - 0.5 * p.rho * I, S, p.Q - w.Xi, -AG.transpose() + 0.5 * p.rho * I;
  return h;
}

AxisResult imaginary_axis_free(const Matrix& M, double tol) {
  if (M.rows() != M.cols() || M.rows() % 2 != 0) {
    throw Error(ErrorCode::DimensionMismatch, "Hamiltonian must be square with even dimension");
  }
  AxisResult r;
  const auto eig = linalg::eigenvalues(M);
  r.eigenvalues.assign(eig.data(), eig.data() + eig.size());
  r.min_abs_real = eig.real().cwiseAbs().minCoeff();
  r.threshold = tol * std::max(1.0, linalg::norm2(M));
  r.free = r.min_abs_real > r.threshold;
  return r;
}

std::string to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::observable: return "observable";
    case CaseTag::detectable: return "detectable";
    case CaseTag::hamiltonian: return "hamiltonian";
    case CaseTag::unclassified: return "unclassified";
  }
  return "unclassified";
}

namespace {

AreOutcome try_solve(const Matrix& A_eff, const Matrix& S, const Matrix& Q_eff, double rho) {
  AreOutcome out;
  try {
    out.solution = solve_are(A_eff, S, Q_eff, rho);
  } catch (const Error& e) {
    out.error = e.code();
    out.message = e.what();
  }
  return out;
}

bool psd(const Matrix& m) {
  return linalg::min_eigenvalue_sym(m) >= -1e-10 * std::max(1.0, m.norm());
}

bool definiteness_ok(const AreOutcome& o, CaseTag tag) {
  if (!o.solution) return false;
  const Matrix& X = o.solution->X;
  const double lo = linalg::min_eigenvalue_sym(X);
  const double scale = linalg::norm2(X);
  switch (tag) {
    case CaseTag::observable: return lo > 1e-9 * scale && scale > 0.0;
    case CaseTag::detectable: return lo >= -1e-9 * std::max(1.0, scale);
    case CaseTag::hamiltonian: return o.solution->is_rho_stabilizing;
    case CaseTag::unclassified: return false;
  }
  return false;
}

}  // namespace

StabilizationReport stabilization_report(const ProblemData& p) {
  StabilizationReport rep;
  const auto n = p.n;
  const Matrix I = Matrix::Identity(n, n);
  const Matrix S = p.S();
  const Matrix AG = p.A + p.G;
  const DerivedWeights w = derived_weights(p);

  rep.stab_P = pbh_stabilizable(p.A, p.B, p.rho);
  rep.stab_Pi = pbh_stabilizable(AG, p.B, p.rho);
  rep.a2_holds = rep.stab_P.holds && rep.stab_Pi.holds;

  rep.q_psd = psd(p.Q);
  rep.q_bar_psd = psd(w.Q_bar);
  const auto hams = hamiltonian_matrices(p);
  rep.axis_M1 = imaginary_axis_free(hams.M1);
  rep.axis_M2 = imaginary_axis_free(hams.M2);

  if (rep.q_psd) {
    const Matrix C1 = linalg::psd_sqrt(p.Q);
    const Matrix C2 = C1 * (I - p.Gamma);
    const auto o1 = pbh_observable(p.A, C1, p.rho, ObservabilityMode::observable);
    const auto o2 = pbh_observable(AG, C2, p.rho, ObservabilityMode::observable);
    if (o1.holds && o2.holds) {
      rep.case_tag = CaseTag::observable;
      rep.obs_P = o1;
      rep.obs_Pi = o2;
    } else {
      const auto d1 = pbh_observable(p.A, C1, p.rho, ObservabilityMode::detectable);
      const auto d2 = pbh_observable(AG, C2, p.rho, ObservabilityMode::detectable);
      rep.obs_P = d1;
      rep.obs_Pi = d2;
      if (d1.holds && d2.holds) rep.case_tag = CaseTag::detectable;
    }
  }
  if (rep.case_tag == CaseTag::unclassified && rep.axis_M1.free && rep.axis_M2.free) {
    rep.case_tag = CaseTag::hamiltonian;
  }
  rep.a3_variant_holds = rep.case_tag != CaseTag::unclassified;

  rep.are_P = try_solve(p.A, S, p.Q, p.rho);
  rep.are_Pi = try_solve(AG, S, w.Q_bar, p.rho);
  if (rep.are_P.solution) {
    const Matrix shifted = rep.are_P.solution->closed_loop + p.G - 0.5 * p.rho * I;
    rep.abar_plus_G_shift = linalg::spectral_abscissa(shifted);
    rep.abar_plus_G_hurwitz = *rep.abar_plus_G_shift < 0.0;
  }

  rep.condition_ii = definiteness_ok(rep.are_P, rep.case_tag) && definiteness_ok(rep.are_Pi, rep.case_tag) &&
                     rep.abar_plus_G_hurwitz;
  rep.condition_iii = rep.a2_holds && rep.abar_plus_G_hurwitz;

  switch (rep.case_tag) {
    case CaseTag::observable: rep.basis = "A3 observability"; break;
    case CaseTag::detectable: rep.basis = "A3' detectability"; break;
    case CaseTag::hamiltonian: rep.basis = "A3'' imaginary-axis-free Hamiltonians"; break;
    case CaseTag::unclassified: rep.basis = ""; break;
  }
  if (rep.case_tag != CaseTag::unclassified) rep.verdict = rep.condition_iii;
  return rep;
}

}  // namespace mflq
