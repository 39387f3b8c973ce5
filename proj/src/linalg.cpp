#include "mflq/linalg.hpp"

#include <cmath>

namespace mflq::linalg {

ComplexVector eigenvalues(const Matrix& m) {
  if (m.size() == 0) return {};
  return Eigen::EigenSolver<Matrix>(m, false).eigenvalues();
}

double spectral_abscissa(const Matrix& m) { return eigenvalues(m).real().maxCoeff(); }

double min_eigenvalue_sym(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(m), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

double norm2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

Matrix psd_sqrt(const Matrix& m, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  if (es.eigenvalues().minCoeff() < -tol) {
    throw Error(ErrorCode::NotPSD, "matrix has a negative eigenvalue; no real square root");
  }
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return symmetrize(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

double pairwise_sum(const double* v, std::size_t count) {
  if (count <= 8) {
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) acc += v[i];
    return acc;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, count - half);
}

double simpson(const std::vector<double>& y, double h) {
  const std::size_t intervals = y.empty() ? 0 : y.size() - 1;
  if (intervals == 0) return 0.0;
  if (intervals == 1) return 0.5 * h * (y[0] + y[1]);
  std::size_t even = intervals % 2 == 0 ? intervals : intervals - 3;
  double acc = 0.0;
  if (even > 0) {
    double s = y[0] + y[even];
    for (std::size_t i = 1; i < even; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
    acc = s * h / 3.0;
  }
  if (even != intervals) {
    const std::size_t j = even;
    acc += 3.0 * h / 8.0 * (y[j] + 3.0 * y[j + 1] + 3.0 * y[j + 2] + y[j + 3]);
  }
  return acc;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace mflq::linalg
