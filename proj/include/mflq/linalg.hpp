#pragma once

#include <complex>
#include <vector>

#include "mflq/model.hpp"

namespace mflq::linalg {

using ComplexVector = Eigen::VectorXcd;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

ComplexVector eigenvalues(const Matrix& m);
/// Largest real part of the spectrum.
double spectral_abscissa(const Matrix& m);
double min_eigenvalue_sym(const Matrix& m);
/// Largest singular value.
double norm2(const Matrix& m);
/// Symmetric square root of a PSD matrix; NotPSD if an eigenvalue < -tol.
Matrix psd_sqrt(const Matrix& m, double tol = 1e-10);
/// Pairwise summation; the result depends only on the order of `values`.
double pairwise_sum(const double* values, std::size_t count);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

/// Composite Simpson on a uniform grid; an odd interval count closes with the
/// 3/8 rule on the last three intervals. Falls back to trapezoid for < 2 intervals.
double simpson(const std::vector<double>& samples, double h);

bool all_finite(const Matrix& m);

}  // namespace mflq::linalg
