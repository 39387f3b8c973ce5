#include "mflq/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mflq/linalg.hpp"

namespace mflq {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NonPositiveRho: return "NonPositiveRho";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::InvalidSignal: return "InvalidSignal";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::ImaginaryAxisEigenvalue: return "ImaginaryAxisEigenvalue";
    case ErrorCode::SubspaceNotGraph: return "SubspaceNotGraph";
    case ErrorCode::AsymmetricResult: return "AsymmetricResult";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NotStabilizing: return "NotStabilizing";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::RegimeViolation: return "RegimeViolation";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Signal Signal::constant(Vector value) {
  Signal s;
  s.values_.push_back(std::move(value));
  return s;
}

Signal Signal::table(std::vector<double> knots, std::vector<Vector> values) {
  if (knots.empty() || knots.size() != values.size()) {
    throw Error(ErrorCode::InvalidSignal, "signal table needs matching, non-empty knots and values");
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i]) || knots[i] < 0.0) {
      throw Error(ErrorCode::InvalidSignal, "signal knots must be finite and non-negative");
    }
    if (i > 0 && !(knots[i] > knots[i - 1])) {
      throw Error(ErrorCode::InvalidSignal, "signal knots must be strictly increasing");
    }
    if (values[i].size() != values[0].size()) {
      throw Error(ErrorCode::InvalidSignal, "signal values must share one dimension");
    }
  }
  Signal s;
  s.knots_ = std::move(knots);
  s.values_ = std::move(values);
  return s;
}

Vector Signal::operator()(double t) const {
  if (t < 0.0) {
    throw Error(ErrorCode::NegativeTime, "signal evaluated at negative time");
  }
  if (values_.empty()) {
    throw Error(ErrorCode::InvalidSignal, "signal has no values");
  }
  if (knots_.empty() || t <= knots_.front()) return values_.front();
  if (t >= knots_.back()) return values_.back();
  const auto hi = static_cast<std::size_t>(
      std::upper_bound(knots_.begin(), knots_.end(), t) - knots_.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - knots_[lo]) / (knots_[hi] - knots_[lo]);
  return (1.0 - w) * values_[lo] + w * values_[hi];
}

Signal Signal::mapped(const Matrix& map) const {
  Signal s;
  s.knots_ = knots_;
  s.values_.reserve(values_.size());
  for (const auto& v : values_) s.values_.push_back(map * v);
  return s;
}

Matrix ProblemData::R_inv() const { return R.llt().solve(Matrix::Identity(r, r)); }

Matrix ProblemData::S() const { return linalg::symmetrize(B * R_inv() * B.transpose()); }

bool ProblemData::signals_constant() const {
  return f.is_constant() && sigma.is_constant() && eta.is_constant();
}

namespace {

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

Matrix checked_symmetric(const Matrix& m, const char* name) {
  const double asym = (m - m.transpose()).norm();
  if (asym > kSymmetryTolerance * m.norm()) {
    throw Error(ErrorCode::NotSymmetric, std::string(name) + " is not symmetric");
  }
  return linalg::symmetrize(m);
}

void require_signal(const Signal& s, Eigen::Index n, const char* name) {
  if (s.values().empty() || s.dimension() != n) {
    throw Error(ErrorCode::DimensionMismatch, std::string("signal ") + name + " must have dimension n");
  }
}

}  // namespace

ProblemData build_problem(const ProblemConfig& c) {
  ProblemData p;
  p.n = c.A.rows();
  p.r = c.B.cols();
  if (p.n == 0 || p.r == 0) throw Error(ErrorCode::DimensionMismatch, "empty A or B");
  require_shape(c.A, p.n, p.n, "A");
  require_shape(c.B, p.n, p.r, "B");
  require_shape(c.G, p.n, p.n, "G");
  require_shape(c.Q, p.n, p.n, "Q");
  require_shape(c.R, p.r, p.r, "R");
  require_shape(c.Gamma, p.n, p.n, "Gamma");
  require_shape(c.init_cov, p.n, p.n, "init_cov");
  if (c.init_mean.size() != p.n) throw Error(ErrorCode::DimensionMismatch, "init_mean must have dimension n");
  require_signal(c.f, p.n, "f");
  require_signal(c.sigma, p.n, "sigma");
  require_signal(c.eta, p.n, "eta");

  if (!(c.rho > 0.0) || !std::isfinite(c.rho)) throw Error(ErrorCode::NonPositiveRho, "rho must be positive");

  p.A = c.A;
  p.B = c.B;
  p.G = c.G;
  p.Gamma = c.Gamma;
  p.Q = checked_symmetric(c.Q, "Q");
  p.R = checked_symmetric(c.R, "R");
  if (!(linalg::min_eigenvalue_sym(p.R) > 0.0)) {
    throw Error(ErrorCode::NotPositiveDefinite, "R must be positive definite");
  }
  p.init_cov = checked_symmetric(c.init_cov, "init_cov");
  if (linalg::min_eigenvalue_sym(p.init_cov) < -1e-12 * std::max(1.0, p.init_cov.norm())) {
    throw Error(ErrorCode::NotPSD, "init_cov must be positive semidefinite");
  }
  p.rho = c.rho;
  p.f = c.f;
  p.sigma = c.sigma;
  p.eta = c.eta;
  p.init_mean = c.init_mean;
  return p;
}

DerivedWeights derived_weights(const ProblemData& p) {
  const Matrix I = Matrix::Identity(p.n, p.n);
  const Matrix GtQ = p.Gamma.transpose() * p.Q;
  DerivedWeights w;
  w.Xi = linalg::symmetrize(GtQ + p.Q * p.Gamma - GtQ * p.Gamma);
  const Matrix one_minus = I - p.Gamma;
  w.Q_bar = linalg::symmetrize(one_minus.transpose() * p.Q * one_minus);
  w.eta_bar = p.eta.mapped(one_minus.transpose() * p.Q);
  return w;
}

}  // namespace mflq
