#include "mflq/simulator.hpp"

#include <cmath>
#include <exception>
#include <sstream>

#include "mflq/linalg.hpp"
#include "mflq/philox.hpp"

namespace mflq {

namespace {

// Signals sampled once per node; shared read-only by all replications.
struct NodeSignals {
  std::vector<Vector> f, sigma, eta;
  std::vector<double> discount;
};

NodeSignals sample_signals(const ProblemData& p, const TimeGrid& g) {
  NodeSignals s;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double t = g.t(k);
    s.f.push_back(p.f(t));
    s.sigma.push_back(p.sigma(t));
    s.eta.push_back(p.eta(t));
    s.discount.push_back(std::exp(-p.rho * t));
  }
  return s;
}

// Sum over agents of |x_i - Gamma xN - eta|_Q^2 + |u_i|_R^2.
double running_cost(const ProblemData& p, const Matrix& X, const Matrix& U, const Vector& xN, const Vector& eta,
                    Matrix& dev, Matrix& work_n, Matrix& work_r) {
  dev = X;
  dev.colwise() -= p.Gamma * xN + eta;
  work_n.noalias() = p.Q * dev;
  work_r.noalias() = p.R * U;
  return dev.cwiseProduct(work_n).sum() + U.cwiseProduct(work_r).sum();
}

struct ReplicationOutput {
  double j_soc = 0.0;
  double epsilon = 0.0;
  double consistency_int = 0.0;
  double terminal_second_moment = 0.0;
  std::vector<double> consistency;  // per node
  Matrix xN;                        // n x (M+1)
  std::vector<Matrix> states, controls;
  std::exception_ptr error;
};

void check_config(const ProblemData& p, const ControlLaw& law, const SimulationConfig& cfg) {
  if (cfg.N < 1 || cfg.M < 2 || cfg.replications < 1) {
    throw Error(ErrorCode::InvalidArgument, "simulation needs N >= 1, M >= 2, replications >= 1");
  }
  if (!(law.grid == make_grid(cfg.T, cfg.M)) || law.own_gain.size() != cfg.M + 1 ||
      law.reference.size() != cfg.M + 1) {
    throw Error(ErrorCode::GridMismatch, "control law grid does not match the simulation grid");
  }
  if (law.own_gain.front().cols() != p.n) throw Error(ErrorCode::DimensionMismatch, "law gain has wrong width");
}

void run_replication(const ProblemData& p, const ControlLaw& law, const SimulationConfig& cfg,
                     const NodeSignals& sig, const Matrix& init_root, std::size_t rep, ReplicationOutput& out) {
  const auto n = p.n;
  const auto r = p.r;
  const auto N = static_cast<Eigen::Index>(cfg.N);
  const TimeGrid g = law.grid;
  const double h = g.h();
  const double sqrt_h = std::sqrt(h);
  const auto rep32 = static_cast<std::uint32_t>(rep);

  Matrix X(n, N), U(r, N), drift(n, N), dev(n, N), work_n(n, N), work_r(r, N);
  Vector xN(n), z(n), c(r), d(n), gd(r), shift(n);
  std::vector<double> spare(cfg.N);

  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      z(j) = normal_draw(cfg.seed, static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(i), rep32,
                         StreamPurpose::initial_state);
    }
    X.col(i) = p.init_mean + init_root * z;
  }

  out.consistency.assign(g.size(), 0.0);
  out.xN.resize(n, static_cast<Eigen::Index>(g.size()));
  if (cfg.record_trajectories) {
    out.states.reserve(g.size());
    out.controls.reserve(g.M);
  }
  const bool centralized = law.aggregates_on == Aggregate::xN;
  double j_soc = 0.0, eps = 0.0, cons_int = 0.0;

  for (std::size_t k = 0;; ++k) {
    xN = X.rowwise().sum() / static_cast<double>(cfg.N);
    d = xN - law.reference[k];
    const double dd = d.squaredNorm();
    out.consistency[k] = dd;
    out.xN.col(static_cast<Eigen::Index>(k)) = xN;
    if (cfg.record_trajectories) out.states.push_back(X);
    if (k == g.M) break;

    const double disc = sig.discount[k];
    c.noalias() = law.mean_gain[k] * (centralized ? xN : law.reference[k]);
    c += law.offset[k];
    U.noalias() = law.own_gain[k] * X;
    U.colwise() += c;
    if (cfg.record_trajectories) out.controls.push_back(U);

    j_soc += disc * h * running_cost(p, X, U, xN, sig.eta[k], dev, work_n, work_r);
    gd.noalias() = law.mean_gain[k] * d;
    eps += disc * h * gd.dot(p.R * gd);
    cons_int += disc * h * dd;

    drift.noalias() = p.A * X;
    drift.noalias() += p.B * U;
    shift.noalias() = p.G * xN;
    shift += sig.f[k];
    drift.colwise() += shift;
    X += h * drift;
    const Vector& sigma = sig.sigma[k];
    for (std::size_t i = 0; i < cfg.N; ++i) {
      double w;
      if (k % 2 == 0) {
        const auto pair = normal_pair(cfg.seed, static_cast<std::uint32_t>(k / 2), static_cast<std::uint32_t>(i),
                                      rep32, StreamPurpose::brownian);
        w = pair.first;
        spare[i] = pair.second;
      } else {
        w = spare[i];
      }
      X.col(static_cast<Eigen::Index>(i)) += (sqrt_h * w) * sigma;
    }
    if (!X.allFinite()) {
      std::ostringstream os;
      os << "non-finite state at grid index " << k + 1 << " (t = " << g.t(k + 1) << ", replication " << rep << ")";
      throw Error(ErrorCode::NonFiniteState, os.str());
    }
  }
  out.j_soc = j_soc;
  out.epsilon = eps;
  out.consistency_int = cons_int;
  out.terminal_second_moment = X.squaredNorm();
}

SimulationResult simulate_impl(const ProblemData& p, const ControlLaw& law, const SimulationConfig& cfg,
                               bool parallel) {
  check_config(p, law, cfg);
  const TimeGrid g = law.grid;
  const NodeSignals sig = sample_signals(p, g);
  const Matrix init_root = linalg::psd_sqrt(p.init_cov, 1e-12 * std::max(1.0, p.init_cov.norm()));
  std::vector<ReplicationOutput> outs(cfg.replications);
  const auto reps = static_cast<long long>(cfg.replications);

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long long rep = 0; rep < reps; ++rep) {
    auto& o = outs[static_cast<std::size_t>(rep)];
    try {
      run_replication(p, law, cfg, sig, init_root, static_cast<std::size_t>(rep), o);
    } catch (...) {
      o.error = std::current_exception();
    }
  }
  for (const auto& o : outs) {
    if (o.error) std::rethrow_exception(o.error);
  }

  SimulationResult res;
  res.grid = g;
  res.reference = law.reference;
  for (const auto& o : outs) {
    res.j_soc_per_rep.push_back(o.j_soc);
    res.epsilon_per_rep.push_back(o.epsilon);
    res.consistency_int_per_rep.push_back(o.consistency_int);
  }
  const auto js = mean_and_se(res.j_soc_per_rep);
  res.j_soc_mean = js.mean;
  res.j_soc_se = js.se;
  const auto es = mean_and_se(res.epsilon_per_rep);
  res.epsilon_hat = es.mean;
  res.epsilon_se = es.se;
  res.consistency_int = mean_and_se(res.consistency_int_per_rep).mean;

  const double R = static_cast<double>(cfg.replications);
  std::vector<double> buf(cfg.replications);
  res.consistency_by_time.resize(g.size());
  res.mean_xN.assign(g.size(), Vector::Zero(p.n));
  res.first_xN.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (std::size_t q = 0; q < outs.size(); ++q) buf[q] = outs[q].consistency[k];
    res.consistency_by_time[k] = linalg::pairwise_sum(buf) / R;
    res.consistency_sup = std::max(res.consistency_sup, res.consistency_by_time[k]);
    for (Eigen::Index j = 0; j < p.n; ++j) {
      for (std::size_t q = 0; q < outs.size(); ++q) buf[q] = outs[q].xN(j, static_cast<Eigen::Index>(k));
      res.mean_xN[k](j) = linalg::pairwise_sum(buf) / R;
    }
    res.first_xN[k] = outs.front().xN.col(static_cast<Eigen::Index>(k));
  }
  if (cfg.infinite_horizon) {
    for (std::size_t q = 0; q < outs.size(); ++q) buf[q] = outs[q].terminal_second_moment;
    const double m2 = linalg::pairwise_sum(buf) / R;
    res.tail_flag = std::exp(-p.rho * g.T) * m2 > 1e-6 * std::abs(res.j_soc_mean);
  }
  if (cfg.record_trajectories) {
    Ensemble e;
    e.grid = g;
    for (auto& o : outs) {
      e.states.push_back(std::move(o.states));
      e.controls.push_back(std::move(o.controls));
    }
    res.ensemble = std::move(e);
  }
  return res;
}

}  // namespace

SimulationResult simulate(const ProblemData& p, const ControlLaw& law, const SimulationConfig& cfg) {
  return simulate_impl(p, law, cfg, true);
}

SimulationResult simulate_serial(const ProblemData& p, const ControlLaw& law, const SimulationConfig& cfg) {
  return simulate_impl(p, law, cfg, false);
}

MeanAndError mean_and_se(const std::vector<double>& values) {
  MeanAndError m;
  if (values.empty()) return m;
  const double count = static_cast<double>(values.size());
  m.mean = linalg::pairwise_sum(values) / count;
  if (values.size() > 1) {
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m.mean) * (values[i] - m.mean);
    m.se = std::sqrt(linalg::pairwise_sum(sq) / (count - 1.0) / count);
  }
  return m;
}

MeanAndError social_cost_mc(const Ensemble& e, const ProblemData& p) {
  const TimeGrid& g = e.grid;
  std::vector<double> per_rep;
  for (std::size_t q = 0; q < e.states.size(); ++q) {
    double j = 0.0;
    for (std::size_t k = 0; k < g.M; ++k) {
      const Matrix& X = e.states[q][k];
      const Matrix& U = e.controls[q][k];
      const Vector xN = X.rowwise().mean();
      Matrix dev, wn, wr;
      j += std::exp(-p.rho * g.t(k)) * g.h() * running_cost(p, X, U, xN, p.eta(g.t(k)), dev, wn, wr);
    }
    per_rep.push_back(j);
  }
  return mean_and_se(per_rep);
}

ConsistencyMetrics consistency_error(const Ensemble& e, const std::vector<Vector>& xbar, double rho) {
  const TimeGrid& g = e.grid;
  if (xbar.size() != g.size()) throw Error(ErrorCode::GridMismatch, "mean-field path and ensemble grids differ");
  ConsistencyMetrics m;
  const double R = static_cast<double>(e.states.size());
  std::vector<double> buf(e.states.size());
  std::vector<double> ints(e.states.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (std::size_t q = 0; q < e.states.size(); ++q) {
      const double dd = (Vector(e.states[q][k].rowwise().mean()) - xbar[k]).squaredNorm();
      buf[q] = dd;
      if (k < g.M) ints[q] += std::exp(-rho * g.t(k)) * g.h() * dd;
    }
    m.sup_metric = std::max(m.sup_metric, linalg::pairwise_sum(buf) / R);
  }
  m.int_metric = linalg::pairwise_sum(ints) / R;
  return m;
}

double gap_epsilon(const Ensemble& e, const std::vector<Matrix>& K, const std::vector<Vector>& xbar,
                   const ProblemData& p) {
  const TimeGrid& g = e.grid;
  if (xbar.size() != g.size() || K.size() != g.size()) {
    throw Error(ErrorCode::GridMismatch, "gain or mean-field path grid differs from the ensemble");
  }
  const Matrix R_inv = p.R_inv();
  std::vector<double> per_rep;
  for (std::size_t q = 0; q < e.states.size(); ++q) {
    double eps = 0.0;
    for (std::size_t k = 0; k < g.M; ++k) {
      const Vector v = p.B.transpose() * K[k] * (Vector(e.states[q][k].rowwise().mean()) - xbar[k]);
      eps += std::exp(-p.rho * g.t(k)) * g.h() * v.dot(R_inv * v);
    }
    per_rep.push_back(eps);
  }
  return mean_and_se(per_rep).mean;
}

}  // namespace mflq
