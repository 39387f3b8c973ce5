#include "mflq/control.hpp"

#include <algorithm>
#include <cmath>

#include "mflq/linalg.hpp"
#include "mflq/simulator.hpp"

namespace mflq {

std::string to_string(LawKind kind) {
  switch (kind) {
    case LawKind::decentralized_finite: return "decentralized_finite";
    case LawKind::decentralized_infinite: return "decentralized_infinite";
    case LawKind::centralized_finite: return "centralized_finite";
    case LawKind::legacy_feedback: return "legacy_feedback";
  }
  return "unknown";
}

Vector ControlLaw::operator()(std::size_t k, const Vector& x_i) const {
  return own_gain.at(k) * x_i + mean_gain[k] * reference.at(k) + offset[k];
}

Vector ControlLaw::operator()(std::size_t k, const Vector& x_i, const Vector& x_N) const {
  return own_gain.at(k) * x_i + mean_gain[k] * x_N + offset[k];
}

namespace {

// Fills gains from per-node P, K and s.
template <class PAt, class KAt, class SAt>
void fill_gains(ControlLaw& law, const ProblemData& p, PAt P_at, KAt K_at, SAt s_at) {
  const Matrix L = -p.R_inv() * p.B.transpose();
  const std::size_t size = law.grid.size();
  law.own_gain.resize(size);
  law.mean_gain.resize(size);
  law.offset.resize(size);
  for (std::size_t k = 0; k < size; ++k) {
    law.own_gain[k] = L * P_at(k);
    law.mean_gain[k] = L * K_at(k);
    law.offset[k] = L * s_at(k);
  }
}

}  // namespace

ControlLaw decentralized_law_finite(const ProblemData& p, const FiniteRiccatiPath& path, const MeanFieldPath& mf) {
  path.require_complete();
  if (!(path.grid == mf.grid)) throw Error(ErrorCode::GridMismatch, "Riccati path and mean-field path grids differ");
  ControlLaw law;
  law.kind = LawKind::decentralized_finite;
  law.aggregates_on = Aggregate::xbar;
  law.grid = path.grid;
  fill_gains(
      law, p, [&](std::size_t k) -> const Matrix& { return path.P[k]; },
      [&](std::size_t k) -> const Matrix& { return path.K[k]; }, [&](std::size_t k) -> const Vector& { return path.s[k]; });
  law.reference = mf.xbar;
  return law;
}

ControlLaw centralized_law_finite(const ProblemData& p, const FiniteRiccatiPath& path, const MeanFieldPath& mf) {
  ControlLaw law = decentralized_law_finite(p, path, mf);
  law.kind = LawKind::centralized_finite;
  law.aggregates_on = Aggregate::xN;
  return law;
}

ControlLaw decentralized_law_infinite(const ProblemData& p, const AlgebraicSolution& P, const AlgebraicSolution& Pi,
                                      const MeanFieldPath& mf) {
  if (!P.is_rho_stabilizing || !Pi.is_rho_stabilizing) {
    throw Error(ErrorCode::NotStabilizing, "decentralized law needs rho-stabilizing P and Pi");
  }
  ControlLaw law;
  law.kind = LawKind::decentralized_infinite;
  law.aggregates_on = Aggregate::xbar;
  law.grid = mf.grid;
  const Matrix K = Pi.X - P.X;
  fill_gains(
      law, p, [&](std::size_t) -> const Matrix& { return P.X; }, [&](std::size_t) -> const Matrix& { return K; },
      [&](std::size_t k) -> const Vector& { return mf.s[k]; });
  law.reference = mf.xbar;
  return law;
}

LegacyParts legacy_law(const ProblemData& p, const AlgebraicSolution& P, double T, std::size_t M,
                       std::optional<Matrix> K_bar_override) {
  const auto zero = [](const Signal& s) {
    for (const auto& v : s.values()) {
      if (v.norm() != 0.0) return false;
    }
    return true;
  };
  if (!zero(p.f) || p.G.norm() != 0.0) {
    throw Error(ErrorCode::RegimeViolation, "legacy law is defined only for f = 0 and G = 0");
  }
  const Matrix S = p.S();
  const Matrix A_bar = P.closed_loop;
  const DerivedWeights w = derived_weights(p);

  LegacyParts parts;
  parts.K_bar = solve_are(A_bar, S, -w.Xi, p.rho);
  if (K_bar_override) parts.K_bar = evaluate_solution(*K_bar_override, A_bar, S, -w.Xi, p.rho);
  const Matrix& K_bar = parts.K_bar.X;
  const TimeGrid grid = make_grid(T, M);

  // phi' = (rho I - (Abar - S Kbar)^T) phi + eta_bar
  OffsetProblem op;
  op.closed_loop = A_bar - S * K_bar;
  op.rho = p.rho;
  const Signal eta_bar = w.eta_bar;
  op.forcing = [eta_bar](double t) -> Vector { return -eta_bar(t); };
  op.knots = p.eta.knots();
  op.constant = p.eta.is_constant();
  const TimeGrid fine = make_grid(T, 2 * M);
  const OffsetSolution phi = solve_offset_linear(op, fine);

  // x-dagger' = (Abar - S Kbar) x-dagger - S phi
  parts.x_dagger = integrate_affine_forward(
      A_bar - S * K_bar, [&](std::size_t j) -> Vector { return -S * phi.at_node(j); }, p.init_mean, grid);
  parts.phi.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) parts.phi[k] = phi.at_node(2 * k);

  ControlLaw& law = parts.law;
  law.kind = LawKind::legacy_feedback;
  law.aggregates_on = Aggregate::xbar;
  law.grid = grid;
  fill_gains(
      law, p, [&](std::size_t) -> const Matrix& { return P.X; }, [&](std::size_t) -> const Matrix& { return K_bar; },
      [&](std::size_t k) -> const Vector& { return parts.phi[k]; });
  law.reference = parts.x_dagger;
  return parts;
}

RepresentationReport representation_check(const ControlLaw& a, const ControlLaw& b, const ProblemData& p,
                                          std::size_t N, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.N = N;
  cfg.T = a.grid.T;
  cfg.M = a.grid.M;
  cfg.replications = 1;
  cfg.seed = seed;
  cfg.record_trajectories = true;
  const SimulationResult ra = simulate_serial(p, a, cfg);
  const SimulationResult rb = simulate_serial(p, b, cfg);

  RepresentationReport rep;
  const auto& sa = ra.ensemble->states.front();
  const auto& sb = rb.ensemble->states.front();
  for (std::size_t k = 0; k < sa.size(); ++k) {
    rep.max_state_deviation = std::max(rep.max_state_deviation, (sa[k] - sb[k]).cwiseAbs().maxCoeff());
  }
  rep.cost_a = ra.j_soc_mean;
  rep.cost_b = rb.j_soc_mean;
  rep.relative_cost_difference = std::abs(rep.cost_a - rep.cost_b) / std::max(1e-300, std::abs(rep.cost_a));
  rep.passed = rep.max_state_deviation < kRepresentationStateTol &&
               rep.relative_cost_difference < kRepresentationCostTol;
  return rep;
}

}  // namespace mflq
