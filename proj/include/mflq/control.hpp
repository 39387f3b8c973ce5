#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mflq/meanfield.hpp"

namespace mflq {

enum class LawKind { decentralized_finite, decentralized_infinite, centralized_finite, legacy_feedback };
enum class Aggregate { xbar, xN };

std::string to_string(LawKind kind);

/// Gains sampled on a grid: u = own_gain x_i + mean_gain z + offset, where z
/// is the precomputed reference path or the live population average.
struct ControlLaw {
  LawKind kind = LawKind::decentralized_finite;
  Aggregate aggregates_on = Aggregate::xbar;
  TimeGrid grid;
  std::vector<Matrix> own_gain;   // -R^-1 B^T P
  std::vector<Matrix> mean_gain;  // -R^-1 B^T K
  std::vector<Vector> offset;     // -R^-1 B^T s
  /// Deterministic mean-field path (x-bar, or x-dagger for the legacy law).
  /// The centralized law keeps it for diagnostics only.
  std::vector<Vector> reference;

  std::size_t input_dim() const { return static_cast<std::size_t>(own_gain.front().rows()); }

  /// Decentralized evaluation; only the agent's own state enters.
  Vector operator()(std::size_t k, const Vector& x_i) const;
  /// Centralized evaluation against the live average.
  Vector operator()(std::size_t k, const Vector& x_i, const Vector& x_N) const;
};

ControlLaw decentralized_law_finite(const ProblemData& p, const FiniteRiccatiPath& path, const MeanFieldPath& mf);
ControlLaw decentralized_law_infinite(const ProblemData& p, const AlgebraicSolution& P, const AlgebraicSolution& Pi,
                                      const MeanFieldPath& mf);
ControlLaw centralized_law_finite(const ProblemData& p, const FiniteRiccatiPath& path, const MeanFieldPath& mf);

/// Law built from K-bar = stabilizing solution of
/// rho K = K Abar + Abar^T K - K S K - Xi, Abar = A - S P, with x-dagger and
/// phi solving their own linear equations. Needs f = 0 and G = 0.
struct LegacyParts {
  ControlLaw law;
  AlgebraicSolution K_bar;
  std::vector<Vector> x_dagger;
  std::vector<Vector> phi;
};

LegacyParts legacy_law(const ProblemData& p, const AlgebraicSolution& P, double T, std::size_t M,
                       std::optional<Matrix> K_bar_override = std::nullopt);

struct RepresentationReport {
  double max_state_deviation = 0.0;
  double cost_a = 0.0;
  double cost_b = 0.0;
  double relative_cost_difference = 0.0;
  bool passed = false;
};

inline constexpr double kRepresentationStateTol = 1e-6;
inline constexpr double kRepresentationCostTol = 1e-6;

/// Co-simulates both laws on identical initial states and noise.
RepresentationReport representation_check(const ControlLaw& a, const ControlLaw& b, const ProblemData& p,
                                          std::size_t N, std::uint64_t seed);

}  // namespace mflq
