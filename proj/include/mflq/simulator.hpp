#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mflq/control.hpp"

namespace mflq {

struct SimulationConfig {
  std::size_t N = 1;
  double T = 1.0;
  std::size_t M = 2;
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  /// Truncated infinite-horizon run: sets the tail flag.
  bool infinite_horizon = false;
  bool record_trajectories = false;
};

/// Recorded paths: states[rep][k] is n x N (k = 0..M), controls[rep][k] is
/// r x N (k = 0..M-1).
struct Ensemble {
  TimeGrid grid;
  std::vector<std::vector<Matrix>> states;
  std::vector<std::vector<Matrix>> controls;
};

struct SimulationResult {
  double j_soc_mean = 0.0;
  double j_soc_se = 0.0;
  double consistency_sup = 0.0;
  double consistency_int = 0.0;
  double epsilon_hat = 0.0;
  double epsilon_se = 0.0;
  bool tail_flag = false;

  std::vector<double> j_soc_per_rep;
  std::vector<double> epsilon_per_rep;
  std::vector<double> consistency_int_per_rep;

  TimeGrid grid;
  std::vector<Vector> mean_xN;             // replication mean of x^(N)(t_k)
  std::vector<Vector> first_xN;            // x^(N)(t_k) of replication 0
  std::vector<Vector> reference;           // the law's deterministic path
  std::vector<double> consistency_by_time; // replication mean of |x^(N) - xbar|^2

  std::optional<Ensemble> ensemble;
};

/// Parallel over replications (OpenMP). Bit-identical to simulate_serial.
SimulationResult simulate(const ProblemData& p, const ControlLaw& law, const SimulationConfig& cfg);
SimulationResult simulate_serial(const ProblemData& p, const ControlLaw& law, const SimulationConfig& cfg);

struct MeanAndError {
  double mean = 0.0;
  double se = 0.0;
};

/// Sum over agents of the discounted left-endpoint cost, averaged over replications.
MeanAndError social_cost_mc(const Ensemble& e, const ProblemData& p);

struct ConsistencyMetrics {
  double sup_metric = 0.0;
  double int_metric = 0.0;
};

ConsistencyMetrics consistency_error(const Ensemble& e, const std::vector<Vector>& xbar, double rho);

/// E int e^{-rho t} |B^T K (x^(N) - xbar)|^2_{R^-1} dt with K sampled per node.
double gap_epsilon(const Ensemble& e, const std::vector<Matrix>& K, const std::vector<Vector>& xbar,
                   const ProblemData& p);

/// Replication mean and standard error, pairwise-summed.
MeanAndError mean_and_se(const std::vector<double>& values);

}  // namespace mflq
