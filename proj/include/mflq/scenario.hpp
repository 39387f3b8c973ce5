#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mflq/model.hpp"

namespace mflq {

struct HorizonSpec {
  bool infinite = false;
  /// Horizon, or truncation horizon when infinite.
  double T = 0.0;
};

struct SimulationSpec {
  std::size_t agents = 30;
  std::size_t replications = 64;
  std::uint64_t seed = 0;
  /// "decentralized" or "centralized" (finite horizon only).
  std::string law = "decentralized";
};

struct OutputSpec {
  std::string directory = ".";
  std::string format = "csv";
};

struct Scenario {
  ProblemConfig problem;
  HorizonSpec horizon;
  std::size_t grid_steps = 4000;
  SimulationSpec simulation;
  std::vector<std::size_t> sweep;
  OutputSpec outputs;
};

/// Errors: ParseError (with line), UnknownField, MissingField.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Canonical JSON: every field explicit, matrices as nested arrays, signals
/// as {"constant": v} or {"table": {"knots": .., "values": ..}}.
std::string serialize_scenario(const Scenario& s);

}  // namespace mflq
