#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "mflq/diagnostics.hpp"
#include "mflq/scenario.hpp"

namespace mflq {

struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> agents;
  std::optional<std::size_t> steps;
  std::optional<std::string> out;
  std::string format = "csv";
  bool quiet = false;
};

/// Environment variable that overrides the scenario's output directory
/// (the --out flag still wins).
inline constexpr const char* kOutDirEnv = "MFLQ_OUT_DIR";

/// Applies flag and environment overrides to the scenario.
Scenario resolve(Scenario s, const RunFlags& flags);

/// Runs one subcommand; writes artifacts into the resolved output directory
/// and a JSON summary to `out` unless quiet. Module failures throw Error.
int run(const std::string& subcommand, const Scenario& scenario, const RunFlags& flags, std::ostream& out);

std::string report_to_json(const StabilizationReport& rep);

/// {"error": {"code": ..., "message": ...}} on one line.
std::string error_record(std::string_view code, const std::string& message, const std::string& command);

}  // namespace mflq
