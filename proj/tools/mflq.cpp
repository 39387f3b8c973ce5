#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mflq/commands.hpp"

namespace {

void add_flags(CLI::App* sub, std::string& config, mflq::RunFlags& flags) {
  sub->add_option("--config", config, "Scenario JSON file")->required();
  sub->add_option("--seed", flags.seed, "Master seed (overrides the scenario)");
  sub->add_option("--agents", flags.agents, "Agent count N");
  sub->add_option("--steps", flags.steps, "Grid steps M");
  sub->add_option("--out", flags.out, "Output directory");
  sub->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"csv"}));
  sub->add_flag("--quiet", flags.quiet, "Suppress the JSON summary on stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field LQ social control toolkit"};
  app.require_subcommand(1);
  std::string config;
  mflq::RunFlags flags;
  const char* names[][2] = {{"solve", "Riccati, offset and mean-field paths with the analytic cost"},
                            {"diagnose", "Stabilization report"},
                            {"simulate", "Monte Carlo run of the N-agent system"},
                            {"sweep", "Monte Carlo runs over the scenario's agent counts"},
                            {"compare", "Co-simulate the decentralized law and its legacy representation"}};
  for (const auto& nd : names) add_flags(app.add_subcommand(nd[0], nd[1]), config, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << mflq::error_record("InvalidArgument", e.what(), "") << '\n';
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const mflq::Scenario scenario = mflq::load_scenario(config);
    return mflq::run(command, scenario, flags, std::cout);
  } catch (const mflq::Error& e) {
    std::cerr << mflq::error_record(mflq::to_string(e.code()), e.what(), command) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << mflq::error_record("Internal", e.what(), command) << '\n';
    return 1;
  }
}
