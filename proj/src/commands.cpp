#include "mflq/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "mflq/control.hpp"
#include "mflq/cost.hpp"
#include "mflq/csv.hpp"
#include "mflq/linalg.hpp"
#include "mflq/simulator.hpp"

namespace mflq {

using nlohmann::json;
namespace fs = std::filesystem;

Scenario resolve(Scenario s, const RunFlags& flags) {
  if (flags.seed) s.simulation.seed = *flags.seed;
  if (flags.agents) s.simulation.agents = *flags.agents;
  if (flags.steps) s.grid_steps = *flags.steps;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) s.outputs.directory = env;
  if (flags.out) s.outputs.directory = *flags.out;
  if (flags.format != "csv") throw Error(ErrorCode::InvalidArgument, "only --format csv is supported");
  if (s.simulation.agents < 1) throw Error(ErrorCode::InvalidArgument, "--agents must be at least 1");
  if (s.grid_steps < 2) throw Error(ErrorCode::InvalidArgument, "--steps must be at least 2");
  return s;
}

std::string error_record(std::string_view code, const std::string& message, const std::string& command) {
  json j;
  j["error"] = {{"code", std::string(code)}, {"message", message}, {"command", command}};
  return j.dump();
}

namespace {

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    a.push_back(row);
  }
  return a;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const PbhResult& r) {
  json eig = json::array();
  for (const auto& l : r.certificate.eigenvalues) eig.push_back({l.real(), l.imag()});
  return {{"holds", r.holds},
          {"eigenvalues", eig},
          {"min_singular_values", r.certificate.min_singular_values},
          {"ranks", r.certificate.ranks},
          {"n", r.certificate.n}};
}

json to_json(const AxisResult& r) {
  json eig = json::array();
  for (const auto& l : r.eigenvalues) eig.push_back({l.real(), l.imag()});
  return {{"free", r.free}, {"min_abs_real", r.min_abs_real}, {"threshold", r.threshold}, {"eigenvalues", eig}};
}

json to_json(const AreOutcome& o) {
  if (!o.solution) return {{"ok", false}, {"error", std::string(to_string(*o.error))}, {"message", o.message}};
  const auto& s = *o.solution;
  return {{"ok", true},
          {"X", to_json(s.X)},
          {"closed_loop", to_json(s.closed_loop)},
          {"residual", s.residual},
          {"is_rho_stabilizing", s.is_rho_stabilizing},
          {"spectral_abscissa", s.spectral_abscissa}};
}

std::string row_name(const char* base, Eigen::Index i, Eigen::Index j = -1) {
  std::string s = std::string(base) + "_" + std::to_string(i + 1);
  if (j >= 0) s += "_" + std::to_string(j + 1);
  return s;
}

void add_matrix_header(CsvTable& t, const char* base, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) t.header.push_back(row_name(base, i, j));
}

void add_vector_header(CsvTable& t, const char* base, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) t.header.push_back(row_name(base, i));
}

void push(std::vector<CsvCell>& row, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.emplace_back(m(i, j));
}

void push(std::vector<CsvCell>& row, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.emplace_back(v(i));
}

struct Context {
  const Scenario& sc;
  ProblemData p;
  fs::path dir;
  std::vector<std::string> written;

  void write(const CsvTable& t, const std::string& name) {
    const fs::path target = dir / name;
    emit_csv(t, target.string());
    written.push_back(target.string());
  }
};

fs::path prepare_dir(const std::string& d) {
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create output directory '" + d + "': " + ec.message());
  return fs::path(d);
}

CsvTable cost_table(const CostBreakdown& c) {
  CsvTable t;
  t.header = {"N", "initial_term", "q_term", "reference_term", "noise_adjustment", "epsilon_term", "total"};
  t.rows.push_back({static_cast<std::int64_t>(c.N), c.initial_term, c.q_term, c.reference_term, c.noise_adjustment,
                    c.epsilon_term, c.total});
  return t;
}

CsvTable meanfield_table(const MeanFieldPath& mf, Eigen::Index n) {
  CsvTable t;
  t.header = {"t"};
  add_vector_header(t, "s", n);
  add_vector_header(t, "xbar", n);
  for (std::size_t k = 0; k < mf.grid.size(); ++k) {
    std::vector<CsvCell> row{mf.grid.t(k)};
    push(row, mf.s[k]);
    push(row, mf.xbar[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Infinite-horizon pieces shared by solve, simulate, sweep and compare.
struct Stationary {
  AlgebraicSolution P, Pi;
  OffsetSolution s;
  MeanFieldPath mf;
};

Stationary stationary(const ProblemData& p, const Scenario& sc, bool allow_singular) {
  const double T = sc.horizon.T;
  const std::size_t M = sc.grid_steps;
  Stationary st;
  st.P = solve_are_P(p);
  st.Pi = allow_singular ? maximal_solution(p.A + p.G, p.S(), derived_weights(p).Q_bar, p.rho) : solve_are_Pi(p);
  st.s = solve_offset_infinite(p, st.Pi, make_grid(T, 2 * M));
  st.mf = solve_mean_field_path(p, st.Pi, st.s, T, M);
  return st;
}

json run_solve(Context& cx) {
  const ProblemData& p = cx.p;
  const Scenario& sc = cx.sc;
  const auto n = p.n;
  json summary;
  if (!sc.horizon.infinite) {
    const FiniteRiccatiPath path = solve_dre(p, sc.horizon.T, sc.grid_steps);
    path.require_complete();
    const MeanFieldPath mf = solve_mean_field_path(p, path);
    CsvTable t;
    t.header = {"t"};
    add_matrix_header(t, "P", n);
    add_matrix_header(t, "K", n);
    add_matrix_header(t, "Pi", n);
    add_vector_header(t, "s", n);
    for (std::size_t k = 0; k < path.grid.size(); ++k) {
      std::vector<CsvCell> row{path.grid.t(k)};
      push(row, path.P[k]);
      push(row, path.K[k]);
      push(row, path.Pi[k]);
      push(row, path.s[k]);
      t.rows.push_back(std::move(row));
    }
    cx.write(t, "riccati.csv");
    cx.write(meanfield_table(mf, n), "meanfield.csv");
    const CostBreakdown c = analytic_social_cost(p, path, sc.simulation.agents, 0.0);
    cx.write(cost_table(c), "cost.csv");
    summary = {{"horizon", "finite"},
               {"P0", to_json(path.P.front())},
               {"Pi0", to_json(path.Pi.front())},
               {"s0", to_json(path.s.front())},
               {"pi_identity_error", path.pi_identity_error()},
               {"cost_total_without_epsilon", c.total}};
    return summary;
  }
  const Stationary st = stationary(p, sc, true);
  CsvTable t;
  t.header = {"quantity", "row", "col", "value"};
  const auto emit = [&](const char* name, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        t.rows.push_back({std::string(name), static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(j + 1), m(i, j)});
  };
  emit("P", st.P.X);
  emit("Pi", st.Pi.X);
  emit("K", st.Pi.X - st.P.X);
  emit("s0", st.mf.s0);
  cx.write(t, "algebraic.csv");
  cx.write(meanfield_table(st.mf, n), "meanfield.csv");

  summary = {{"horizon", "infinite"},
             {"P", to_json(st.P.X)},
             {"Pi", to_json(st.Pi.X)},
             {"P_rho_stabilizing", st.P.is_rho_stabilizing},
             {"Pi_rho_stabilizing", st.Pi.is_rho_stabilizing},
             {"s0", to_json(st.mf.s0)},
             {"offset_singular", st.s.singular},
             {"offset_truncated", st.s.truncated_approximation},
             {"rho_integrable", st.mf.rho_integrable}};
  if (st.mf.xbar_limit) summary["xbar_limit"] = to_json(*st.mf.xbar_limit);
  if (st.mf.xbar_equilibrium) summary["xbar_equilibrium"] = to_json(*st.mf.xbar_equilibrium);
  if (st.P.is_rho_stabilizing && st.Pi.is_rho_stabilizing) {
    const CostBreakdown c = analytic_social_cost(p, st.P, st.Pi, st.s, sc.simulation.agents, 0.0);
    cx.write(cost_table(c), "cost.csv");
    const AsymptoticOptimum opt = asymptotic_average_optimum(p, st.P, st.Pi, st.s);
    summary["cost_total_without_epsilon"] = c.total;
    summary["asymptotic_average"] = opt.value;
    summary["asymptotic_average_published"] = opt.published_value;
    summary["negative_definite_solutions_exist"] = opt.hypothesis_verified;
  }
  return summary;
}

struct LawBundle {
  ControlLaw law;
  std::optional<FiniteRiccatiPath> path;
  std::optional<Stationary> st;
};

LawBundle build_law(const ProblemData& p, const Scenario& sc) {
  LawBundle b;
  if (!sc.horizon.infinite) {
    b.path = solve_dre(p, sc.horizon.T, sc.grid_steps);
    b.path->require_complete();
    const MeanFieldPath mf = solve_mean_field_path(p, *b.path);
    b.law = sc.simulation.law == "centralized" ? centralized_law_finite(p, *b.path, mf)
                                               : decentralized_law_finite(p, *b.path, mf);
    return b;
  }
  if (sc.simulation.law == "centralized") {
    throw Error(ErrorCode::InvalidArgument, "the centralized law is only available on a finite horizon");
  }
  b.st = stationary(p, sc, false);
  b.law = decentralized_law_infinite(p, b.st->P, b.st->Pi, b.st->mf);
  return b;
}

SimulationConfig sim_config(const Scenario& sc, std::size_t N, bool record) {
  SimulationConfig cfg;
  cfg.N = N;
  cfg.T = sc.horizon.T;
  cfg.M = sc.grid_steps;
  cfg.replications = sc.simulation.replications;
  cfg.seed = sc.simulation.seed;
  cfg.infinite_horizon = sc.horizon.infinite;
  cfg.record_trajectories = record;
  return cfg;
}

double analytic_total(const ProblemData& p, const LawBundle& b, std::size_t N, double eps) {
  if (b.path) return analytic_social_cost(p, *b.path, N, eps).total;
  return analytic_social_cost(p, b.st->P, b.st->Pi, b.st->s, N, eps).total;
}

json run_simulate(Context& cx) {
  const ProblemData& p = cx.p;
  const Scenario& sc = cx.sc;
  const LawBundle b = build_law(p, sc);
  const std::size_t N = sc.simulation.agents;
  const SimulationResult r = simulate(p, b.law, sim_config(sc, N, false));
  CsvTable ts;
  ts.header = {"t"};
  add_vector_header(ts, "xbar", p.n);
  add_vector_header(ts, "xN_mean", p.n);
  add_vector_header(ts, "xN_run0", p.n);
  ts.header.push_back("consistency");
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    std::vector<CsvCell> row{r.grid.t(k)};
    push(row, r.reference[k]);
    push(row, r.mean_xN[k]);
    push(row, r.first_xN[k]);
    row.emplace_back(r.consistency_by_time[k]);
    ts.rows.push_back(std::move(row));
  }
  cx.write(ts, "timeseries.csv");
  const double analytic = analytic_total(p, b, N, r.epsilon_hat);
  CsvTable sm;
  sm.header = {"N", "replications", "j_soc_mean", "j_soc_se", "analytic_total", "consistency_sup",
               "consistency_int", "epsilon_hat", "epsilon_se", "tail_flag"};
  sm.rows.push_back({static_cast<std::int64_t>(N), static_cast<std::int64_t>(sc.simulation.replications),
                     r.j_soc_mean, r.j_soc_se, analytic, r.consistency_sup, r.consistency_int, r.epsilon_hat,
                     r.epsilon_se, static_cast<std::int64_t>(r.tail_flag)});
  cx.write(sm, "summary.csv");
  return {{"law", to_string(b.law.kind)}, {"N", N},
          {"j_soc_mean", r.j_soc_mean},   {"j_soc_se", r.j_soc_se},
          {"analytic_total", analytic},   {"consistency_int", r.consistency_int},
          {"epsilon_hat", r.epsilon_hat}, {"tail_flag", r.tail_flag}};
}

json run_sweep(Context& cx) {
  const ProblemData& p = cx.p;
  const Scenario& sc = cx.sc;
  if (sc.sweep.empty()) throw Error(ErrorCode::MissingField, "field 'sweep': sweep needs a list of agent counts");
  const LawBundle b = build_law(p, sc);
  CsvTable t;
  t.header = {"N", "j_soc_mean", "j_soc_se", "consistency_int", "epsilon_hat"};
  json rows = json::array();
  for (std::size_t N : sc.sweep) {
    const SimulationResult r = simulate(p, b.law, sim_config(sc, N, false));
    t.rows.push_back({static_cast<std::int64_t>(N), r.j_soc_mean, r.j_soc_se, r.consistency_int, r.epsilon_hat});
    rows.push_back({{"N", N}, {"consistency_int", r.consistency_int}, {"epsilon_hat", r.epsilon_hat}});
  }
  cx.write(t, "sweep.csv");
  return {{"law", to_string(b.law.kind)}, {"rows", rows}};
}

json run_compare(Context& cx) {
  const ProblemData& p = cx.p;
  const Scenario& sc = cx.sc;
  const Stationary st = stationary(p, sc, false);
  const ControlLaw dec = decentralized_law_infinite(p, st.P, st.Pi, st.mf);
  const LegacyParts legacy = legacy_law(p, st.P, sc.horizon.T, sc.grid_steps);
  const RepresentationReport rep = representation_check(dec, legacy.law, p, sc.simulation.agents, sc.simulation.seed);
  const double kbar_err = (legacy.K_bar.X - (st.Pi.X - st.P.X)).norm();
  double path_err = 0.0, phi_err = 0.0;
  for (std::size_t k = 0; k < st.mf.grid.size(); ++k) {
    path_err = std::max(path_err, (legacy.x_dagger[k] - st.mf.xbar[k]).norm());
    phi_err = std::max(phi_err, (legacy.phi[k] - st.mf.s[k]).norm());
  }
  CsvTable t;
  t.header = {"max_state_deviation", "cost_decentralized", "cost_legacy", "relative_cost_difference",
              "kbar_identity_error", "xdagger_error", "phi_error", "passed"};
  t.rows.push_back({rep.max_state_deviation, rep.cost_a, rep.cost_b, rep.relative_cost_difference, kbar_err, path_err,
                    phi_err, static_cast<std::int64_t>(rep.passed)});
  cx.write(t, "compare.csv");
  return {{"max_state_deviation", rep.max_state_deviation},
          {"relative_cost_difference", rep.relative_cost_difference},
          {"kbar_identity_error", kbar_err},
          {"passed", rep.passed}};
}

}  // namespace

std::string report_to_json(const StabilizationReport& rep) {
  json j;
  j["case_tag"] = to_string(rep.case_tag);
  j["basis"] = rep.basis;
  j["q_psd"] = rep.q_psd;
  j["q_bar_psd"] = rep.q_bar_psd;
  j["a2_holds"] = rep.a2_holds;
  j["stabilizable_P"] = to_json(rep.stab_P);
  j["stabilizable_Pi"] = to_json(rep.stab_Pi);
  if (rep.obs_P) j["observability_P"] = to_json(*rep.obs_P);
  if (rep.obs_Pi) j["observability_Pi"] = to_json(*rep.obs_Pi);
  j["axis_M1"] = to_json(rep.axis_M1);
  j["axis_M2"] = to_json(rep.axis_M2);
  j["a3_variant_holds"] = rep.a3_variant_holds;
  j["are_P"] = to_json(rep.are_P);
  j["are_Pi"] = to_json(rep.are_Pi);
  j["abar_plus_G_hurwitz"] = rep.abar_plus_G_hurwitz;
  j["abar_plus_G_shift"] = rep.abar_plus_G_shift ? json(*rep.abar_plus_G_shift) : json(nullptr);
  j["condition_ii"] = rep.condition_ii;
  j["condition_iii"] = rep.condition_iii;
  j["verdict"] = rep.verdict ? json(*rep.verdict) : json(nullptr);
  return j.dump(2);
}

int run(const std::string& subcommand, const Scenario& scenario, const RunFlags& flags, std::ostream& out) {
  const Scenario sc = resolve(scenario, flags);
  Context cx{sc, build_problem(sc.problem), {}, {}};
  json summary;
  if (subcommand == "diagnose") {
    const StabilizationReport rep = stabilization_report(cx.p);
    const std::string doc = report_to_json(rep);
    cx.dir = prepare_dir(sc.outputs.directory);
    const fs::path target = cx.dir / "report.json";
    std::ofstream f(target, std::ios::binary | std::ios::trunc);
    if (!f || !(f << doc << '\n')) throw Error(ErrorCode::IoError, "cannot write '" + target.string() + "'");
    if (!flags.quiet) out << doc << '\n';
    return 0;
  }
  cx.dir = prepare_dir(sc.outputs.directory);
  if (subcommand == "solve") {
    summary = run_solve(cx);
  } else if (subcommand == "simulate") {
    summary = run_simulate(cx);
  } else if (subcommand == "sweep") {
    summary = run_sweep(cx);
  } else if (subcommand == "compare") {
    summary = run_compare(cx);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown subcommand '" + subcommand + "'");
  }
  summary["command"] = subcommand;
  summary["artifacts"] = cx.written;
  if (!flags.quiet) out << summary.dump(2) << '\n';
  return 0;
}

}  // namespace mflq
