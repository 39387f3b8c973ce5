// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: mflq_acceptance [id ...]   (no ids runs all twelve)

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "json.hpp"
#include "mflq/commands.hpp"
#include "mflq/cost.hpp"
#include "mflq/diagnostics.hpp"
#include "mflq/scenario.hpp"
#include "mflq/simulator.hpp"
#include "oracles.hpp"

using namespace mflq;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kShiftTarget = -0.5873;
constexpr double kShiftTol = 5e-4;
constexpr double kHamiltonianTol = 1e-12;
constexpr double kScalarAreRelTol = 1e-10;
constexpr double kExponentialTol = 1e-8;
constexpr double kPiIdentityTol = 1e-8;
constexpr double kSlopeTarget = -1.0;
constexpr double kSlopeTol = 0.25;
constexpr double kGapRatioLo = 1.0 / 8.0;
constexpr double kGapRatioHi = 1.0 / 2.0;
constexpr double kCostSigmas = 3.0;
constexpr double kKbarTol = 1e-8;
constexpr int kScalarAreInstances = 100;
constexpr int kEquivalenceInstances = 200;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> check;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mflq_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Scenario scenario(const std::string& name) { return load_scenario(std::string(MFLQ_SCENARIO_DIR) + "/" + name); }

std::vector<std::vector<double>> numeric_rows(const std::string& csv, std::vector<std::string>& header) {
  std::istringstream in(csv);
  std::string line, cell;
  std::getline(in, line);
  std::istringstream hs(line);
  header.clear();
  while (std::getline(hs, cell, ',')) header.push_back(cell);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> csv_column(const std::string& csv, const std::string& name) {
  std::vector<std::string> header;
  const auto rows = numeric_rows(csv, header);
  const auto idx = static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  std::vector<double> out;
  if (idx == header.size()) return out;
  for (const auto& r : rows) out.push_back(r.at(idx));
  return out;
}

// The scalar benchmark sweep through the command layer.
std::string run_sweep(const std::string& tag, int threads) {
  const fs::path dir = scratch(tag);
  RunFlags flags;
  flags.out = dir.string();
  flags.quiet = true;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  std::ostringstream sink;
  run("sweep", scenario("scalar.json"), flags, sink);
  omp_set_num_threads(saved);
  return slurp(dir / "sweep.csv");
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

Outcome c01_shift() {
  const fs::path dir = scratch("c01");
  RunFlags flags;
  flags.out = dir.string();
  flags.quiet = true;
  std::ostringstream sink;
  run("diagnose", scenario("scalar.json"), flags, sink);
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  const double shift = j["abar_plus_G_shift"].get<double>();
  const bool ok = std::abs(shift - kShiftTarget) <= kShiftTol && j["verdict"] == true &&
                  j["case_tag"] == "hamiltonian";
  return {ok, "shift " + fmt("%.6f", shift) + ", case " + j["case_tag"].get<std::string>()};
}

Outcome c02_hamiltonians() {
  const auto h = hamiltonian_matrices(fixtures::benchmark_scalar());
  Matrix M1(2, 2), M2(2, 2);
  M1 << 0.5, 1.0, -0.1, -0.5;
  M2 << 0.3, 1.0, -0.064, -0.3;
  const double e1 = (h.M1 - M1).cwiseAbs().maxCoeff();
  const double e2 = (h.M2 - M2).cwiseAbs().maxCoeff();
  const bool free1 = imaginary_axis_free(h.M1).free, free2 = imaginary_axis_free(h.M2).free;
  return {e1 <= kHamiltonianTol && e2 <= kHamiltonianTol && free1 && free2,
          "max entry error " + fmt("%.1e", std::max(e1, e2)) + ", axis-free " + (free1 && free2 ? "yes" : "no")};
}

Outcome c03_scalar_are() {
  std::mt19937_64 rng(3003);
  int tested = 0, worst_mismatch = 0;
  double worst = 0.0;
  while (tested < kScalarAreInstances) {
    const ProblemData p = fixtures::random_scalar(rng, tested % 2 == 0 ? 1 : -1);
    const double a = p.A(0, 0), b = p.B(0, 0), r = p.R(0, 0), q = p.Q(0, 0), rho = p.rho;
    const double g = p.G(0, 0);
    const double qbar = derived_weights(p).Q_bar(0, 0);
    // both sign conditions of the scalar example
    if ((a - rho / 2) * (a - rho / 2) + b * b / r * q <= 0.0) continue;
    if ((a + g - rho / 2) * (a + g - rho / 2) + b * b / r * qbar <= 0.0) continue;
    ++tested;
    const double expected = oracle::scalar_max_root(a, b, r, q, rho);
    const auto sol = solve_are_P(p);
    worst = std::max(worst, std::abs(sol.X(0, 0) - expected) / std::max(1.0, std::abs(expected)));
    const bool sign_test = a - b * b * sol.X(0, 0) / r - rho / 2 < 0.0;
    if (sign_test != sol.is_rho_stabilizing) ++worst_mismatch;
  }
  return {worst <= kScalarAreRelTol && worst_mismatch == 0,
          std::to_string(tested) + " instances, worst relative error " + fmt("%.1e", worst) +
              ", classification mismatches " + std::to_string(worst_mismatch)};
}

Outcome c04_exponential() {
  const ProblemData ps = fixtures::benchmark_scalar();
  const double es = std::abs(solve_dre(ps, 2.0, 2000).P.front()(0, 0) -
                             oracle::exponential_riccati(ps.A, ps.B, ps.R, ps.Q, ps.rho, 2.0)(0, 0));
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ProblemData p2 = fixtures::benchmark_planar();
  for (Eigen::Index i = 0; i < 4; ++i) p2.A.data()[i] = u(rng);
  Matrix L(2, 2);
  for (Eigen::Index i = 0; i < 4; ++i) L.data()[i] = u(rng);
  p2.Q = L * L.transpose();
  const double T = 5.0;
  const double e2 =
      (solve_dre(p2, T, 2000).P.front() - oracle::exponential_riccati(p2.A, p2.B, p2.R, p2.Q, p2.rho, T)).norm();
  return {es <= kExponentialTol && e2 <= kExponentialTol,
          "scalar T=2 error " + fmt("%.1e", es) + ", random planar T=5 error " + fmt("%.1e", e2)};
}

Outcome c05_pi_identity() {
  // The scalar problem escapes for horizons beyond about 2.66; T = 2 is the
  // longest round horizon on which its finite-horizon system exists.
  const double es = solve_dre(fixtures::benchmark_scalar(), 2.0, 2000).pi_identity_error();
  const double ep = solve_dre(fixtures::benchmark_planar(), 20.0, 4000).pi_identity_error();
  return {es <= kPiIdentityTol && ep <= kPiIdentityTol,
          "scalar T=2 " + fmt("%.1e", es) + ", planar T=20 " + fmt("%.1e", ep)};
}

Outcome c06_consistency_rate() {
  const std::string csv = run_sweep("c06", omp_get_max_threads());
  const auto N = csv_column(csv, "N");
  const auto c = csv_column(csv, "consistency_int");
  if (N.size() != 3) return {false, "sweep produced " + std::to_string(N.size()) + " rows"};
  const double slope = loglog_slope(N, c);
  return {std::abs(slope - kSlopeTarget) <= kSlopeTol, "slope " + fmt("%.4f", slope)};
}

Outcome c07_gap_rate() {
  const std::string csv = run_sweep("c07", omp_get_max_threads());
  const auto e = csv_column(csv, "epsilon_hat");
  if (e.size() != 3) return {false, "sweep produced " + std::to_string(e.size()) + " rows"};
  const double ratio = e[1] / e[0];
  const bool ok = e[0] > e[1] && e[1] > e[2] && ratio >= kGapRatioLo && ratio <= kGapRatioHi;
  return {ok, "eps " + fmt("%.4g", e[0]) + " " + fmt("%.4g", e[1]) + " " + fmt("%.4g", e[2]) + ", ratio " +
                  fmt("%.4f", ratio)};
}

Outcome c08_cost_identity() {
  const ProblemData p = fixtures::benchmark_scalar();
  const double T = 20.0;
  const std::size_t M = 4000, N = 30;
  try {
    const auto fl = fixtures::finite_law(p, T, M);
    SimulationConfig cfg;
    cfg.N = N;
    cfg.T = T;
    cfg.M = M;
    cfg.replications = 64;
    const auto mc = simulate(p, fl.law, cfg);
    const auto analytic = analytic_social_cost(p, fl.path, N, mc.epsilon_hat);
    const double dev = std::abs(mc.j_soc_mean - analytic.total);
    return {dev <= kCostSigmas * mc.j_soc_se,
            "MC " + fmt("%.6g", mc.j_soc_mean) + " analytic " + fmt("%.6g", analytic.total) + " (" +
                fmt("%.2f", dev / mc.j_soc_se) + " SE)"};
  } catch (const Error& e) {
    return {false, std::string(to_string(e.code())) + ": " + e.what()};
  }
}

Outcome c09_representation() {
  const ProblemData p = fixtures::legacy_scalar();
  const auto il = fixtures::infinite_law(p, 20.0, 2000);
  const auto parts = legacy_law(p, il.P, 20.0, 2000);
  const auto rep = representation_check(il.law, parts.law, p, 20, 7);
  const double kbar = (parts.K_bar.X - (il.Pi.X - il.P.X)).norm();
  return {rep.passed && kbar <= kKbarTol,
          "state deviation " + fmt("%.1e", rep.max_state_deviation) + ", relative cost difference " +
              fmt("%.1e", rep.relative_cost_difference) + ", Kbar identity " + fmt("%.1e", kbar)};
}

Outcome c10_singular() {
  const double f = 1.0, rho = 0.6;
  const double special = -2.0 * f / rho;
  bool ok = true;
  std::string detail;
  for (double x0 : {special, 1.0, 0.0, -3.0, 2.0}) {
    const ProblemData p = fixtures::singular_scalar(x0);
    const auto Pi = maximal_solution(p.A + p.G, p.S(), derived_weights(p).Q_bar, p.rho);
    const auto off = solve_offset_infinite(p, Pi);
    const auto mf = solve_mean_field_path(p, Pi, off, 60.0, 6000);
    bool s_zero = true;
    for (const auto& s : mf.s) s_zero = s_zero && s.norm() == 0.0;
    const bool expect = x0 == special;
    ok = ok && Pi.X.norm() == 0.0 && s_zero && mf.rho_integrable == expect;
    detail += (detail.empty() ? "" : ", ") + fmt("x0=%.4g", x0) + (mf.rho_integrable ? " integrable" : " not");
  }
  return {ok, "Pi = 0, s = 0; " + detail};
}

Outcome c11_equivalence() {
  std::mt19937_64 rng(1111);
  int classified = 0, disagreements = 0;
  for (int i = 0; i < kEquivalenceInstances; ++i) {
    const auto rep = stabilization_report(fixtures::random_scalar(rng, i % 3 - 1));
    if (rep.case_tag == CaseTag::unclassified) continue;
    ++classified;
    if (rep.condition_ii != rep.condition_iii) ++disagreements;
  }
  return {disagreements == 0, std::to_string(classified) + " of " + std::to_string(kEquivalenceInstances) +
                                  " classified, " + std::to_string(disagreements) + " disagreements"};
}

Outcome c12_determinism() {
  const std::string one = run_sweep("c12_t1", 1);
  const std::string four = run_sweep("c12_t4", 4);
  return {!one.empty() && one == four, std::to_string(one.size()) + " bytes, threads 1 vs 4 " +
                                           (one == four ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "scalar closed-loop shift", 1.0, c01_shift},
      {2, "scalar Hamiltonians", 1.0, c02_hamiltonians},
      {3, "scalar ARE oracle", 5.0, c03_scalar_are},
      {4, "matrix-exponential Riccati oracle", 5.0, c04_exponential},
      {5, "Pi = P + K", 5.0, c05_pi_identity},
      {6, "mean-field consistency rate", 120.0, c06_consistency_rate},
      {7, "optimality gap rate", 120.0, c07_gap_rate},
      {8, "finite-horizon cost identity, scalar N=30 T=20", 60.0, c08_cost_identity},
      {9, "representation equivalence", 30.0, c09_representation},
      {10, "singular-case detection", 1.0, c10_singular},
      {11, "uniform-stabilization equivalence", 10.0, c11_equivalence},
      {12, "sweep determinism across thread counts", 240.0, c12_determinism},
  };
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) ids.push_back(std::stoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), c.id) == ids.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += ", over time budget";
    }
    if (!o.pass) ++failures;
    std::printf("%s %02d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
