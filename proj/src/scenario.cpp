#include "mflq/scenario.hpp"

#include <algorithm>
#include <fstream>
#include "json.hpp"
#include <set>
#include <sstream>

namespace mflq {

using nlohmann::json;

namespace {

[[noreturn]] void bad(ErrorCode code, const std::string& field, const std::string& what) {
  throw Error(code, "field '" + field + "': " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!ok.count(it.key())) {
      bad(ErrorCode::UnknownField, where.empty() ? it.key() : where + "." + it.key(), "unknown field");
    }
  }
}

const json& require(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) bad(ErrorCode::MissingField, where + "." + key, "required field missing");
  return obj.at(key);
}

const json& object(const json& j, const std::string& where) {
  if (!j.is_object()) bad(ErrorCode::ParseError, where, "expected an object");
  return j;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(ErrorCode::ParseError, where, "expected a number");
  return j.get<double>();
}

std::size_t count(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) bad(ErrorCode::ParseError, where, "expected a non-negative integer");
  return j.get<std::size_t>();
}

Vector vector_of(const json& j, const std::string& where) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) bad(ErrorCode::ParseError, where, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where);
  return v;
}

Matrix matrix_of(const json& j, const std::string& where) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) bad(ErrorCode::ParseError, where, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) bad(ErrorCode::ParseError, where, "rows must be arrays of equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = number(j[i][c], where);
    }
  }
  return m;
}

Signal signal_of(const json& j, const std::string& where) {
  if (j.is_number() || j.is_array()) return Signal::constant(vector_of(j, where));
  object(j, where);
  reject_unknown(j, where, {"constant", "table"});
  if (j.contains("constant") == j.contains("table")) {
    bad(ErrorCode::ParseError, where, "signal needs exactly one of 'constant' or 'table'");
  }
  if (j.contains("constant")) return Signal::constant(vector_of(j["constant"], where + ".constant"));
  const json& t = object(j["table"], where + ".table");
  reject_unknown(t, where + ".table", {"knots", "values"});
  const json& knots = require(t, where + ".table", "knots");
  const json& values = require(t, where + ".table", "values");
  if (!knots.is_array() || !values.is_array()) bad(ErrorCode::ParseError, where, "knots and values must be arrays");
  std::vector<double> ks;
  std::vector<Vector> vs;
  for (const auto& k : knots) ks.push_back(number(k, where + ".table.knots"));
  for (const auto& v : values) vs.push_back(vector_of(v, where + ".table.values"));
  try {
    return Signal::table(std::move(ks), std::move(vs));
  } catch (const Error& e) {
    bad(ErrorCode::ParseError, where, e.what());
  }
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    a.push_back(row);
  }
  return a;
}

json to_json(const Signal& s) {
  if (s.is_constant()) return json{{"constant", to_json(s.values().front())}};
  json values = json::array();
  for (const auto& v : s.values()) values.push_back(to_json(v));
  return json{{"table", {{"knots", s.knots()}, {"values", values}}}};
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  object(root, "<root>");
  reject_unknown(root, "", {"problem", "horizon", "grid_steps", "simulation", "sweep", "outputs"});

  Scenario s;
  const json& pr = object(require(root, "<root>", "problem"), "problem");
  reject_unknown(pr, "problem",
                 {"A", "B", "G", "Q", "R", "Gamma", "rho", "f", "sigma", "eta", "init_mean", "init_cov"});
  ProblemConfig& c = s.problem;
  c.A = matrix_of(require(pr, "problem", "A"), "problem.A");
  c.B = matrix_of(require(pr, "problem", "B"), "problem.B");
  c.Q = matrix_of(require(pr, "problem", "Q"), "problem.Q");
  c.R = matrix_of(require(pr, "problem", "R"), "problem.R");
  c.rho = number(require(pr, "problem", "rho"), "problem.rho");
  const auto n = c.A.rows();
  c.G = pr.contains("G") ? matrix_of(pr["G"], "problem.G") : Matrix::Zero(n, n);
  c.Gamma = pr.contains("Gamma") ? matrix_of(pr["Gamma"], "problem.Gamma") : Matrix::Zero(n, n);
  const Signal zero = Signal::constant(Vector::Zero(n));
  c.f = pr.contains("f") ? signal_of(pr["f"], "problem.f") : zero;
  c.sigma = pr.contains("sigma") ? signal_of(pr["sigma"], "problem.sigma") : zero;
  c.eta = pr.contains("eta") ? signal_of(pr["eta"], "problem.eta") : zero;
  c.init_mean = pr.contains("init_mean") ? vector_of(pr["init_mean"], "problem.init_mean") : Vector::Zero(n);
  c.init_cov = pr.contains("init_cov") ? matrix_of(pr["init_cov"], "problem.init_cov") : Matrix::Zero(n, n);

  const json& hz = object(require(root, "<root>", "horizon"), "horizon");
  reject_unknown(hz, "horizon", {"kind", "T"});
  s.horizon.T = number(require(hz, "horizon", "T"), "horizon.T");
  if (hz.contains("kind")) {
    const json& k = hz["kind"];
    if (k == "finite") {
      s.horizon.infinite = false;
    } else if (k == "infinite") {
      s.horizon.infinite = true;
    } else {
      bad(ErrorCode::ParseError, "horizon.kind", "expected \"finite\" or \"infinite\"");
    }
  }
  if (!(s.horizon.T > 0.0)) bad(ErrorCode::ParseError, "horizon.T", "must be positive");

  if (root.contains("grid_steps")) s.grid_steps = count(root["grid_steps"], "grid_steps");
  if (s.grid_steps < 2) bad(ErrorCode::ParseError, "grid_steps", "must be at least 2");

  if (root.contains("simulation")) {
    const json& sim = object(root["simulation"], "simulation");
    reject_unknown(sim, "simulation", {"agents", "replications", "seed", "law"});
    if (sim.contains("agents")) s.simulation.agents = count(sim["agents"], "simulation.agents");
    if (sim.contains("replications")) s.simulation.replications = count(sim["replications"], "simulation.replications");
    if (sim.contains("seed")) {
      if (!sim["seed"].is_number_unsigned()) bad(ErrorCode::ParseError, "simulation.seed", "expected an unsigned integer");
      s.simulation.seed = sim["seed"].get<std::uint64_t>();
    }
    if (sim.contains("law")) {
      if (sim["law"] != "decentralized" && sim["law"] != "centralized") {
        bad(ErrorCode::ParseError, "simulation.law", "expected \"decentralized\" or \"centralized\"");
      }
      s.simulation.law = sim["law"].get<std::string>();
    }
    if (s.simulation.agents < 1) bad(ErrorCode::ParseError, "simulation.agents", "must be at least 1");
    if (s.simulation.replications < 1) bad(ErrorCode::ParseError, "simulation.replications", "must be at least 1");
  }
  if (root.contains("sweep")) {
    if (!root["sweep"].is_array()) bad(ErrorCode::ParseError, "sweep", "expected an array of agent counts");
    for (const auto& v : root["sweep"]) {
      s.sweep.push_back(count(v, "sweep"));
      if (s.sweep.back() < 1) bad(ErrorCode::ParseError, "sweep", "agent counts must be at least 1");
    }
  }
  if (root.contains("outputs")) {
    const json& out = object(root["outputs"], "outputs");
    reject_unknown(out, "outputs", {"directory", "format"});
    if (out.contains("directory")) {
      if (!out["directory"].is_string()) bad(ErrorCode::ParseError, "outputs.directory", "expected a string");
      s.outputs.directory = out["directory"].get<std::string>();
    }
    if (out.contains("format")) {
      if (out["format"] != "csv") bad(ErrorCode::ParseError, "outputs.format", "only \"csv\" is supported");
      s.outputs.format = "csv";
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
  const ProblemConfig& c = s.problem;
  json root;
  root["problem"] = {{"A", to_json(c.A)},         {"B", to_json(c.B)},
                     {"G", to_json(c.G)},         {"Q", to_json(c.Q)},
                     {"R", to_json(c.R)},         {"Gamma", to_json(c.Gamma)},
                     {"rho", c.rho},              {"f", to_json(c.f)},
                     {"sigma", to_json(c.sigma)}, {"eta", to_json(c.eta)},
                     {"init_mean", to_json(c.init_mean)}, {"init_cov", to_json(c.init_cov)}};
  root["horizon"] = {{"kind", s.horizon.infinite ? "infinite" : "finite"}, {"T", s.horizon.T}};
  root["grid_steps"] = s.grid_steps;
  root["simulation"] = {{"agents", s.simulation.agents},
                        {"replications", s.simulation.replications},
                        {"seed", s.simulation.seed},
                        {"law", s.simulation.law}};
  root["sweep"] = s.sweep;
  root["outputs"] = {{"directory", s.outputs.directory}, {"format", s.outputs.format}};
  return root.dump(2) + "\n";
}

}  // namespace mflq
