#include "ossync/scenario.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ossync {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw OssError(ErrorKind::kParseError, path + ": " + what);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed,
                std::initializer_list<const char*> required = {}) {
  if (!j.is_object()) fail(path, "expected an object");
  std::set<std::string> ok;
  for (const char* a : allowed) ok.insert(a);
  for (const char* r : required) ok.insert(r);
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) fail(path, "unknown key '" + k + "'");
  }
  for (const char* r : required) {
    if (!j.contains(r)) fail(path, std::string("missing key '") + r + "'");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "non-finite number");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

Vector vector_of(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Matrix matrix_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].empty()) fail(path + "[" + std::to_string(i) + "]", "expected a nonempty row");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) fail(path, "ragged matrix");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          number(j[i][k], path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
    }
  }
  return m;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void require_shape(const Matrix& m, Eigen::Index r, Eigen::Index c, const std::string& path) {
  if (m.rows() != r || m.cols() != c) {
    std::ostringstream os;
    os << "expected " << r << "x" << c << ", got " << m.rows() << "x" << m.cols();
    fail(path, os.str());
  }
}

EbossOptions parse_eboss_options(const json& j, const std::string& path) {
  check_keys(j, path, {"delta_margin", "delta_rel_min", "k_max", "gamma", "shrink", "alpha0", "alpha_max",
                       "adaptive_backoff"});
  EbossOptions o;
  if (j.contains("delta_margin")) o.delta_margin = number(j["delta_margin"], path + ".delta_margin");
  if (j.contains("delta_rel_min")) o.delta_rel_min = number(j["delta_rel_min"], path + ".delta_rel_min");
  if (j.contains("k_max")) o.k_max = integer(j["k_max"], path + ".k_max");
  if (j.contains("gamma")) o.gamma = number(j["gamma"], path + ".gamma");
  if (j.contains("shrink")) o.shrink = number(j["shrink"], path + ".shrink");
  if (j.contains("alpha0")) o.alpha0 = number(j["alpha0"], path + ".alpha0");
  if (j.contains("alpha_max")) {
    if (j["alpha_max"].is_string() && j["alpha_max"] == "inf") {
      o.alpha_max = std::numeric_limits<double>::infinity();
    } else {
      o.alpha_max = number(j["alpha_max"], path + ".alpha_max");
    }
  }
  if (j.contains("adaptive_backoff")) {
    if (!j["adaptive_backoff"].is_boolean()) fail(path + ".adaptive_backoff", "expected a boolean");
    o.adaptive_backoff = j["adaptive_backoff"].get<bool>();
  }
  if (!(o.gamma >= 1.0) || !(o.shrink > 0.0 && o.shrink < 1.0) || !(o.alpha0 > 0.0) || o.k_max < 1) {
    fail(path, "need gamma >= 1, 0 < shrink < 1, alpha0 > 0, k_max >= 1");
  }
  return o;
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw OssError(ErrorKind::kParseError, std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "$", {"name", "sigma", "expectations"}, {"graph", "exosystem", "agents", "simulation"});
  Scenario sc;
  if (root.contains("name")) {
    if (!root["name"].is_string()) fail("$.name", "expected a string");
    sc.name = root["name"].get<std::string>();
  }

  // graph
  const json& g = root["graph"];
  check_keys(g, "$.graph", {}, {"N", "edges"});
  sc.vertices = integer(g["N"], "$.graph.N");
  if (sc.vertices < 1) fail("$.graph.N", "need at least one agent");
  if (!g["edges"].is_array()) fail("$.graph.edges", "expected an array of [from, to] pairs");
  for (std::size_t i = 0; i < g["edges"].size(); ++i) {
    const json& e = g["edges"][i];
    const std::string path = "$.graph.edges[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 2) fail(path, "expected [from, to]");
    const int from = integer(e[0], path);
    const int to = integer(e[1], path);
    if (from < 1 || to < 1 || from > sc.vertices || to > sc.vertices) fail(path, "vertex out of range (1-based)");
    sc.edges.emplace_back(from - 1, to - 1);
  }
  try {
    (void)sc.graph();
  } catch (const OssError& e) {
    fail("$.graph", e.what());
  }

  // exosystem
  const json& ex = root["exosystem"];
  check_keys(ex, "$.exosystem", {"multiplicities", "input_matrix"}, {"frequencies", "raw_output", "amplitudes"});
  const Vector freqs = vector_of(ex["frequencies"], "$.exosystem.frequencies");
  std::vector<FrequencySpec> fs;
  for (Eigen::Index i = 0; i < freqs.size(); ++i) fs.push_back({freqs(i), 1});
  if (ex.contains("multiplicities")) {
    const json& m = ex["multiplicities"];
    if (!m.is_array() || m.size() != fs.size()) fail("$.exosystem.multiplicities", "one entry per frequency");
    for (std::size_t i = 0; i < m.size(); ++i) fs[i].multiplicity = integer(m[i], "$.exosystem.multiplicities");
  }
  const Matrix raw = matrix_of(ex["raw_output"], "$.exosystem.raw_output");
  const Vector amps = vector_of(ex["amplitudes"], "$.exosystem.amplitudes");
  try {
    sc.exo = build_exosystem(fs, raw, std::vector<double>(amps.data(), amps.data() + amps.size()));
  } catch (const OssError& e) {
    fail("$.exosystem", e.what());
  }
  const auto nb = sc.exo.order();
  sc.b_bar = ex.contains("input_matrix") ? matrix_of(ex["input_matrix"], "$.exosystem.input_matrix")
                                         : Matrix(Matrix::Identity(nb, nb));
  if (sc.b_bar.rows() != nb) fail("$.exosystem.input_matrix", "row count must equal the exosystem order");

  if (root.contains("sigma")) {
    sc.sigma = number(root["sigma"], "$.sigma");
    if (!(sc.sigma > 0.0)) fail("$.sigma", "must be positive");
  }

  // simulation
  const json& sim = root["simulation"];
  check_keys(sim, "$.simulation", {"h", "t_end", "energy_window_start", "initial_states"}, {"initial_exostates"});
  if (sim.contains("h")) sc.h = number(sim["h"], "$.simulation.h");
  if (sim.contains("t_end")) sc.t_end = number(sim["t_end"], "$.simulation.t_end");
  if (sim.contains("energy_window_start")) {
    sc.energy_window_start = number(sim["energy_window_start"], "$.simulation.energy_window_start");
  }
  if (!(sc.h > 0.0) || !(sc.t_end > sc.h)) fail("$.simulation", "need 0 < h < t_end");

  // agents
  const json& agents = root["agents"];
  if (!agents.is_array() || agents.empty()) fail("$.agents", "expected a nonempty array");
  if (static_cast<int>(agents.size()) != sc.vertices) fail("$.agents", "one agent per graph vertex required");
  const json& xbar0 = sim["initial_exostates"];
  if (!xbar0.is_array() || xbar0.size() != agents.size()) {
    fail("$.simulation.initial_exostates", "one exosystem state per agent required");
  }
  if (sim.contains("initial_states") && (!sim["initial_states"].is_array() || sim["initial_states"].size() != agents.size())) {
    fail("$.simulation.initial_states", "one state per agent required");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = "$.agents[" + std::to_string(i) + "]";
    const json& a = agents[i];
    check_keys(a, path, {"name", "Q", "R", "epsilon", "stabilizer", "path_following"}, {"A", "B", "C", "strategy"});
    AgentSpec s;
    s.name = a.contains("name") ? a["name"].get<std::string>() : "agent" + std::to_string(i + 1);
    try {
      s.model = AgentModel(matrix_of(a["A"], path + ".A"), matrix_of(a["B"], path + ".B"), matrix_of(a["C"], path + ".C"));
    } catch (const OssError& e) {
      if (e.kind() == ErrorKind::kParseError) throw;
      fail(path, e.what());
    }
    if (s.model.outputs() != sc.exo.outputs()) fail(path + ".C", "output count differs from the exosystem");
    if (!a["strategy"].is_string()) fail(path + ".strategy", "expected a string");
    try {
      s.strategy = parse_strategy(a["strategy"].get<std::string>());
    } catch (const OssError& e) {
      fail(path + ".strategy", e.what());
    }
    const auto n = s.model.states();
    const auto m = s.model.inputs();
    const auto p = s.model.outputs();
    s.r = a.contains("R") ? matrix_of(a["R"], path + ".R") : Matrix(Matrix::Identity(m, m));
    require_shape(s.r, m, m, path + ".R");
    if (a.contains("Q")) {
      s.q = matrix_of(a["Q"], path + ".Q");
      require_shape(s.q, p, p, path + ".Q");
    }
    if (a.contains("epsilon")) s.epsilon = vector_of(a["epsilon"], path + ".epsilon");
    switch (s.strategy) {
      case Strategy::kExs:
        if (a.contains("Q") || a.contains("epsilon")) fail(path, "EXS takes neither Q nor epsilon");
        break;
      case Strategy::kOss:
        if (!a.contains("Q")) fail(path, "OSS needs Q");
        if (a.contains("epsilon")) fail(path, "OSS takes no epsilon");
        break;
      case Strategy::kEboss:
        if (!a.contains("epsilon")) fail(path, "EBOSS needs epsilon");
        if (s.epsilon.size() != p) fail(path + ".epsilon", "one entry per output");
        break;
    }
    s.stabilizer_q = Matrix::Identity(n, n);
    s.stabilizer_r = Matrix::Identity(m, m);
    if (a.contains("stabilizer")) {
      const json& st = a["stabilizer"];
      check_keys(st, path + ".stabilizer", {"Q", "R"});
      if (st.contains("Q")) s.stabilizer_q = matrix_of(st["Q"], path + ".stabilizer.Q");
      if (st.contains("R")) s.stabilizer_r = matrix_of(st["R"], path + ".stabilizer.R");
      require_shape(s.stabilizer_q, n, n, path + ".stabilizer.Q");
      require_shape(s.stabilizer_r, m, m, path + ".stabilizer.R");
    }
    if (a.contains("path_following")) s.eboss = parse_eboss_options(a["path_following"], path + ".path_following");

    s.xbar0 = vector_of(xbar0[i], "$.simulation.initial_exostates[" + std::to_string(i) + "]");
    if (s.xbar0.size() != nb) fail("$.simulation.initial_exostates[" + std::to_string(i) + "]", "wrong length");
    if (sim.contains("initial_states")) {
      s.x0 = vector_of(sim["initial_states"][i], "$.simulation.initial_states[" + std::to_string(i) + "]");
      if (s.x0.size() != n) fail("$.simulation.initial_states[" + std::to_string(i) + "]", "wrong length");
    } else {
      s.x0 = Vector::Zero(n);
    }
    sc.agents.push_back(std::move(s));
  }

  if (root.contains("expectations")) {
    const json& ej = root["expectations"];
    check_keys(ej, "$.expectations", {"energies", "energy_order"});
    if (ej.contains("energies")) {
      if (!ej["energies"].is_array()) fail("$.expectations.energies", "expected an array");
      for (std::size_t i = 0; i < ej["energies"].size(); ++i) {
        const std::string path = "$.expectations.energies[" + std::to_string(i) + "]";
        const json& e = ej["energies"][i];
        check_keys(e, path, {}, {"agent", "value", "rel_tol"});
        EnergyExpectation x{integer(e["agent"], path + ".agent"), number(e["value"], path + ".value"),
                            number(e["rel_tol"], path + ".rel_tol")};
        if (x.agent < 1 || x.agent > sc.vertices) fail(path + ".agent", "out of range");
        sc.expectations.energies.push_back(x);
      }
    }
    if (ej.contains("energy_order")) {
      if (!ej["energy_order"].is_array()) fail("$.expectations.energy_order", "expected an array");
      for (const auto& v : ej["energy_order"]) {
        const int a = integer(v, "$.expectations.energy_order");
        if (a < 1 || a > sc.vertices) fail("$.expectations.energy_order", "agent out of range");
        sc.expectations.energy_order.push_back(a);
      }
    }
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw OssError(ErrorKind::kParseError, "cannot open " + path.string());
  return parse_scenario(in);
}

AgentDesign design_agent(const AgentSpec& spec, const Exosystem& exo, const Vector& consensus_xbar0) {
  AgentDesign d;
  d.name = spec.name;
  d.strategy = spec.strategy;
  d.r = spec.r;
  {
    // Regulator-equation residual is reported for every agent.
    try {
      (void)solve_exs(spec.model, exo);
      d.exs_residual = 0.0;
    } catch (const NoSolutionError& e) {
      d.exs_residual = e.residual();
    }
  }
  switch (spec.strategy) {
    case Strategy::kExs: {
      const StationaryPair sp = solve_exs(spec.model, exo);
      d.pi = sp.pi;
      d.gamma = sp.gamma;
      break;
    }
    case Strategy::kOss: {
      const OssSolution s = solve_oss(spec.model, exo, spec.q, spec.r);
      d.pi = s.pi;
      d.gamma = s.gamma;
      d.q = spec.q;
      break;
    }
    case Strategy::kEboss: {
      const EbossSpec es(spec.model, exo, spec.r, spec.epsilon, spec.eboss);
      const Matrix q0 = spec.q.size() ? spec.q : find_initial_q(es);
      EbossDesign ed = path_following(es, q0);
      d.pi = ed.pi;
      d.gamma = ed.gamma;
      d.q = ed.q;
      d.eboss = std::move(ed);
      break;
    }
  }
  d.objective = (d.gamma.transpose() * d.r * d.gamma).trace();
  d.energy = stationary_input_energy(d.gamma, d.r, exo, consensus_xbar0);
  d.error = spec.model.c * d.pi - exo.c;
  d.k = design_stabilizer(spec.model, spec.stabilizer_q, spec.stabilizer_r).k;
  return d;
}

namespace {

NetworkScenario skeleton(const Scenario& sc, const Matrix& laplacian) {
  NetworkScenario ns;
  ns.laplacian = laplacian;
  ns.exo = sc.exo;
  ns.b_bar = sc.b_bar;
  ns.h = sc.h;
  ns.t_end = sc.t_end;
  for (const auto& a : sc.agents) {
    NetworkAgent na;
    na.model = a.model;
    na.x0 = a.x0;
    na.xbar0 = a.xbar0;
    ns.agents.push_back(std::move(na));
  }
  return ns;
}

}  // namespace

NetworkDesign design_network(const Scenario& sc) {
  NetworkDesign nd;
  const DiGraph g = sc.graph();
  if (!has_spanning_tree(g)) throw OssError(ErrorKind::kNoSpanningTree, "communication graph has no spanning tree");
  nd.laplacian = laplacian(g);
  const double sigma = sc.sigma > 0.0 ? sc.sigma : default_sigma(nd.laplacian);
  nd.sync = sync_gain(sc.exo.a, sc.b_bar, sigma, nd.laplacian);
  nd.consensus = consensus_trajectory(skeleton(sc, nd.laplacian));

  std::vector<std::future<AgentDesign>> jobs;
  for (const auto& a : sc.agents) {
    jobs.push_back(std::async(std::launch::async, [&a, &sc, &nd] {
      return design_agent(a, sc.exo, nd.consensus.xbar0);
    }));
  }
  // Collect all results first so every task finishes before an error escapes.
  std::vector<std::exception_ptr> errors(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      nd.agents.push_back(jobs[i].get());
    } catch (...) {
      errors[i] = std::current_exception();
      nd.agents.emplace_back();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const OssError& e) {
      std::string msg = e.what();
      const std::string prefix = std::string(to_string(e.kind())) + ": ";
      if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
      throw OssError(e.kind(), sc.agents[i].name + ": " + msg);
    }
  }
  return nd;
}

NetworkScenario assemble_network(const Scenario& sc, const NetworkDesign& nd) {
  NetworkScenario ns = skeleton(sc, nd.laplacian);
  ns.k_bar = nd.sync.gain;
  ns.sigma = nd.sync.sigma;
  for (std::size_t i = 0; i < ns.agents.size(); ++i) {
    ns.agents[i].design.strategy = nd.agents[i].strategy;
    ns.agents[i].design.pi = nd.agents[i].pi;
    ns.agents[i].design.gamma = nd.agents[i].gamma;
    ns.agents[i].design.k = nd.agents[i].k;
  }
  return ns;
}

void write_designs(std::ostream& os, const Scenario& sc, const NetworkDesign& nd) {
  json root;
  root["scenario"] = sc.name;
  root["sigma"] = nd.sync.sigma;
  root["sync_gain"] = to_json(nd.sync.gain);
  root["consensus_weights"] = to_json(nd.consensus.weights);
  root["consensus_xbar0"] = to_json(nd.consensus.xbar0);
  root["period"] = sc.exo.period;
  json agents = json::array();
  for (const auto& d : nd.agents) {
    json a;
    a["name"] = d.name;
    a["strategy"] = std::string(to_string(d.strategy));
    a["Pi"] = to_json(d.pi);
    a["Gamma"] = to_json(d.gamma);
    a["K"] = to_json(d.k);
    a["R"] = to_json(d.r);
    if (d.q.size()) a["Q"] = to_json(d.q);
    a["objective"] = d.objective;
    a["energy"] = d.energy;
    a["exs_residual"] = d.exs_residual;
    if (d.eboss) {
      const auto& e = *d.eboss;
      json eb;
      eb["Q0"] = to_json(e.q0);
      eb["initial_objective"] = e.initial_objective;
      eb["iterations"] = e.history.iterations;
      eb["accepted"] = e.history.accepted;
      eb["termination"] = std::string(to_string(e.history.termination));
      eb["bound_ratio"] = e.evaluation.bound_ratio;
      eb["P"] = to_json(e.evaluation.p);
      eb["X"] = to_json(e.evaluation.x);
      eb["certificate"] = e.certificate.holds;
      eb["certificate_min_eigenvalues"] = e.certificate.min_eigenvalues;
      a["eboss"] = eb;
    }
    agents.push_back(std::move(a));
  }
  root["agents"] = agents;
  os << std::setprecision(17) << root.dump(2) << '\n';
}

NetworkDesign read_designs(std::istream& in, const Scenario& sc) {
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw OssError(ErrorKind::kParseError, std::string("designs: invalid JSON: ") + e.what());
  }
  NetworkDesign nd;
  try {
    nd.laplacian = laplacian(sc.graph());
    nd.sync.sigma = root.at("sigma").get<double>();
    nd.sync.gain = matrix_of(root.at("sync_gain"), "sync_gain");
    nd.consensus.weights = vector_of(root.at("consensus_weights"), "consensus_weights");
    nd.consensus.xbar0 = vector_of(root.at("consensus_xbar0"), "consensus_xbar0");
    const json& agents = root.at("agents");
    if (agents.size() != sc.agents.size()) fail("designs.agents", "agent count differs from the scenario");
    for (const auto& a : agents) {
      AgentDesign d;
      d.name = a.at("name").get<std::string>();
      d.strategy = parse_strategy(a.at("strategy").get<std::string>());
      d.pi = matrix_of(a.at("Pi"), "Pi");
      d.gamma = matrix_of(a.at("Gamma"), "Gamma");
      d.k = matrix_of(a.at("K"), "K");
      d.r = matrix_of(a.at("R"), "R");
      if (a.contains("Q")) d.q = matrix_of(a.at("Q"), "Q");
      d.objective = a.at("objective").get<double>();
      d.energy = a.at("energy").get<double>();
      d.exs_residual = a.at("exs_residual").get<double>();
      if (a.contains("eboss")) {
        const json& eb = a.at("eboss");
        EbossDesign e;
        e.q = d.q;
        e.pi = d.pi;
        e.gamma = d.gamma;
        e.objective = d.objective;
        e.q0 = matrix_of(eb.at("Q0"), "Q0");
        e.initial_objective = eb.at("initial_objective").get<double>();
        e.history.iterations = eb.at("iterations").get<int>();
        e.history.accepted = eb.at("accepted").get<int>();
        const auto term = eb.at("termination").get<std::string>();
        e.history.termination = term == "DeltaRelBelowThreshold" ? Termination::kDeltaRelBelowThreshold
                                : term == "StalledStep"           ? Termination::kStalledStep
                                                                  : Termination::kMaxIterations;
        e.evaluation.bound_ratio = eb.at("bound_ratio").get<double>();
        e.evaluation.p = matrix_of(eb.at("P"), "P");
        e.evaluation.x = matrix_of(eb.at("X"), "X");
        e.certificate.holds = eb.at("certificate").get<bool>();
        e.certificate.min_eigenvalues = eb.at("certificate_min_eigenvalues").get<std::vector<double>>();
        d.eboss = std::move(e);
      }
      nd.agents.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw OssError(ErrorKind::kParseError, std::string("designs: ") + e.what());
  }
  for (std::size_t i = 0; i < nd.agents.size(); ++i) {
    const AgentModel& m = sc.agents[i].model;
    const AgentDesign& d = nd.agents[i];
    if (d.name != sc.agents[i].name || d.strategy != sc.agents[i].strategy || d.pi.rows() != m.states() ||
        d.pi.cols() != sc.exo.order() || d.gamma.rows() != m.inputs() || d.gamma.cols() != sc.exo.order() ||
        d.k.rows() != m.inputs() || d.k.cols() != m.states()) {
      fail("designs.agents[" + std::to_string(i) + "]", "does not match the scenario (run design again)");
    }
    nd.agents[i].error = m.c * nd.agents[i].pi - sc.exo.c;
  }
  return nd;
}

}  // namespace ossync
