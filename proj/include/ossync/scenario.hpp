#pragma once

// Scenario files and the design/simulation pipeline that consumes them.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ossync/eboss.hpp"
#include "ossync/massim.hpp"
#include "ossync/netgraph.hpp"

namespace ossync {

struct AgentSpec {
  std::string name;
  AgentModel model;
  Strategy strategy = Strategy::kExs;
  Matrix q;              // OSS weight; optional initial Q for EBOSS
  Matrix r;              // input weight (identity when omitted)
  Vector epsilon;        // EBOSS tolerated errors
  Matrix stabilizer_q;   // LQR weights of the local stabiliser
  Matrix stabilizer_r;
  Vector x0;
  Vector xbar0;
  EbossOptions eboss;
};

struct EnergyExpectation {
  int agent = 0;  // 1-based
  double value = 0.0;
  double rel_tol = 0.0;
};

struct Expectations {
  std::vector<EnergyExpectation> energies;
  std::vector<int> energy_order;  // 1-based, strictly decreasing energies
};

struct Scenario {
  std::string name;
  int vertices = 0;
  std::vector<std::pair<int, int>> edges;  // 0-based
  Exosystem exo;
  Matrix b_bar;
  double sigma = 0.0;  // 0 selects default_sigma
  std::vector<AgentSpec> agents;
  double h = 1e-3;
  double t_end = 40.0;
  double energy_window_start = 6.0;
  Expectations expectations;

  DiGraph graph() const { return DiGraph(vertices, edges); }
};

/// Strict parser: unknown keys, ragged matrices and wrong shapes throw
/// kParseError with the offending JSON path.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::filesystem::path& path);

struct AgentDesign {
  std::string name;
  Strategy strategy = Strategy::kExs;
  Matrix pi;
  Matrix gamma;
  Matrix k;
  Matrix q;
  Matrix r;
  double objective = 0.0;          // trace(Gamma^T R Gamma)
  double energy = 0.0;             // stationary J_u at the consensus x_bar(0)
  Matrix error;                    // C Pi - C_bar
  double exs_residual = 0.0;       // least-squares residual of the regulator equations
  std::optional<EbossDesign> eboss;
};

/// EXS -> solve_exs, OSS -> solve_oss, EBOSS -> find_initial_q (unless a Q is
/// given) + path_following. Also designs the local LQR stabiliser.
AgentDesign design_agent(const AgentSpec& spec, const Exosystem& exo, const Vector& consensus_xbar0);

struct NetworkDesign {
  Matrix laplacian;
  SyncGain sync;
  ConsensusPrediction consensus;
  std::vector<AgentDesign> agents;
};

/// Designs every agent concurrently (one task per agent).
NetworkDesign design_network(const Scenario& sc);

NetworkScenario assemble_network(const Scenario& sc, const NetworkDesign& nd);

/// designs.json round trip (everything simulate/verify/report need).
void write_designs(std::ostream& os, const Scenario& sc, const NetworkDesign& nd);
NetworkDesign read_designs(std::istream& in, const Scenario& sc);

}  // namespace ossync
