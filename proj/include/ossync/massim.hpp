#pragma once

#include <string>
#include <vector>

#include "ossync/exocore.hpp"
#include "ossync/oss_synth.hpp"

namespace ossync {

enum class Strategy { kExs, kOss, kEboss };

std::string_view to_string(Strategy s);
/// "EXS" | "OSS" | "EBOSS" (case-sensitive); throws kParseError otherwise.
Strategy parse_strategy(std::string_view s);

/// Local controller u = -K (x - Pi x_bar) + Gamma x_bar.
struct SyncDesign {
  Strategy strategy = Strategy::kExs;
  Matrix pi;
  Matrix gamma;
  Matrix k;
};

struct NetworkAgent {
  AgentModel model;
  SyncDesign design;
  Vector x0;
  Vector xbar0;
};

/// Heterogeneous network: agent i runs a local copy x_bar_i of the exosystem
/// driven by u_bar_i = -K_bar sum_j l_ij x_bar_j.
struct NetworkScenario {
  Matrix laplacian;
  Exosystem exo;
  Matrix b_bar;
  Matrix k_bar;
  double sigma = 0.0;
  std::vector<NetworkAgent> agents;
  double h = 1e-3;
  double t_end = 40.0;
};

struct SimulationRecord {
  Vector time;
  std::vector<Matrix> x;      // per agent, states x steps
  std::vector<Matrix> xbar;   // per agent
  std::vector<Matrix> y;
  std::vector<Matrix> u;
  std::vector<Matrix> error;  // y_i - C_bar x_bar(t), consensus x_bar
  Matrix consensus;           // predicted x_bar(t)
  std::vector<Vector> cumulative_energy;  // 1/2 int u^T R u, trapezoid, R = I unless given
  double h = 0.0;

  Eigen::Index steps() const { return time.size(); }
  /// max_{i,j} ||x_bar_i - x_bar_j|| at sample `k`.
  double exo_disagreement(Eigen::Index k) const;
};

/// Fixed-step classic RK4 on the stacked linear network (one-step map
/// precomputed). Throws kNonFiniteState when the state blows up.
/// `input_weights` (optional, one per agent) weigh the cumulative energy.
SimulationRecord simulate(const NetworkScenario& sc, const std::vector<Matrix>& input_weights = {});

/// Consensus point x_bar(0) = sum_i w_i x_bar_i(0) with w^T L = 0, sum w = 1.
struct ConsensusPrediction {
  Vector weights;
  Vector xbar0;
};

/// Throws kNoSpanningTree when zero is not a simple Laplacian eigenvalue.
ConsensusPrediction consensus_trajectory(const NetworkScenario& sc);

struct BoundReport {
  Vector sup;                 // max |e_j^T E x_bar(t)| per output
  Vector epsilon;
  Vector violation;           // max(0, sup - eps)
  std::vector<Vector> worst_x0;
  std::vector<double> worst_t;
  bool pass = false;
  int boundary_samples = 0;
  int time_points = 0;
};

/// Samples exocore.sample_boundary x a uniform grid on [0, T]; pass iff every
/// sup_j <= eps_j + 1e-6.
BoundReport verify_error_bounds(const Matrix& error, const Exosystem& exo, const Vector& epsilon,
                                int boundary_samples = 64, int time_points = 2000);
BoundReport verify_error_bounds(const Matrix& c, const Matrix& pi, const Exosystem& exo,
                                const Vector& epsilon, int boundary_samples = 64,
                                int time_points = 2000);

/// 1/2 int_{t_s}^{t_s+T} x_bar^T Gamma^T R Gamma x_bar dt along the recorded
/// consensus trajectory (trapezoid). Throws kWindowOutOfRange.
double measure_energy(const SimulationRecord& rec, const Exosystem& exo, const Matrix& gamma,
                      const Matrix& r, double t_s = 6.0);

/// Same window, integrating the agent's actual input u_i^T R u_i / 2.
double measure_input_energy(const SimulationRecord& rec, int agent, const Exosystem& exo,
                            const Matrix& r, double t_s = 6.0);

/// ||x_i(t_end) - Pi_i x_bar_i(t_end)|| per agent.
std::vector<double> transition_check(const SimulationRecord& rec, const NetworkScenario& sc);

}  // namespace ossync
