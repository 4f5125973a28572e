#pragma once

#include <vector>

#include "ossync/exocore.hpp"
#include "ossync/matkit.hpp"

namespace ossync {

/// (A, B, C) of one heterogeneous agent.
struct AgentModel {
  Matrix a;
  Matrix b;
  Matrix c;

  AgentModel() = default;
  AgentModel(Matrix a_, Matrix b_, Matrix c_);

  Eigen::Index states() const { return a.rows(); }
  Eigen::Index inputs() const { return b.cols(); }
  Eigen::Index outputs() const { return c.rows(); }
};

/// Stationary pair: x_i -> Pi x_bar under the feedforward Gamma x_bar.
struct StationaryPair {
  Matrix pi;
  Matrix gamma;
};

/// Exact-synchronisation pair from the regulator equations
///   Pi A_bar = A Pi + B Gamma,  C Pi = C_bar,
/// solved as one stacked least-squares system (minimum norm when the
/// solution is not unique). Throws NoSolutionError when the residual exceeds
/// 1e-7.
StationaryPair solve_exs(const AgentModel& agent, const Exosystem& exo);

/// Optimal stationary pair for tracking weight Q and input weight R.
struct OssSolution {
  Matrix pi;
  Matrix gamma;
  Matrix pi_lambda;
  Matrix hamiltonian;  // Theta = [[A, -B R^-1 B^T], [-C^T Q C, -A^T]]
  Matrix q;
  Matrix r;
};

/// Solves [Pi; Pi_l] A_bar = Theta [Pi; Pi_l] + [0; C^T Q C_bar] as a
/// Sylvester equation and sets Gamma = -R^-1 B^T Pi_l. Throws
/// kImaginaryAxisHamiltonian when Theta has eigenvalues with |Re| <= 1e-9.
OssSolution solve_oss(const AgentModel& agent, const Exosystem& exo, const Matrix& q,
                      const Matrix& r);

/// Period-averaged cost factorisation.
struct StationaryWeight {
  Matrix g;                      // [Q^1/2 (C Pi - C_bar); R^1/2 Gamma]
  Matrix averaged_gram;          // G~^T G~, block diagonal
  std::vector<Matrix> rotations; // E_j = I (x) [[0, 1], [-1, 0]] per harmonic block
};

/// Averages x_bar(t)^T M x_bar(t) over one period of the exosystem:
/// constant block kept, harmonic block j replaced by (M_j + E_j^T M_j E_j) / 2,
/// cross blocks dropped. Then T x0^T avg(M) x0 is the integral over a period.
Matrix period_average(const Matrix& m, const Exosystem& exo);

StationaryWeight stationary_weight(const Matrix& pi, const Matrix& gamma, const Matrix& c,
                                   const Matrix& q, const Matrix& r, const Exosystem& exo);

/// Minimises trace((C Pi - C_bar)^T Q (C Pi - C_bar) + Gamma^T R Gamma)
/// subject to Pi A_bar = A Pi + B Gamma through its KKT system. Throws
/// kSingularKkt.
StationaryPair solve_op1(const AgentModel& agent, const Exosystem& exo, const Matrix& q,
                         const Matrix& r);

/// J_u = 1/2 int_0^T x_bar^T Gamma^T R Gamma x_bar dt, in closed form.
double stationary_input_energy(const Matrix& gamma, const Matrix& r, const Exosystem& exo,
                               const Vector& x0);

struct StabilizerGain {
  Matrix k;
  Matrix closed_loop;  // A - B K
};

/// LQR gain K = Ru^-1 B^T P.
StabilizerGain design_stabilizer(const AgentModel& agent, const Matrix& qx, const Matrix& ru);

/// Residual of [Pi; Pi_l] A_bar - Theta [Pi; Pi_l] - [0; C^T Q C_bar] (inf-norm).
double oss_residual(const AgentModel& agent, const Exosystem& exo, const OssSolution& sol);

/// Throws kInvalidArgument unless m is symmetric with min eigenvalue > tol.
void require_positive_definite(const Matrix& m, const char* name, double tol = 1e-10);

}  // namespace ossync
