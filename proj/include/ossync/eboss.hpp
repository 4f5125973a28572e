#pragma once

// Error-bounded optimal stationary synchronisation: Q is tuned so that the
// optimal stationary pair (Pi, Gamma) keeps every output error below eps_j on
// the whole invariant initial-state set, with minimal trace(Gamma^T R Gamma).

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ossync/conic.hpp"
#include "ossync/exocore.hpp"
#include "ossync/oss_synth.hpp"

namespace ossync {

struct EbossOptions {
  double delta_margin = 1e-8;  // strict LMIs become >= delta I
  double delta_rel_min = 1e-7;
  int k_max = 300;
  double gamma = 1.5;          // trust-region growth on accept
  double shrink = 0.9;         // trust-region shrink on reject
  double alpha0 = 0.2;
  double alpha_max = std::numeric_limits<double>::infinity();
  // Tighten the bounds inside the linearised step by a learned second-order
  // estimate so the exact check at Q + dQ is not lost to linearisation error.
  bool adaptive_backoff = true;
  double backoff_cap = 0.5;
  SdpOptions sdp;
};

struct EbossSpec {
  AgentModel agent;
  Exosystem exo;
  Matrix r;
  Vector epsilon;
  EbossOptions options;

  EbossSpec() = default;
  EbossSpec(AgentModel agent_, Exosystem exo_, Matrix r_, Vector epsilon_, EbossOptions options_ = {});
};

/// OP 2 at fixed Q. The remaining SDP is solved as "minimise t subject to
/// X_jj <= t eps_j^2"; the bounds hold iff t* <= 1, and t* doubles as a
/// continuous measure of bound tightness.
struct Op2Evaluation {
  bool feasible = false;
  double bound_ratio = 0.0;  // t*
  Matrix q;
  Matrix pi;
  Matrix pi_lambda;
  Matrix gamma;
  double objective = 0.0;    // trace(Gamma^T R Gamma)
  Vector p_coeffs;
  Matrix p;
  Matrix x;
  Matrix error;              // C Pi - C_bar
};

Op2Evaluation evaluate_op2_at_q(const EbossSpec& spec, const Matrix& q);

struct OperatingPoint {
  int k = 0;
  Matrix q;
  Matrix pi;
  Matrix gamma;
  double objective = 0.0;
  double alpha = 0.0;       // alpha^k, after adaptation
  double step_norm = 0.0;   // ||dQ*||_2 proposed at this iteration
  double delta_rel = 0.0;
  double bound_ratio = 0.0; // t* at the proposed Q
  double backoff = 0.0;     // kappa used in the step
  bool accepted = false;
};

enum class Termination { kDeltaRelBelowThreshold, kMaxIterations, kStalledStep };

std::string_view to_string(Termination t);

struct PathHistory {
  std::vector<OperatingPoint> points;  // points[0] is the starting point
  Termination termination = Termination::kMaxIterations;
  int iterations = 0;
  int accepted = 0;

  /// k, accepted, objective, alpha, dq_norm, delta_rel
  void write_csv(std::ostream& os) const;
};

struct Op3Step {
  Matrix dq;
  double predicted_objective = 0.0;
  SdpSolution sdp;
};

/// OP 3: linearised step around (Q, Pi) with trust radius alpha. Output bounds
/// inside the step use bound_scale * eps_j^2. Throws kStalledStep when the LMI
/// program has no solution (typically alpha * lambda_min(Q) below the margin).
Op3Step op3_step(const EbossSpec& spec, const Matrix& q, const Matrix& pi, double alpha,
                 double bound_scale = 1.0);

struct BoundCertificate {
  std::vector<double> min_eigenvalues;  // per output j
  bool holds = false;
};

/// Reassembles [[P, E^T e_j], [e_j^T E, eps_j^2]] for every j and checks it
/// by eigenvalues (tolerance 1e-9 relative).
BoundCertificate certify_bounds(const EbossSpec& spec, const Op2Evaluation& ev);

struct EbossDesign {
  Matrix q;
  Matrix pi;
  Matrix gamma;
  double objective = 0.0;
  Op2Evaluation evaluation;
  BoundCertificate certificate;
  PathHistory history;
  Matrix q0;
  double initial_objective = 0.0;
};

/// Algorithm 1. Throws kInfeasibleInitialPoint when OP 2 is infeasible at Q0
/// and kInconsistentCheck when an accepted step violates the trust region or
/// the objective fails to decrease.
EbossDesign path_following(const EbossSpec& spec, const Matrix& q0);

/// q I with q doubling from 1 until OP 2 is feasible, then one pass shrinking
/// each diagonal entry by 0.8 while feasible. Throws kNoFeasibleQ past 1e12.
Matrix find_initial_q(const EbossSpec& spec);

struct EpsilonSearchResult {
  double beta = 0.0;
  Vector epsilon;
  Matrix q;  // diagonal start found at that beta
  int steps = 0;
};

/// Remark-style search eps = l * beta with beta lowered geometrically while a
/// diagonal Q can still meet the bounds. Returns the last feasible beta (the
/// initial one if the first step already fails).
EpsilonSearchResult epsilon_search(const EbossSpec& spec, const Vector& direction, double beta0,
                                   double factor = 0.9, int max_steps = 400);

}  // namespace ossync
