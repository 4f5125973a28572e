#include "ossync/eboss.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace ossync {

EbossSpec::EbossSpec(AgentModel agent_, Exosystem exo_, Matrix r_, Vector epsilon_, EbossOptions options_)
    : agent(std::move(agent_)), exo(std::move(exo_)), r(std::move(r_)), epsilon(std::move(epsilon_)),
      options(std::move(options_)) {
  if (epsilon.size() != agent.outputs()) {
    throw OssError(ErrorKind::kDimensionMismatch, "one tolerated error per output is required");
  }
  for (Eigen::Index j = 0; j < epsilon.size(); ++j) {
    if (!(epsilon(j) > 0.0) || !std::isfinite(epsilon(j))) {
      throw OssError(ErrorKind::kInvalidArgument, "tolerated errors must be positive and finite");
    }
  }
  require_positive_definite(r, "R");
  if (r.rows() != agent.inputs()) throw OssError(ErrorKind::kDimensionMismatch, "R size");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kDeltaRelBelowThreshold: return "DeltaRelBelowThreshold";
    case Termination::kMaxIterations: return "MaxIterations";
    case Termination::kStalledStep: return "StalledStep";
  }
  return "?";
}

namespace {

AffineMatrix ellipsoid_matrix(const std::vector<Matrix>& basis, const AffineMatrix& coeffs) {
  const auto n = basis.front().rows();
  AffineMatrix p(n, n);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    p += basis[k] * coeffs.entry(static_cast<Eigen::Index>(k), 0);
  }
  return p;
}

// Constraints (12b-f) on the error E with output bounds scale_j * eps_j^2.
// Returns (p coefficients, X).
std::pair<AffineMatrix, AffineMatrix> add_bound_constraints(SdpBuilder& sb, const EbossSpec& spec,
                                                            const AffineMatrix& error,
                                                            const AffineMatrix& bound_scale) {
  const double delta = spec.options.delta_margin;
  const auto basis = ellipsoid_basis(spec.exo);
  const auto np = static_cast<Eigen::Index>(basis.size());
  const auto p_out = spec.agent.outputs();

  const AffineMatrix coeffs = sb.matrix(np, 1, "p");
  const AffineMatrix pm = ellipsoid_matrix(basis, coeffs);
  for (Eigen::Index k = 0; k < np; ++k) sb.add_lmi(coeffs.entry(k, 0), delta, "p_pos");
  const Vector& xb = spec.exo.boundary;
  sb.add_le(Matrix(xb.transpose()) * pm * Matrix(xb), AffineMatrix(Matrix::Ones(1, 1)), "boundary");

  const AffineMatrix x = sb.symmetric(p_out, "X");
  sb.add_lmi(x, delta, "X_pos");
  for (Eigen::Index j = 0; j < p_out; ++j) {
    const double e2 = spec.epsilon(j) * spec.epsilon(j);
    sb.add_le(x.entry(j, j), e2 * bound_scale, "bound");
  }
  sb.add_lmi(AffineMatrix::blocks2x2(pm, error.transpose(), error, x), delta, "coupling");
  return {coeffs, x};
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

}  // namespace

Op2Evaluation evaluate_op2_at_q(const EbossSpec& spec, const Matrix& q) {
  const OssSolution oss = solve_oss(spec.agent, spec.exo, q, spec.r);
  Op2Evaluation ev;
  ev.q = q;
  ev.pi = oss.pi;
  ev.pi_lambda = oss.pi_lambda;
  ev.gamma = oss.gamma;
  ev.objective = (oss.gamma.transpose() * spec.r * oss.gamma).trace();
  ev.error = spec.agent.c * oss.pi - spec.exo.c;

  SdpBuilder sb;
  const AffineMatrix t = sb.scalar("t");
  const auto [coeffs, x] = add_bound_constraints(sb, spec, AffineMatrix(ev.error), t);
  sb.minimize(t);
  const SdpProblem prob = sb.build();
  const SdpSolution sol = solve(prob, spec.options.sdp);
  if (!sol.optimal()) {
    std::ostringstream os;
    os << "bound evaluation SDP ended " << to_string(sol.status) << ": " << sol.message;
    throw OssError(ErrorKind::kNumericalBreakdown, os.str());
  }
  ev.bound_ratio = sol.objective;
  ev.feasible = ev.bound_ratio <= 1.0;
  ev.p_coeffs = coeffs.eval(sol.v);
  ev.p = ellipsoid_matrix(ellipsoid_basis(spec.exo), AffineMatrix(Matrix(ev.p_coeffs))).constant();
  ev.x = x.eval(sol.v);
  return ev;
}

Op3Step op3_step(const EbossSpec& spec, const Matrix& q, const Matrix& pi, double alpha,
                 double bound_scale) {
  const auto& ag = spec.agent;
  const auto& exo = spec.exo;
  const auto n = ag.states();
  const auto nb = exo.order();
  const auto p_out = ag.outputs();
  const double delta = spec.options.delta_margin;
  const Matrix rinv = spec.r.inverse();

  SdpBuilder sb;
  const AffineMatrix pv = sb.matrix(n, nb, "Pi");
  const AffineMatrix pl = sb.matrix(n, nb, "Pi_l");
  const AffineMatrix dq = sb.symmetric(p_out, "dQ");
  const AffineMatrix gamma = Matrix(-rinv * ag.b.transpose()) * pl;

  // Linearised Hamiltonian-Sylvester equation around (Q, Pi).
  const Matrix ctqc = ag.c.transpose() * q * ag.c;
  sb.add_equal(pv * exo.a, ag.a * pv - Matrix(ag.b * rinv * ag.b.transpose()) * pl);
  const Matrix err_prev = ag.c * pi - exo.c;
  sb.add_equal(pl * exo.a, -(ctqc * pv) - Matrix(ag.a.transpose()) * pl +
                               AffineMatrix(Matrix(ag.c.transpose() * q * exo.c)) -
                               (Matrix(ag.c.transpose()) * dq) * err_prev);

  const AffineMatrix error = ag.c * pv - AffineMatrix(exo.c);
  add_bound_constraints(sb, spec, error, AffineMatrix(Matrix::Constant(1, 1, bound_scale)));

  const AffineMatrix aq(Matrix(alpha * q));
  sb.add_lmi(AffineMatrix::blocks2x2(aq, dq, dq, aq), delta, "trust_region");
  sb.add_lmi(AffineMatrix(q) + dq, delta, "q_pos");

  const AffineMatrix z = sb.trace_slack(gamma, spec.r);
  sb.minimize(z.trace());

  Op3Step step;
  step.sdp = solve(sb.build(), spec.options.sdp);
  if (!step.sdp.optimal()) {
    std::ostringstream os;
    os << "linearised step SDP ended " << to_string(step.sdp.status) << " at alpha = " << alpha;
    throw OssError(ErrorKind::kStalledStep, os.str());
  }
  step.dq = symmetrize(dq.eval(step.sdp.v));
  step.predicted_objective = step.sdp.objective;
  return step;
}

BoundCertificate certify_bounds(const EbossSpec& spec, const Op2Evaluation& ev) {
  BoundCertificate cert;
  cert.holds = true;
  const auto nb = spec.exo.order();
  for (Eigen::Index j = 0; j < ev.error.rows(); ++j) {
    Matrix m(nb + 1, nb + 1);
    m.topLeftCorner(nb, nb) = ev.p;
    m.topRightCorner(nb, 1) = ev.error.row(j).transpose();
    m.bottomLeftCorner(1, nb) = ev.error.row(j);
    m(nb, nb) = spec.epsilon(j) * spec.epsilon(j);
    const double lmin = min_eig_sym(m);
    cert.min_eigenvalues.push_back(lmin);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (lmin < -1e-9 * scale) cert.holds = false;
  }
  return cert;
}

void PathHistory::write_csv(std::ostream& os) const {
  const auto old = os.precision(12);
  os << "k,accepted,objective,alpha,dq_norm,delta_rel\n";
  for (const auto& p : points) {
    os << p.k << ',' << (p.accepted ? 1 : 0) << ',' << p.objective << ',' << p.alpha << ','
       << p.step_norm << ',' << p.delta_rel << '\n';
  }
  os.precision(old);
}

EbossDesign path_following(const EbossSpec& spec, const Matrix& q0) {
  const auto& opt = spec.options;
  Op2Evaluation current;
  try {
    current = evaluate_op2_at_q(spec, q0);
  } catch (const OssError& e) {
    throw OssError(ErrorKind::kInfeasibleInitialPoint, std::string("initial Q rejected: ") + e.what());
  }
  if (!current.feasible) {
    std::ostringstream os;
    os << "OP 2 infeasible at the initial Q (bound ratio " << current.bound_ratio << ")";
    throw OssError(ErrorKind::kInfeasibleInitialPoint, os.str());
  }

  EbossDesign design;
  design.q0 = q0;
  design.initial_objective = current.objective;
  auto& hist = design.history;

  double alpha = opt.alpha0;
  double delta_rel = std::numeric_limits<double>::infinity();
  double curvature = 0.0;  // learned second-order bound growth per alpha^2

  OperatingPoint start;
  start.k = 0;
  start.q = current.q;
  start.pi = current.pi;
  start.gamma = current.gamma;
  start.objective = current.objective;
  start.alpha = alpha;
  start.delta_rel = delta_rel;
  start.bound_ratio = current.bound_ratio;
  start.accepted = true;
  hist.points.push_back(start);

  int k = 1;
  hist.termination = Termination::kMaxIterations;
  while (true) {
    if (delta_rel < opt.delta_rel_min) {
      hist.termination = Termination::kDeltaRelBelowThreshold;
      break;
    }
    if (k > opt.k_max) {
      hist.termination = Termination::kMaxIterations;
      break;
    }
    double kappa = opt.adaptive_backoff ? std::min(curvature * alpha * alpha, opt.backoff_cap) : 0.0;
    Op3Step step;
    try {
      step = op3_step(spec, current.q, current.pi, alpha, 1.0 - kappa);
    } catch (const OssError& e) {
      if (e.kind() != ErrorKind::kStalledStep) throw;
      if (kappa > 0.0) {
        kappa = 0.0;
        try {
          step = op3_step(spec, current.q, current.pi, alpha, 1.0);
        } catch (const OssError& e2) {
          if (e2.kind() != ErrorKind::kStalledStep) throw;
          hist.termination = Termination::kStalledStep;
          break;
        }
      } else {
        hist.termination = Termination::kStalledStep;
        break;
      }
    }

    const Matrix q_new = symmetrize(Matrix(current.q + step.dq));
    OperatingPoint pt;
    pt.k = k;
    pt.step_norm = spectral_norm(step.dq);
    pt.backoff = kappa;

    bool accept = false;
    Op2Evaluation trial;
    bool evaluated = false;
    try {
      trial = evaluate_op2_at_q(spec, q_new);
      evaluated = true;
    } catch (const OssError&) {
      evaluated = false;
    }
    double d = 0.0;
    if (evaluated) {
      pt.bound_ratio = trial.bound_ratio;
      const double observed = (trial.bound_ratio - (1.0 - kappa)) / (alpha * alpha);
      curvature = std::max({0.7 * curvature, 1.2 * observed, 0.0});
      d = 1.0 - trial.objective / current.objective;
      accept = trial.feasible && d > 0.0;
    }

    if (accept) {
      const double qnorm = spectral_norm(current.q);
      if (!(pt.step_norm < alpha * qnorm * (1.0 + 1e-9) + 1e-12)) {
        std::ostringstream os;
        os << "accepted step ||dQ|| = " << pt.step_norm << " outside trust radius " << alpha * qnorm;
        throw OssError(ErrorKind::kInconsistentCheck, os.str());
      }
      if (!(trial.objective < current.objective)) {
        throw OssError(ErrorKind::kInconsistentCheck, "accepted objective did not decrease");
      }
      current = std::move(trial);
      delta_rel = d;
      alpha = std::min(opt.gamma * alpha, opt.alpha_max);
      ++hist.accepted;
    } else {
      alpha *= opt.shrink;
    }
    pt.accepted = accept;
    pt.q = current.q;
    pt.pi = current.pi;
    pt.gamma = current.gamma;
    pt.objective = current.objective;
    pt.alpha = alpha;
    pt.delta_rel = delta_rel;
    hist.points.push_back(std::move(pt));
    hist.iterations = k;
    ++k;
  }

  design.q = current.q;
  design.pi = current.pi;
  design.gamma = current.gamma;
  design.objective = current.objective;
  design.evaluation = current;
  design.certificate = certify_bounds(spec, current);
  return design;
}

Matrix find_initial_q(const EbossSpec& spec) {
  const auto p = spec.agent.outputs();
  auto feasible = [&](const Matrix& q) {
    try {
      return evaluate_op2_at_q(spec, q).feasible;
    } catch (const OssError& e) {
      if (e.kind() == ErrorKind::kImaginaryAxisHamiltonian) throw;
      return false;
    }
  };
  double qs = 1.0;
  while (!feasible(qs * Matrix::Identity(p, p))) {
    qs *= 2.0;
    if (qs > 1e12) {
      throw OssError(ErrorKind::kNoFeasibleQ, "no q <= 1e12 makes the output bounds attainable");
    }
  }
  Vector d = Vector::Constant(p, qs);
  for (Eigen::Index i = 0; i < p; ++i) {
    while (true) {
      Vector trial = d;
      trial(i) *= 0.8;
      if (!feasible(Matrix(trial.asDiagonal()))) break;
      d = trial;
    }
  }
  return d.asDiagonal();
}

EpsilonSearchResult epsilon_search(const EbossSpec& spec, const Vector& direction, double beta0,
                                   double factor, int max_steps) {
  if (direction.size() != spec.agent.outputs() || (direction.array() <= 0.0).any()) {
    throw OssError(ErrorKind::kInvalidArgument, "direction must be positive, one entry per output");
  }
  if (!(factor > 0.0 && factor < 1.0) || !(beta0 > 0.0)) {
    throw OssError(ErrorKind::kInvalidArgument, "need beta0 > 0 and 0 < factor < 1");
  }
  auto attempt = [&](double beta, Matrix& q) {
    EbossSpec s = spec;
    s.epsilon = direction * beta;
    try {
      q = find_initial_q(s);
      return true;
    } catch (const OssError& e) {
      if (e.kind() == ErrorKind::kNoFeasibleQ) return false;
      throw;
    }
  };
  EpsilonSearchResult res;
  res.beta = beta0;
  res.epsilon = direction * beta0;
  Matrix q;
  if (attempt(beta0, q)) res.q = q;
  double beta = beta0;
  for (int s = 0; s < max_steps; ++s) {
    beta *= factor;
    if (!attempt(beta, q)) break;
    res.beta = beta;
    res.epsilon = direction * beta;
    res.q = q;
    res.steps = s + 1;
  }
  return res;
}

}  // namespace ossync
