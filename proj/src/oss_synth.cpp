#include "ossync/oss_synth.hpp"

#include <cmath>
#include <sstream>

namespace ossync {

namespace {

constexpr double kExsResidualTol = 1e-7;

Matrix rotation_block(int multiplicity) {
  Matrix j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  return kron(Matrix::Identity(multiplicity, multiplicity), j);
}

void check_agent_exo(const AgentModel& agent, const Exosystem& exo) {
  if (agent.outputs() != exo.outputs()) {
    throw OssError(ErrorKind::kDimensionMismatch, "agent and exosystem output counts differ");
  }
}

}  // namespace

AgentModel::AgentModel(Matrix a_, Matrix b_, Matrix c_)
    : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw OssError(ErrorKind::kDimensionMismatch, "A must be square and nonempty");
  }
  if (b.rows() != a.rows() || b.cols() == 0) {
    throw OssError(ErrorKind::kDimensionMismatch, "B must have as many rows as A");
  }
  if (c.cols() != a.rows() || c.rows() == 0) {
    throw OssError(ErrorKind::kDimensionMismatch, "C must have as many columns as A");
  }
}

void require_positive_definite(const Matrix& m, const char* name, double tol) {
  if (m.rows() != m.cols() || !is_symmetric(m, 1e-12)) {
    throw OssError(ErrorKind::kInvalidArgument, std::string(name) + " must be symmetric");
  }
  if (min_eig_sym(m) <= tol) {
    throw OssError(ErrorKind::kInvalidArgument, std::string(name) + " must be positive definite");
  }
}

StationaryPair solve_exs(const AgentModel& agent, const Exosystem& exo) {
  check_agent_exo(agent, exo);
  const auto n = agent.states();
  const auto m = agent.inputs();
  const auto p = agent.outputs();
  const auto nb = exo.order();
  const Matrix in = Matrix::Identity(n, n);
  const Matrix inb = Matrix::Identity(nb, nb);

  // Unknowns [vec(Pi); vec(Gamma)].
  Matrix sys = Matrix::Zero(n * nb + p * nb, n * nb + m * nb);
  sys.topLeftCorner(n * nb, n * nb) = kron(exo.a.transpose(), in) - kron(inb, agent.a);
  sys.topRightCorner(n * nb, m * nb) = -kron(inb, agent.b);
  sys.bottomLeftCorner(p * nb, n * nb) = kron(inb, agent.c);
  Vector rhs = Vector::Zero(sys.rows());
  rhs.tail(p * nb) = vec(exo.c);

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sys);
  const Vector z = cod.solve(rhs);
  const double residual = (sys * z - rhs).norm();
  if (!(residual <= kExsResidualTol * (1.0 + rhs.norm()))) {
    std::ostringstream os;
    os << "regulator equations unsolvable, least-squares residual " << residual;
    throw NoSolutionError(residual, os.str());
  }
  return {unvec(z.head(n * nb), n, nb), unvec(z.tail(m * nb), m, nb)};
}

OssSolution solve_oss(const AgentModel& agent, const Exosystem& exo, const Matrix& q,
                      const Matrix& r) {
  check_agent_exo(agent, exo);
  require_positive_definite(q, "Q");
  require_positive_definite(r, "R");
  const auto n = agent.states();
  const auto nb = exo.order();
  const Matrix rinv = r.inverse();

  OssSolution sol;
  sol.q = q;
  sol.r = r;
  sol.hamiltonian.resize(2 * n, 2 * n);
  sol.hamiltonian << agent.a, -agent.b * rinv * agent.b.transpose(),
      -agent.c.transpose() * q * agent.c, -agent.a.transpose();
  for (const auto& z : eig(sol.hamiltonian).values) {
    if (std::abs(z.real()) <= 1e-9) {
      std::ostringstream os;
      os << "Theta has eigenvalue " << z << " on the imaginary axis (stabilizability/detectability)";
      throw OssError(ErrorKind::kImaginaryAxisHamiltonian, os.str());
    }
  }
  Matrix rhs = Matrix::Zero(2 * n, nb);
  rhs.bottomRows(n) = -agent.c.transpose() * q * exo.c;
  const Matrix x = solve_sylvester(sol.hamiltonian, exo.a, rhs);
  sol.pi = x.topRows(n);
  sol.pi_lambda = x.bottomRows(n);
  sol.gamma = -rinv * agent.b.transpose() * sol.pi_lambda;
  return sol;
}

double oss_residual(const AgentModel& agent, const Exosystem& exo, const OssSolution& sol) {
  const auto n = agent.states();
  Matrix stacked(2 * n, exo.order());
  stacked << sol.pi, sol.pi_lambda;
  Matrix forcing = Matrix::Zero(2 * n, exo.order());
  forcing.bottomRows(n) = agent.c.transpose() * sol.q * exo.c;
  return norm_inf(stacked * exo.a - sol.hamiltonian * stacked - forcing);
}

Matrix period_average(const Matrix& m, const Exosystem& exo) {
  Matrix avg = Matrix::Zero(m.rows(), m.cols());
  for (const auto& b : exo.blocks) {
    const auto s = b.size();
    const Matrix mj = m.block(b.offset, b.offset, s, s);
    if (!b.harmonic()) {
      avg.block(b.offset, b.offset, s, s) = mj;
    } else {
      const Matrix e = rotation_block(b.multiplicity);
      avg.block(b.offset, b.offset, s, s) = 0.5 * (mj + e.transpose() * mj * e);
    }
  }
  return avg;
}

StationaryWeight stationary_weight(const Matrix& pi, const Matrix& gamma, const Matrix& c,
                                   const Matrix& q, const Matrix& r, const Exosystem& exo) {
  if (c.cols() != pi.rows() || gamma.cols() != exo.order() || pi.cols() != exo.order() ||
      q.rows() != c.rows() || r.rows() != gamma.rows()) {
    throw OssError(ErrorKind::kDimensionMismatch, "stationary_weight dimensions");
  }
  StationaryWeight w;
  w.g.resize(q.rows() + r.rows(), exo.order());
  w.g << sqrt_psd(q) * (c * pi - exo.c), sqrt_psd(r) * gamma;
  w.averaged_gram = period_average(w.g.transpose() * w.g, exo);
  for (const auto& b : exo.blocks) {
    if (b.harmonic()) w.rotations.push_back(rotation_block(b.multiplicity));
  }
  return w;
}

StationaryPair solve_op1(const AgentModel& agent, const Exosystem& exo, const Matrix& q,
                         const Matrix& r) {
  check_agent_exo(agent, exo);
  require_positive_definite(q, "Q");
  require_positive_definite(r, "R");
  const auto n = agent.states();
  const auto m = agent.inputs();
  const auto nb = exo.order();
  const auto nz = (n + m) * nb;
  const auto nc = n * nb;
  const Matrix inb = Matrix::Identity(nb, nb);

  // 1/2 z^T H z - h^T z with z = [vec(Pi); vec(Gamma)], s.t. K z = 0.
  Matrix hess = Matrix::Zero(nz, nz);
  hess.topLeftCorner(n * nb, n * nb) = kron(inb, agent.c.transpose() * q * agent.c);
  hess.bottomRightCorner(m * nb, m * nb) = kron(inb, r);
  Vector lin = Vector::Zero(nz);
  lin.head(n * nb) = vec(agent.c.transpose() * q * exo.c);
  Matrix cons(nc, nz);
  cons << kron(exo.a.transpose(), Matrix::Identity(n, n)) - kron(inb, agent.a), -kron(inb, agent.b);

  Matrix kkt = Matrix::Zero(nz + nc, nz + nc);
  kkt.topLeftCorner(nz, nz) = hess;
  kkt.topRightCorner(nz, nc) = cons.transpose();
  kkt.bottomLeftCorner(nc, nz) = cons;
  Vector rhs = Vector::Zero(nz + nc);
  rhs.head(nz) = lin;

  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) {
    throw OssError(ErrorKind::kSingularKkt, "KKT matrix of the stationary-cost program is singular");
  }
  Vector sol = lu.solve(rhs);
  sol += lu.solve(rhs - kkt * sol);
  return {unvec(sol.head(n * nb), n, nb), unvec(sol.segment(n * nb, m * nb), m, nb)};
}

double stationary_input_energy(const Matrix& gamma, const Matrix& r, const Exosystem& exo,
                               const Vector& x0) {
  if (x0.size() != exo.order() || gamma.cols() != exo.order() || r.rows() != gamma.rows()) {
    throw OssError(ErrorKind::kDimensionMismatch, "stationary_input_energy dimensions");
  }
  const Matrix avg = period_average(0.5 * gamma.transpose() * r * gamma, exo);
  return exo.period * x0.dot(avg * x0);
}

StabilizerGain design_stabilizer(const AgentModel& agent, const Matrix& qx, const Matrix& ru) {
  const Matrix p = solve_care(agent.a, agent.b, qx, ru);
  StabilizerGain s;
  s.k = ru.inverse() * agent.b.transpose() * p;
  s.closed_loop = agent.a - agent.b * s.k;
  return s;
}

}  // namespace ossync
