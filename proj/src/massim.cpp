#include "ossync/massim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ossync {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kExs: return "EXS";
    case Strategy::kOss: return "OSS";
    case Strategy::kEboss: return "EBOSS";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "EXS") return Strategy::kExs;
  if (s == "OSS") return Strategy::kOss;
  if (s == "EBOSS") return Strategy::kEboss;
  throw OssError(ErrorKind::kParseError, "unknown strategy '" + std::string(s) + "'");
}

double SimulationRecord::exo_disagreement(Eigen::Index k) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < xbar.size(); ++i) {
    for (std::size_t j = i + 1; j < xbar.size(); ++j) {
      worst = std::max(worst, (xbar[i].col(k) - xbar[j].col(k)).norm());
    }
  }
  return worst;
}

ConsensusPrediction consensus_trajectory(const NetworkScenario& sc) {
  const Matrix& l = sc.laplacian;
  const auto n = l.rows();
  if (n == 0 || l.cols() != n) throw OssError(ErrorKind::kDimensionMismatch, "Laplacian shape");
  if (static_cast<std::size_t>(n) != sc.agents.size()) {
    throw OssError(ErrorKind::kDimensionMismatch, "Laplacian size differs from agent count");
  }
  if (eig(l).count_near(Complex(0.0, 0.0), 1e-8) != 1) {
    throw OssError(ErrorKind::kNoSpanningTree, "Laplacian zero eigenvalue is not simple");
  }
  Eigen::JacobiSVD<Matrix> svd(l.transpose(), Eigen::ComputeFullV);
  Vector w = svd.matrixV().col(n - 1);
  w /= w.sum();
  if ((w.array() < -1e-10).any()) {
    throw OssError(ErrorKind::kInconsistentCheck, "left null vector of L is not nonnegative");
  }
  w = w.cwiseMax(0.0);
  w /= w.sum();
  ConsensusPrediction pred;
  pred.weights = w;
  pred.xbar0 = Vector::Zero(sc.exo.order());
  for (Eigen::Index i = 0; i < n; ++i) pred.xbar0 += w(i) * sc.agents[i].xbar0;
  return pred;
}

SimulationRecord simulate(const NetworkScenario& sc, const std::vector<Matrix>& input_weights) {
  const std::size_t na = sc.agents.size();
  const auto nb = sc.exo.order();
  if (na == 0) throw OssError(ErrorKind::kInvalidArgument, "network has no agents");
  if (!(sc.h > 0.0) || !(sc.t_end > 0.0)) throw OssError(ErrorKind::kInvalidArgument, "h and t_end must be positive");
  if (sc.laplacian.rows() != static_cast<Eigen::Index>(na)) {
    throw OssError(ErrorKind::kDimensionMismatch, "Laplacian size differs from agent count");
  }
  if (sc.k_bar.rows() != sc.b_bar.cols() || sc.k_bar.cols() != nb || sc.b_bar.rows() != nb) {
    throw OssError(ErrorKind::kDimensionMismatch, "exosystem coupling gain shape");
  }

  // Stacked state [x_1; ...; x_N; x_bar_1; ...; x_bar_N].
  std::vector<Eigen::Index> off(na);
  Eigen::Index dim = 0;
  for (std::size_t i = 0; i < na; ++i) {
    const auto& ag = sc.agents[i];
    const auto n = ag.model.states();
    if (ag.x0.size() != n || ag.xbar0.size() != nb || ag.design.pi.rows() != n ||
        ag.design.pi.cols() != nb || ag.design.gamma.rows() != ag.model.inputs() ||
        ag.design.k.rows() != ag.model.inputs() || ag.design.k.cols() != n) {
      std::ostringstream os;
      os << "agent " << i + 1 << ": design or initial-state dimensions";
      throw OssError(ErrorKind::kDimensionMismatch, os.str());
    }
    off[i] = dim;
    dim += n;
  }
  const Eigen::Index exo_off = dim;
  dim += static_cast<Eigen::Index>(na) * nb;

  Matrix m = Matrix::Zero(dim, dim);
  const Matrix bk = sc.b_bar * sc.k_bar;
  for (std::size_t i = 0; i < na; ++i) {
    const auto& ag = sc.agents[i];
    const auto n = ag.model.states();
    const Eigen::Index xi = off[i];
    const Eigen::Index ei = exo_off + static_cast<Eigen::Index>(i) * nb;
    m.block(xi, xi, n, n) = ag.model.a - ag.model.b * ag.design.k;
    m.block(xi, ei, n, nb) = ag.model.b * (ag.design.k * ag.design.pi + ag.design.gamma);
    m.block(ei, ei, nb, nb) = sc.exo.a;
    for (std::size_t j = 0; j < na; ++j) {
      const double lij = sc.laplacian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (lij != 0.0) m.block(ei, exo_off + static_cast<Eigen::Index>(j) * nb, nb, nb) -= lij * bk;
    }
  }

  // RK4 step for a linear system: z+ = (I + hM + (hM)^2/2 + (hM)^3/6 + (hM)^4/24) z.
  const Matrix hm = sc.h * m;
  const Matrix hm2 = hm * hm;
  const Matrix hm3 = hm2 * hm;
  const Matrix step = Matrix::Identity(dim, dim) + hm + hm2 / 2.0 + hm3 / 6.0 + hm3 * hm / 24.0;

  const auto steps = static_cast<Eigen::Index>(std::llround(sc.t_end / sc.h)) + 1;
  Matrix z(dim, steps);
  for (std::size_t i = 0; i < na; ++i) {
    z.col(0).segment(off[i], sc.agents[i].model.states()) = sc.agents[i].x0;
    z.col(0).segment(exo_off + static_cast<Eigen::Index>(i) * nb, nb) = sc.agents[i].xbar0;
  }
  const double blowup = 1e12 * (1.0 + z.col(0).cwiseAbs().maxCoeff());
  for (Eigen::Index k = 1; k < steps; ++k) {
    z.col(k).noalias() = step * z.col(k - 1);
    if ((k & 255) == 0 || k == steps - 1) {
      const double mx = z.col(k).cwiseAbs().maxCoeff();
      if (!std::isfinite(mx) || mx > blowup) {
        std::ostringstream os;
        os << "state diverged at t = " << static_cast<double>(k) * sc.h;
        throw OssError(ErrorKind::kNonFiniteState, os.str());
      }
    }
  }

  SimulationRecord rec;
  rec.h = sc.h;
  rec.time = Vector::LinSpaced(steps, 0.0, static_cast<double>(steps - 1) * sc.h);
  const ConsensusPrediction pred = consensus_trajectory(sc);
  rec.consensus.resize(nb, steps);
  for (Eigen::Index k = 0; k < steps; ++k) rec.consensus.col(k) = flow(sc.exo, pred.xbar0, rec.time(k));
  const Matrix ybar = sc.exo.c * rec.consensus;

  for (std::size_t i = 0; i < na; ++i) {
    const auto& ag = sc.agents[i];
    const auto n = ag.model.states();
    rec.x.push_back(z.block(off[i], 0, n, steps));
    rec.xbar.push_back(z.block(exo_off + static_cast<Eigen::Index>(i) * nb, 0, nb, steps));
    rec.y.push_back(ag.model.c * rec.x.back());
    rec.u.push_back(-ag.design.k * (rec.x.back() - ag.design.pi * rec.xbar.back()) +
                    ag.design.gamma * rec.xbar.back());
    rec.error.push_back(rec.y.back() - ybar);
    const Matrix r = i < input_weights.size() ? input_weights[i]
                                              : Matrix::Identity(ag.model.inputs(), ag.model.inputs());
    Vector cum(steps);
    cum(0) = 0.0;
    const Matrix& u = rec.u.back();
    double prev = 0.5 * u.col(0).dot(r * u.col(0));
    for (Eigen::Index k = 1; k < steps; ++k) {
      const double cur = 0.5 * u.col(k).dot(r * u.col(k));
      cum(k) = cum(k - 1) + 0.5 * sc.h * (prev + cur);
      prev = cur;
    }
    rec.cumulative_energy.push_back(std::move(cum));
  }
  return rec;
}

BoundReport verify_error_bounds(const Matrix& error, const Exosystem& exo, const Vector& epsilon,
                                int boundary_samples, int time_points) {
  if (error.cols() != exo.order() || epsilon.size() != error.rows()) {
    throw OssError(ErrorKind::kDimensionMismatch, "verify_error_bounds dimensions");
  }
  if (time_points < 2) throw OssError(ErrorKind::kInvalidArgument, "need at least two time points");
  BoundReport rep;
  const auto p = error.rows();
  rep.sup = Vector::Zero(p);
  rep.epsilon = epsilon;
  rep.worst_x0.assign(p, exo.boundary);
  rep.worst_t.assign(p, 0.0);
  const auto samples = sample_boundary(exo, boundary_samples);
  rep.boundary_samples = static_cast<int>(samples.size());
  rep.time_points = time_points;
  const double dt = exo.period / (time_points - 1);
  for (const auto& x0 : samples) {
    for (int k = 0; k < time_points; ++k) {
      const double t = k * dt;
      const Vector e = error * flow(exo, x0, t);
      for (Eigen::Index j = 0; j < p; ++j) {
        if (std::abs(e(j)) > rep.sup(j)) {
          rep.sup(j) = std::abs(e(j));
          rep.worst_x0[j] = x0;
          rep.worst_t[j] = t;
        }
      }
    }
  }
  rep.violation = (rep.sup - epsilon).cwiseMax(0.0);
  rep.pass = (rep.sup.array() <= epsilon.array() + 1e-6).all();
  return rep;
}

BoundReport verify_error_bounds(const Matrix& c, const Matrix& pi, const Exosystem& exo,
                                const Vector& epsilon, int boundary_samples, int time_points) {
  return verify_error_bounds(Matrix(c * pi - exo.c), exo, epsilon, boundary_samples, time_points);
}

namespace {

std::pair<Eigen::Index, Eigen::Index> window(const SimulationRecord& rec, double t_s, double period) {
  if (rec.steps() < 2) throw OssError(ErrorKind::kWindowOutOfRange, "empty record");
  const double t_last = rec.time(rec.steps() - 1);
  if (t_s < 0.0 || t_s + period > t_last + 1e-9) {
    std::ostringstream os;
    os << "window [" << t_s << ", " << t_s + period << "] outside [0, " << t_last << "]";
    throw OssError(ErrorKind::kWindowOutOfRange, os.str());
  }
  const auto k0 = static_cast<Eigen::Index>(std::llround(t_s / rec.h));
  return {k0, static_cast<Eigen::Index>(std::floor((rec.time(k0) + period) / rec.h + 1e-9))};
}

// Trapezoid from sample k0 over `period`; the last, partial interval uses a
// linearly interpolated end value.
template <typename F>
double trapezoid(const SimulationRecord& rec, Eigen::Index k0, Eigen::Index k1, double period, F&& f) {
  k1 = std::min(k1, rec.steps() - 1);
  double s = 0.0;
  double prev = f(k0);
  for (Eigen::Index k = k0 + 1; k <= k1; ++k) {
    const double cur = f(k);
    s += 0.5 * rec.h * (prev + cur);
    prev = cur;
  }
  const double rest = rec.time(k0) + period - rec.time(k1);
  if (rest > 1e-12 && k1 + 1 < rec.steps()) {
    const double next = f(k1 + 1);
    const double end = prev + (next - prev) * rest / rec.h;
    s += 0.5 * rest * (prev + end);
  }
  return s;
}

}  // namespace

double measure_energy(const SimulationRecord& rec, const Exosystem& exo, const Matrix& gamma,
                      const Matrix& r, double t_s) {
  const auto [k0, k1] = window(rec, t_s, exo.period);
  const Matrix w = gamma.transpose() * r * gamma;
  return 0.5 * trapezoid(rec, k0, k1, exo.period, [&](Eigen::Index k) {
    return rec.consensus.col(k).dot(w * rec.consensus.col(k));
  });
}

double measure_input_energy(const SimulationRecord& rec, int agent, const Exosystem& exo,
                            const Matrix& r, double t_s) {
  if (agent < 0 || static_cast<std::size_t>(agent) >= rec.u.size()) {
    throw OssError(ErrorKind::kInvalidArgument, "agent index");
  }
  const auto [k0, k1] = window(rec, t_s, exo.period);
  const Matrix& u = rec.u[agent];
  return 0.5 * trapezoid(rec, k0, k1, exo.period, [&](Eigen::Index k) { return u.col(k).dot(r * u.col(k)); });
}

std::vector<double> transition_check(const SimulationRecord& rec, const NetworkScenario& sc) {
  std::vector<double> out;
  const auto last = rec.steps() - 1;
  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    out.push_back((rec.x[i].col(last) - sc.agents[i].design.pi * rec.xbar[i].col(last)).norm());
  }
  return out;
}

}  // namespace ossync
