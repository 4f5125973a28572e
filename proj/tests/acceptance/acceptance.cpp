// Acceptance run: one PASS/FAIL line per criterion on the bundled ring scenario
// and the randomised suites. Exit status is nonzero when any criterion other
// than the documented expected failure (10) is red, or when 10 turns green.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "../support.hpp"
#include "ossync/conic.hpp"
#include "ossync/report.hpp"
#include "ossync/scenario.hpp"

namespace ossync {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.6g", v); }

struct Outcome {
  bool pass = false;
  std::string detail;
  bool analysis_holds = true;  // expected failures: the documented explanation still applies
};

struct Ring {
  Scenario sc;
  NetworkDesign nd;
  NetworkScenario ns;
  SimulationRecord rec;
  std::vector<EnergyRow> energy;
  double seconds = 0.0;
};

Ring& ring() {
  static Ring r = [] {
    Ring x;
    const auto t0 = Clock::now();
    x.sc = load_scenario(OSSYNC_SCENARIO_DIR "/ring5_heterogeneous.json");
    x.nd = design_network(x.sc);
    x.ns = assemble_network(x.sc, x.nd);
    x.rec = simulate(x.ns);
    x.energy = energy_rows(x.sc, x.nd, x.rec);
    x.seconds = seconds_since(t0);
    return x;
  }();
  return r;
}

bool within(double v, double ref, double rel) { return std::abs(v - ref) <= rel * std::abs(ref); }

Outcome c1() {
  Ring& r = ring();
  const EnergyRow& a3 = r.energy[2];
  const EnergyRow& a4 = r.energy[3];
  const bool ok = within(a4.closed_form, 21.8, 0.02) && within(a4.simulated, 21.8, 0.02) &&
                  within(a3.closed_form, 41.1, 0.02) && within(a3.simulated, 41.1, 0.02) && r.seconds < 10.0;
  return {ok, "J4 = " + g(a4.closed_form) + " closed / " + g(a4.simulated) + " simulated, J3 = " +
                  g(a3.closed_form) + " / " + g(a3.simulated) + ", full pipeline " + fmt("%.2f", r.seconds) + " s"};
}

Outcome c2() {
  Ring& r = ring();
  const double j3 = r.energy[2].closed_form, j4 = r.energy[3].closed_form, j5 = r.energy[4].closed_form;
  const double j5s = r.energy[4].simulated;
  const bool ok = j3 > j5 && j5 > j4 && j5 >= 34.0 && j5 <= 38.0 && j5s >= 34.0 && j5s <= 38.0 && r.seconds < 300.0;
  return {ok, "J3 = " + g(j3) + " > J5 = " + g(j5) + " > J4 = " + g(j4) + " (J5 simulated " + g(j5s) + ")"};
}

Outcome c3() {
  const AgentDesign& d = ring().nd.agents[4];
  const EbossDesign& e = *d.eboss;
  const double improvement = 1.0 - e.objective / e.initial_objective;
  const bool ok = e.history.termination == Termination::kDeltaRelBelowThreshold && e.history.iterations <= 300 &&
                  e.objective <= 3.95 && improvement >= 0.02 && std::abs(e.q(0, 1)) > 0.0;
  return {ok, std::string(to_string(e.history.termination)) + " after " + std::to_string(e.history.iterations) +
                  " iterations, objective " + g(e.objective) + ", diagonal start " + g(e.initial_objective) +
                  " (improvement " + fmt("%.1f", 100 * improvement) + " %), Q* = [[" + g(e.q(0, 0)) + ", " +
                  g(e.q(0, 1)) + "], [" + g(e.q(1, 0)) + ", " + g(e.q(1, 1)) + "]]"};
}

Outcome c4() {
  Ring& r = ring();
  const AgentDesign& d = r.nd.agents[1];
  const BoundReport rep = verify_error_bounds(d.error, r.sc.exo, r.sc.agents[1].epsilon, 64, 2000);
  const double viol = rep.violation.maxCoeff();
  const bool ok = d.eboss && d.eboss->evaluation.feasible && d.eboss->certificate.holds &&
                  within(d.objective, 263.59, 0.10) && rep.pass && viol <= 1e-6;
  return {ok, "objective " + g(d.objective) + " (reference 263.59), sup |e_j| = (" + g(rep.sup(0)) + ", " +
                  g(rep.sup(1)) + ") vs eps (0.37, 0.28), max violation " + g(viol)};
}

Outcome c5() {
  Ring& r = ring();
  const double j1 = r.energy[0].closed_form, j2 = r.energy[1].closed_form;
  const Vector& xb0 = r.nd.consensus.xbar0;

  AgentSpec forced = r.sc.agents[1];
  forced.strategy = Strategy::kExs;
  forced.epsilon = Vector();
  forced.q = Matrix();
  const double j2_exs = design_agent(forced, r.sc.exo, xb0).energy;

  AgentSpec relaxed = r.sc.agents[0];
  relaxed.strategy = Strategy::kEboss;
  relaxed.epsilon = r.sc.agents[1].epsilon;
  const double j1_eboss = design_agent(relaxed, r.sc.exo, xb0).energy;

  const double extra = j2_exs / j2 - 1.0;
  const double saving = 1.0 - j1_eboss / j1;
  const bool ok = j1 >= 750.0 && j1 <= 780.0 && std::abs(j2 - j1) / j1 <= 0.05 && extra >= 0.25 && saving >= 0.20;
  return {ok, "J1 = " + g(j1) + ", J2 = " + g(j2) + " (" + fmt("%.2f", 100 * std::abs(j2 - j1) / j1) +
                  " % apart); EXS agent 2 " + g(j2_exs) + " (+" + fmt("%.1f", 100 * extra) + " %); EBOSS agent 1 " +
                  g(j1_eboss) + " (-" + fmt("%.1f", 100 * saving) + " %)"};
}

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix m = testing::random_matrix(rng, n, n);
  return m * m.transpose() + 0.5 * Matrix::Identity(n, n);
}

struct Instance {
  AgentModel agent;
  Exosystem exo;
  Matrix q, r;
};

const std::vector<Instance>& suite() {
  static const std::vector<Instance> s = [] {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> outs(1, 3);
    std::vector<Instance> v;
    while (v.size() < 100) {
      const int p = outs(rng);
      Instance in{testing::random_agent(rng, p), testing::random_exosystem(rng, p), random_spd(rng, p), Matrix()};
      in.r = random_spd(rng, in.agent.inputs());
      v.push_back(std::move(in));
    }
    return v;
  }();
  return s;
}

Outcome c6() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (const Instance& in : suite()) {
    const OssSolution s = solve_oss(in.agent, in.exo, in.q, in.r);
    const StationaryWeight w = stationary_weight(s.pi, s.gamma, in.agent.c, in.q, in.r, in.exo);
    const Matrix gram = w.g.transpose() * w.g;
    const Vector x0 = testing::random_unit_state(rng, in.exo);
    const double quad = testing::integrate(
        [&](double t) {
          const Vector x = flow(in.exo, x0, t);
          return x.dot(gram * x);
        },
        0.0, in.exo.period, 1e-12);
    const double closed = in.exo.period * x0.dot(w.averaged_gram * x0);
    worst = std::max(worst, std::abs(closed - quad) / std::abs(quad));
  }
  return {worst <= 1e-6, "100 instances, worst relative error " + g(worst)};
}

Outcome c7() {
  double worst = 0.0, worst_res = 0.0;
  for (const Instance& in : suite()) {
    const OssSolution s = solve_oss(in.agent, in.exo, in.q, in.r);
    const StationaryPair op1 = solve_op1(in.agent, in.exo, in.q, in.r);
    worst = std::max({worst, (s.pi - op1.pi).cwiseAbs().maxCoeff(), (s.gamma - op1.gamma).cwiseAbs().maxCoeff()});
    worst_res = std::max(worst_res, oss_residual(in.agent, in.exo, s));
  }
  return {worst <= 1e-7 && worst_res <= 1e-9,
          "100 instances, max |Thm1 - OP1| " + g(worst) + ", max Hamiltonian-Sylvester residual " + g(worst_res)};
}

Outcome c8() {
  Ring& r = ring();
  bool hurwitz = true;
  double worst_abscissa = -1e300;
  for (const Complex& lam : eig(r.nd.laplacian).values) {
    if (std::abs(lam) < 1e-9) continue;
    const CMatrix m = r.sc.exo.a.cast<Complex>() - lam * (r.sc.b_bar * r.nd.sync.gain).cast<Complex>();
    hurwitz = hurwitz && is_hurwitz(m);
    for (const Complex& z : eig(real_embedding(m)).values) worst_abscissa = std::max(worst_abscissa, z.real());
  }
  const auto last = r.rec.steps() - 1;
  const double dis = r.rec.exo_disagreement(last);
  double cons = 0.0;
  for (const Matrix& xb : r.rec.xbar) cons = std::max(cons, (xb.col(last) - r.rec.consensus.col(last)).norm());
  const bool ok = hurwitz && r.nd.sync.sigma == 0.138 && dis < 1e-6 && cons <= 1e-6;
  return {ok, "sigma " + g(r.nd.sync.sigma) + ", spectral abscissa of A - lambda_i B K over i >= 2: " +
                  g(worst_abscissa) + "; at t = " + g(r.rec.time(last)) + " s disagreement " + g(dis) +
                  ", consensus error " + g(cons)};
}

struct SdpCase {
  std::string name;
  SdpProblem problem;
  bool feasible;
  double objective;
};

AffineMatrix constant(double v) { return AffineMatrix(Matrix::Constant(1, 1, v)); }

std::vector<SdpCase> sdp_set() {
  std::vector<SdpCase> v;
  std::mt19937_64 rng(9);
  for (int n = 2; n <= 7; ++n) {
    const Matrix s = symmetrize(testing::random_matrix(rng, n, n));
    SdpBuilder sb;
    const AffineMatrix t = sb.scalar("t");
    sb.add_lmi(Matrix::Identity(n, n) * t - AffineMatrix(s));
    sb.minimize(t);
    v.push_back({"lambda_max n=" + std::to_string(n), sb.build(), true,
                 Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().maxCoeff()});
  }
  for (int n = 2; n <= 4; ++n) {
    const Matrix s = symmetrize(testing::random_matrix(rng, n, n));
    SdpBuilder sb;
    const AffineMatrix t = sb.scalar("t");
    sb.add_lmi(AffineMatrix(s) - Matrix::Identity(n, n) * t);
    sb.minimize(-t);
    v.push_back({"lambda_min n=" + std::to_string(n), sb.build(), true,
                 -Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().minCoeff()});
  }
  // min x s.t. [[x, a], [a, c]] >= 0  ->  a^2 / c.
  for (auto [a, c] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {0.3, 3.0}, {-1.5, 2.0}}) {
    SdpBuilder sb;
    const AffineMatrix x = sb.scalar("x");
    sb.add_lmi(AffineMatrix::blocks2x2(x, constant(a), constant(a), constant(c)));
    sb.minimize(x);
    v.push_back({"schur 2x2 a=" + g(a) + " c=" + g(c), sb.build(), true, a * a / c});
  }
  {
    // min x + y s.t. [[x, 1], [1, y]] >= 0  ->  2.
    SdpBuilder sb;
    const AffineMatrix x = sb.scalar("x"), y = sb.scalar("y");
    sb.add_lmi(AffineMatrix::blocks2x2(x, constant(1), constant(1), y));
    sb.minimize(x + y);
    v.push_back({"x + y with xy >= 1", sb.build(), true, 2.0});
  }
  for (int n : {3, 4}) {
    // min trace X s.t. X >= A, X >= 0  ->  sum of the positive eigenvalues of A.
    const Matrix a = symmetrize(testing::random_matrix(rng, n, n));
    SdpBuilder sb;
    const AffineMatrix x = sb.symmetric(n, "X");
    sb.add_lmi(x);
    sb.add_lmi(x - AffineMatrix(a));
    sb.minimize(x.trace());
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues();
    v.push_back({"trace cover n=" + std::to_string(n), sb.build(), true, ev.cwiseMax(0.0).sum()});
  }
  {
    SdpBuilder sb;
    const AffineMatrix x = sb.symmetric(3, "X");
    sb.add_lmi(x - AffineMatrix(Matrix::Identity(3, 3)));
    sb.add_le(x.trace(), constant(1));
    sb.minimize(x.trace());
    v.push_back({"X >= I, trace X <= 1", sb.build(), false, 0.0});
  }
  {
    SdpBuilder sb;
    const AffineMatrix x = sb.scalar("x");
    sb.add_le(x, constant(-1));
    sb.add_le(constant(1), x);
    sb.minimize(x);
    v.push_back({"x <= -1, x >= 1", sb.build(), false, 0.0});
  }
  {
    SdpBuilder sb;
    const AffineMatrix x = sb.scalar("x");
    sb.add_lmi(AffineMatrix::blocks2x2(x, constant(1), constant(1), -x));
    sb.minimize(x);
    v.push_back({"[[x, 1], [1, -x]] >= 0", sb.build(), false, 0.0});
  }
  {
    SdpBuilder sb;
    const AffineMatrix x = sb.symmetric(2, "X");
    sb.add_lmi(x);
    sb.add_le(x.entry(0, 0), constant(-1));
    sb.minimize(x.trace());
    v.push_back({"X >= 0, X_11 <= -1", sb.build(), false, 0.0});
  }
  return v;
}

Outcome c9() {
  const auto set = sdp_set();
  int correct = 0;
  double worst_obj = 0.0, worst_gap = 0.0;
  std::string bad;
  for (const SdpCase& c : set) {
    const SdpSolution s = solve(c.problem);
    bool ok;
    if (c.feasible) {
      const double err = std::abs(s.objective - c.objective);
      worst_obj = std::max(worst_obj, err);
      worst_gap = std::max(worst_gap, std::abs(s.gap));
      ok = s.optimal() && err <= 1e-6 && std::abs(s.gap) <= 1e-7;
    } else {
      ok = s.status == SdpStatus::kInfeasible;
    }
    if (ok) {
      ++correct;
    } else {
      bad += " [" + c.name + ": " + std::string(to_string(s.status)) + "]";
    }
  }
  return {correct == static_cast<int>(set.size()),
          std::to_string(correct) + "/" + std::to_string(set.size()) + " correct, worst objective error " +
              g(worst_obj) + ", worst duality gap " + g(worst_gap) + bad};
}

double spectral_norm(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()(0); }

Outcome c10() {
  Ring& r = ring();
  const AgentSpec& a1 = r.sc.agents[0];
  const auto p = a1.model.outputs();
  std::vector<double> errs;
  std::string trail;
  for (double q = 1.0; q <= 1e6; q *= 10.0) {
    const OssSolution s = solve_oss(a1.model, r.sc.exo, q * Matrix::Identity(p, p), a1.r);
    errs.push_back(spectral_norm(a1.model.c * s.pi - r.sc.exo.c));
    trail += (trail.empty() ? "" : ", ") + fmt("q=1e%.0f: ", std::log10(q)) + g(errs.back());
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < errs.size(); ++k) decreasing = decreasing && errs[k] < errs[k - 1];
  const double at_1e4 = errs[4];
  // Far in the limit the error falls like c / q.
  const double c = errs.back() * 1e6;
  return {decreasing && at_1e4 < 1e-3,
          "||C Pi - C_bar||_2 " + trail + "; strictly decreasing: " + (decreasing ? "yes" : "no") +
              "; decay ~ " + g(c) + " / q, so the 1e-3 level is first reached near q = " + g(c / 1e-3) +
              " rather than 1e4 (agent 1 is EXS-solvable, residual " + g(r.nd.agents[0].exs_residual) + ")",
          decreasing && at_1e4 > 1e-3 && at_1e4 < 2e-2};
}

Outcome c11() {
  Ring& r = ring();
  bool no_solution = false;
  double residual = 0.0;
  try {
    solve_exs(r.sc.agents[4].model, r.sc.exo);
  } catch (const NoSolutionError& e) {
    no_solution = true;
    residual = e.residual();
  }
  const AgentDesign& d = r.nd.agents[4];
  const BoundReport rep = verify_error_bounds(d.error, r.sc.exo, r.sc.agents[4].epsilon, 64, 2000);
  const bool ok = no_solution && d.eboss && d.eboss->evaluation.feasible && d.eboss->certificate.holds && rep.pass;
  return {ok, std::string("solve_exs: ") + (no_solution ? "NoSolution" : "returned a solution") +
                  " (least-squares residual " + g(residual) + "); EBOSS design sup |e_j| = (" + g(rep.sup(0)) +
                  ", " + g(rep.sup(1)) + ") within eps (1.7, 2.4)"};
}

}  // namespace
}  // namespace ossync

int main() {
  using namespace ossync;
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
    bool expected_failure;
  };
  const std::vector<Criterion> criteria = {
      {1, "deterministic energies J4, J3", c1, false},
      {2, "energy ordering J3 > J5 > J4", c2, false},
      {3, "agent-5 path following", c3, false},
      {4, "agent-2 bounded design", c4, false},
      {5, "group-A energy claims", c5, false},
      {6, "period-average identity suite", c6, false},
      {7, "Hamiltonian vs OP1 equivalence", c7, false},
      {8, "exosystem synchronisation on the ring", c8, false},
      {9, "SDP analytic test set", c9, false},
      {10, "EXS limit of OSS", c10, true},
      {11, "under-actuated agent 5", c11, false},
  };
  int unexpected = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what(), false};
    }
    const double dt = seconds_since(t0);
    std::string note;
    if (c.expected_failure) {
      note = o.pass ? "  [expected failure passed: update the analysis]" : "  [known failure, see README]";
      if (!o.pass && !o.analysis_holds) note = "  [failed for an undocumented reason]";
      if (o.pass || !o.analysis_holds) ++unexpected;
    } else if (!o.pass) {
      ++unexpected;
    }
    std::printf("%s  %2d  %s: %s  (%.2f s)%s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), dt,
                note.c_str());
    std::fflush(stdout);
  }
  std::printf("%s\n", unexpected == 0 ? "acceptance: as expected" : "acceptance: UNEXPECTED RESULTS");
  return unexpected == 0 ? 0 : 1;
}
