#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ossync/massim.hpp"
#include "ossync/netgraph.hpp"
#include "support.hpp"

namespace ossync {
namespace {

Exosystem ring_exo() {
  Matrix raw(2, 6);
  raw << 1, 0, 0, 1, 0, 0, 0, 1, 0.2, 1, 1, 0;
  return build_exosystem({{0.0, 2}, {0.5, 1}, {2.0, 1}}, raw, {2.5, 1.5625, 0.5, 0.25});
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

// x' = -x + u tracking a unit sinusoid, K = 1 so x - Pi x_bar decays like e^{-2t}.
NetworkScenario single_tracker(double h, double t_end) {
  const Exosystem exo = build_exosystem({{1.0, 1}}, Matrix::Ones(1, 2), {1.0});
  NetworkAgent ag;
  ag.model = AgentModel(scalar(-1), scalar(1), scalar(1));
  const StationaryPair sp = solve_exs(ag.model, exo);
  ag.design = {Strategy::kExs, sp.pi, sp.gamma, scalar(1)};
  ag.x0 = scalar(0.7);
  ag.xbar0 = exo.boundary;
  NetworkScenario sc;
  sc.laplacian = Matrix::Zero(1, 1);
  sc.exo = exo;
  sc.b_bar = Matrix::Identity(2, 2);
  sc.k_bar = Matrix::Zero(2, 2);
  sc.agents = {ag};
  sc.h = h;
  sc.t_end = t_end;
  return sc;
}

double tracker_error(double h) {
  const NetworkScenario sc = single_tracker(h, 2.0);
  const SimulationRecord rec = simulate(sc);
  const auto& ag = sc.agents[0];
  double err = 0.0;
  for (Eigen::Index k = 0; k < rec.steps(); ++k) {
    const double t = rec.time(k);
    const Vector xb = flow(sc.exo, ag.xbar0, t);
    const Vector ref = ag.design.pi * xb + std::exp(-2.0 * t) * (ag.x0 - ag.design.pi * ag.xbar0);
    err = std::max({err, (rec.x[0].col(k) - ref).norm(), (rec.xbar[0].col(k) - xb).norm()});
  }
  return err;
}

TEST(MassimTest, Rk4FourthOrder) {
  const double e1 = tracker_error(0.1);
  const double e2 = tracker_error(0.05);
  const double e3 = tracker_error(0.025);
  EXPECT_NEAR(std::log2(e1 / e2), 4.0, 0.3);
  EXPECT_NEAR(std::log2(e2 / e3), 4.0, 0.3);
  EXPECT_LT(tracker_error(1e-3), 1e-12);
}

NetworkScenario chain(const Exosystem& exo, std::mt19937_64& rng) {
  NetworkScenario sc;
  sc.laplacian = laplacian(DiGraph(2, {{0, 1}}));
  sc.exo = exo;
  sc.b_bar = Matrix::Identity(exo.order(), exo.order());
  sc.k_bar = sync_gain(exo.a, sc.b_bar, 0.5, sc.laplacian).gain;
  for (int i = 0; i < 2; ++i) {
    NetworkAgent ag;
    StationaryPair sp;
    for (bool ok = false; !ok;) {
      ag.model = testing::random_agent(rng, exo.outputs());
      try {
        sp = solve_exs(ag.model, exo);
        ok = true;
      } catch (const OssError&) {
      }
    }
    ag.design = {Strategy::kExs, sp.pi, sp.gamma, Matrix::Zero(ag.model.inputs(), ag.model.states())};
    ag.x0 = testing::random_matrix(rng, ag.model.states(), 1);
    ag.xbar0 = testing::random_unit_state(rng, exo);
    sc.agents.push_back(ag);
  }
  sc.h = 1e-3;
  sc.t_end = 30.0;
  return sc;
}

TEST(MassimTest, ChainFollowsLeader) {
  std::mt19937_64 rng(41);
  const NetworkScenario sc = chain(ring_exo(), rng);
  const ConsensusPrediction pred = consensus_trajectory(sc);
  EXPECT_NEAR(pred.weights(0), 1.0, 1e-12);
  EXPECT_NEAR(pred.weights(1), 0.0, 1e-12);
  EXPECT_LT((pred.xbar0 - sc.agents[0].xbar0).norm(), 1e-12);

  const SimulationRecord rec = simulate(sc);
  const auto last = rec.steps() - 1;
  EXPECT_GT(rec.exo_disagreement(0), 0.1);
  EXPECT_LT(rec.exo_disagreement(last), 1e-6);
  EXPECT_LT((rec.xbar[0].col(last) - flow(sc.exo, sc.agents[0].xbar0, sc.t_end)).norm(), 1e-10);
  // Outputs converge: the agents are open-loop stable and K = 0.
  for (int i = 0; i < 2; ++i) EXPECT_LT(rec.error[i].col(last).norm(), 1e-6);
  for (double r : transition_check(rec, sc)) EXPECT_LT(r, 1e-6);
}

TEST(MassimTest, LeaderEllipsoidLevelConserved) {
  std::mt19937_64 rng(42);
  const NetworkScenario sc = chain(ring_exo(), rng);
  const SimulationRecord rec = simulate(sc);
  Matrix p = Matrix::Zero(6, 6);
  for (const Matrix& b : ellipsoid_basis(sc.exo)) p += b;
  const double v0 = sc.agents[0].xbar0.dot(p * sc.agents[0].xbar0);
  for (Eigen::Index k = 0; k < rec.steps(); k += 997) {
    const Vector x = rec.xbar[0].col(k);
    EXPECT_NEAR(x.dot(p * x), v0, 1e-10);
  }
}

TEST(MassimTest, StationaryManifoldIsInvariant) {
  std::mt19937_64 rng(43);
  NetworkScenario sc = chain(ring_exo(), rng);
  sc.t_end = 10.0;
  for (auto& ag : sc.agents) {
    ag.xbar0 = sc.exo.boundary;
    ag.x0 = ag.design.pi * ag.xbar0;
    const auto n = ag.model.states();
    const auto m = ag.model.inputs();
    ag.design.k = design_stabilizer(ag.model, Matrix::Identity(n, n), Matrix::Identity(m, m)).k;
  }
  const SimulationRecord rec = simulate(sc);
  for (Eigen::Index k = 0; k < rec.steps(); k += 500) {
    EXPECT_LT(rec.exo_disagreement(k), 1e-12);
    for (int i = 0; i < 2; ++i) {
      EXPECT_LT((rec.x[i].col(k) - sc.agents[i].design.pi * rec.xbar[i].col(k)).norm(), 1e-9);
      EXPECT_LT(rec.error[i].col(k).norm(), 1e-9);
    }
  }
}

TEST(MassimTest, DisconnectedNetworkRejected) {
  std::mt19937_64 rng(44);
  NetworkScenario sc = chain(ring_exo(), rng);
  sc.laplacian = Matrix::Zero(2, 2);
  try {
    simulate(sc);
    FAIL();
  } catch (const OssError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoSpanningTree);
  }
}

TEST(MassimTest, UnstableLoopDetected) {
  NetworkScenario sc = single_tracker(1e-3, 40.0);
  sc.agents[0].design.k = scalar(-5.0);
  try {
    simulate(sc);
    FAIL();
  } catch (const OssError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFiniteState);
  }
}

TEST(MassimTest, EnergyMatchesClosedForm) {
  std::mt19937_64 rng(45);
  NetworkScenario sc = chain(ring_exo(), rng);
  sc.t_end = 20.0;
  const SimulationRecord rec = simulate(sc);
  const Vector x0 = rec.consensus.col(0);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix gamma = testing::random_matrix(rng, 2, 6);
    const Matrix r = Matrix::Identity(2, 2) * (1.0 + trial);
    // The consensus trajectory is periodic, so any window start gives the period integral.
    const double closed = stationary_input_energy(gamma, r, sc.exo, x0);
    EXPECT_NEAR(measure_energy(rec, sc.exo, gamma, r, 6.0), closed, 1e-6 * closed);
    EXPECT_NEAR(measure_energy(rec, sc.exo, gamma, r, 0.0), closed, 1e-6 * closed);
  }
  EXPECT_EQ(measure_energy(rec, sc.exo, Matrix::Zero(2, 6), Matrix::Identity(2, 2)), 0.0);
}

TEST(MassimTest, InputEnergyWindowMatchesCumulative) {
  std::mt19937_64 rng(46);
  NetworkScenario sc = chain(ring_exo(), rng);
  sc.t_end = 20.0;
  const SimulationRecord rec = simulate(sc);
  const double period = sc.exo.period;
  const auto k0 = static_cast<Eigen::Index>(std::llround(6.0 / sc.h));
  const auto k1 = static_cast<Eigen::Index>(std::llround((6.0 + period) / sc.h));
  for (int i = 0; i < 2; ++i) {
    const auto m = sc.agents[i].model.inputs();
    const double win = measure_input_energy(rec, i, sc.exo, Matrix::Identity(m, m));
    const double cum = rec.cumulative_energy[i](k1) - rec.cumulative_energy[i](k0);
    EXPECT_NEAR(win, cum, 1e-3 * (1.0 + cum));
    EXPECT_GT(win, 0.0);
  }
}

TEST(MassimTest, WindowOutOfRange) {
  const SimulationRecord rec = simulate(single_tracker(1e-3, 10.0));
  const Exosystem exo = build_exosystem({{1.0, 1}}, Matrix::Ones(1, 2), {1.0});
  for (double ts : {-1.0, 4.0}) {
    try {
      measure_energy(rec, exo, Matrix::Ones(1, 2), scalar(1), ts);
      FAIL() << ts;
    } catch (const OssError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kWindowOutOfRange);
    }
  }
  EXPECT_NO_THROW(measure_energy(rec, exo, Matrix::Ones(1, 2), scalar(1), 3.0));
}

// sup over the invariant set of |c x|: |c_k| per constant state plus the
// Euclidean norm of each harmonic pair, since the phases are independent.
double analytic_sup(const Vector& c, const Exosystem& exo) {
  double s = 0.0;
  const auto nc = exo.constant_states();
  for (Eigen::Index k = 0; k < nc; ++k) s += std::abs(c(k));
  for (Eigen::Index k = nc; k < c.size(); k += 2) s += c.segment(k, 2).norm();
  return s;
}

TEST(MassimTest, SampledSupremumMatchesAnalytic) {
  const Exosystem exo = ring_exo();
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix e = testing::random_matrix(rng, 2, 6);
    const BoundReport rep = verify_error_bounds(e, exo, Vector::Constant(2, 100.0), 64, 2000);
    EXPECT_TRUE(rep.pass);
    for (int j = 0; j < 2; ++j) {
      const double ref = analytic_sup(e.row(j).transpose(), exo);
      EXPECT_LE(rep.sup(j), ref + 1e-12);
      EXPECT_GE(rep.sup(j), 0.98 * ref);
    }
    const BoundReport twice = verify_error_bounds(Matrix(2.0 * e), exo, Vector::Constant(2, 100.0), 64, 2000);
    EXPECT_LT((twice.sup - 2.0 * rep.sup).norm(), 1e-12 * (1 + rep.sup.norm()));
  }
  Matrix aligned = Matrix::Zero(1, 6);
  aligned << 1, 1, 1, 0, 1, 0;
  const BoundReport rep = verify_error_bounds(aligned, exo, Vector::Constant(1, 4.0));
  EXPECT_NEAR(rep.sup(0), 4.0, 1e-12);
  EXPECT_TRUE(rep.pass);
  const BoundReport tight = verify_error_bounds(aligned, exo, Vector::Constant(1, 3.99));
  EXPECT_FALSE(tight.pass);
  EXPECT_NEAR(tight.violation(0), 0.01, 1e-9);
}

TEST(MassimTest, StrategyNames) {
  for (Strategy s : {Strategy::kExs, Strategy::kOss, Strategy::kEboss}) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("exs"), OssError);
}

}  // namespace
}  // namespace ossync
