import math
import os
from pathlib import Path

import numpy as np
import pytest

import ossync

HERE = Path(__file__).resolve().parent
DATA = Path(os.environ.get("OSSYNC_TEST_DATA", HERE.parent / "data"))
SCENARIOS = Path(os.environ.get("OSSYNC_SCENARIO_DIR", HERE.parent.parent / "scenarios"))


def ring_exo():
    raw = np.array([[1, 0, 0, 1, 0, 0], [0, 1, 0.2, 1, 1, 0]], dtype=float)
    return ossync.build_exosystem([(0.0, 2), (0.5, 1), (2.0, 1)], raw, [2.5, 1.5625, 0.5, 0.25])


def test_exosystem_period_and_flow():
    exo = ring_exo()
    assert exo.order == 6
    assert exo.period == pytest.approx(4 * math.pi, rel=1e-12)
    assert np.allclose(exo.boundary, [1, 1, 0, 1, 0, 1])
    x0 = np.arange(1.0, 7.0)
    t = 0.7
    w, v = np.linalg.eig(exo.a)
    expected = (v @ np.diag(np.exp(w * t)) @ np.linalg.solve(v, x0)).real
    assert np.allclose(ossync.flow(exo, x0, t), expected, atol=1e-12)


def test_care_scalar():
    # a = 1, b = 1, q = 1, r = 1: p^2 - 2p - 1 = 0
    p = ossync.solve_care(np.eye(1), np.eye(1), np.eye(1), np.eye(1))
    assert p[0, 0] == pytest.approx(1 + math.sqrt(2), rel=1e-12)


def test_sylvester_and_lyapunov_residuals():
    rng = np.random.default_rng(3)
    f = rng.standard_normal((3, 3)) - 4 * np.eye(3)
    g = rng.standard_normal((2, 2))
    h = rng.standard_normal((3, 2))
    x = ossync.solve_sylvester(f, g, h)
    # Either sign convention; the residual of one of them vanishes.
    r = min(np.linalg.norm(f @ x + x @ g - h), np.linalg.norm(f @ x - x @ g - h),
            np.linalg.norm(x @ g - f @ x - h), np.linalg.norm(f @ x + x @ g + h))
    assert r < 1e-10
    q = np.eye(3)
    p = ossync.solve_lyapunov(f, q)
    assert min(np.linalg.norm(f.T @ p + p @ f + q), np.linalg.norm(f @ p + p @ f.T + q)) < 1e-10


def test_laplacian_ring():
    l = ossync.ring_laplacian(4)
    assert np.allclose(l.sum(axis=1), 0)
    assert np.allclose(np.diag(l), 1)
    assert ossync.sigma_bound(l) > 0


def test_exs_regulator_equations():
    exo = ring_exo()
    a = np.array([[-1, 0, 5], [0, 0, 1], [-5, 2, 0]], dtype=float)
    b = np.array([[2, 2], [0, 0], [1, 2]], dtype=float)
    c = np.array([[1, 0, 0], [0, 1, 0]], dtype=float)
    agent = ossync.AgentModel(a, b, c)
    sol = ossync.solve_exs(agent, exo)
    assert np.linalg.norm(sol.pi @ exo.a - a @ sol.pi - b @ sol.gamma) < 1e-9
    assert np.linalg.norm(c @ sol.pi - exo.c) < 1e-9


def test_op2_agent_two():
    a = np.array([[-1, 0, 5], [0, 0, 1], [-5, 2, 0]], dtype=float)
    b = 0.875 * np.array([[2, 2], [0, 0], [1, 2]], dtype=float)
    c = np.array([[1, 0, 0], [0, 1, 0]], dtype=float)
    spec = ossync.EbossSpec(ossync.AgentModel(a, b, c), ring_exo(), np.eye(2), np.array([0.37, 0.28]))
    ev = ossync.evaluate_op2(spec, np.diag([463.37, 426.99]))
    assert ev.feasible
    assert ev.objective == pytest.approx(263.59, rel=5e-3)
    rep = ossync.verify_error_bounds(ev.error, ring_exo(), np.array([0.37, 0.28]), 32, 500)
    assert rep.passed


def test_error_kind_and_exit_code(tmp_path):
    with pytest.raises(ossync.OssError) as info:
        ossync.design(DATA / "pair_tight.json", tmp_path)
    assert info.value.kind == "NoFeasibleQ"
    assert info.value.exit_code == 2
    with pytest.raises(ossync.OssError) as info:
        ossync.simulate(DATA / "ring3_small.json", tmp_path / "empty")
    assert info.value.exit_code == 1


def test_small_ring_pipeline(tmp_path):
    scenario = DATA / "ring3_small.json"
    sc = ossync.load_scenario(scenario)
    assert sc.agent_names == ["exact", "weighted", "bounded"]
    nd = ossync.design_network(sc)
    assert np.allclose(nd.consensus_xbar0, [1, 1, 0], atol=1e-12)
    energies = [d.energy for d in nd.agents]
    assert energies[0] == pytest.approx(math.pi / 8, rel=1e-6)
    assert energies[1] == pytest.approx(0.5 * math.pi * 25 / 121, rel=1e-6)
    assert energies[2] == pytest.approx(0.02 * math.pi, rel=1e-4)

    ossync.design(scenario, tmp_path)
    ossync.simulate(scenario, tmp_path)
    res = ossync.verify(scenario, tmp_path)
    assert res["passed"]
    ossync.report(scenario, tmp_path)
    for name in ("designs.json", "trace.csv", "energy.csv", "sync.csv", "bounds.csv", "verify.csv", "report.md"):
        assert (tmp_path / name).exists(), name


def test_bundled_ring_scenario_loads():
    sc = ossync.load_scenario(SCENARIOS / "ring5_heterogeneous.json")
    assert sc.vertices == 5
    assert sc.exo.period == pytest.approx(4 * math.pi)
