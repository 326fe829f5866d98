import numpy as np
import pytest

from conftest import random_connected_graph
from hkgame import nash
from hkgame.dynamics import GameConfig, simulate
from hkgame.graph import agent_laplacian
from hkgame.matfun import matrix_exponential
from hkgame.nash import (
    SingularBoundaryError,
    boundary_matrix,
    build_delta,
    build_H,
    costate,
    solve,
)


def k2_nash_analytic(t, t_f=1.0):
    """Agent-0 opinion for K2, x0 = (1, -1), r = b = 1.

    With x = (y, -y) the equilibrium reduces to
    y' = -2y - 2 y_f exp(-2 (t_f - t)), y(0) = 1, solved by hand.
    """
    y_f = np.exp(-2 * t_f) / (1 + (1 - np.exp(-4 * t_f)) / 2)
    y = np.exp(-2 * t) - y_f * np.exp(-2 * t - 2 * t_f) * (np.exp(4 * t) - 1) / 2
    u = -2 * y_f * np.exp(-2 * (t_f - t))
    return y, u


def test_build_delta(k2, p3, zachary):
    D = build_delta(k2)
    block = np.array([[1.0, -1.0], [-1.0, 1.0]])
    np.testing.assert_array_equal(D, np.vstack([block, block]))
    np.testing.assert_array_equal(build_delta(p3)[3:6], 0.5 * agent_laplacian(p3, 1))
    assert np.max(np.abs(build_delta(zachary) @ np.ones(34))) <= 1e-15
    assert build_delta(zachary).shape == (34 * 34, 34)


def test_boundary_matrix_at_zero_horizon(zachary_config):
    cfg = zachary_config
    H0 = boundary_matrix(cfg.dynamics, nash.agent_weights(cfg), build_delta(cfg.graph), 0.0)
    np.testing.assert_array_equal(H0, np.eye(34))


def test_build_H(zachary_config):
    H, cond = build_H(zachary_config)
    np.testing.assert_allclose(H @ np.ones(34), np.ones(34), atol=1e-12)
    assert np.isfinite(cond) and 1.0 <= cond < 1e3


def test_singular_boundary_reported(k2_config, monkeypatch):
    monkeypatch.setattr(nash, "SINGULAR_CONDITION", 1.0)
    with pytest.raises(SingularBoundaryError) as err:
        solve(k2_config)
    assert err.value.condition > 1.0


def test_k2_matches_hand_solution(k2_config):
    sol = solve(k2_config)
    y, u = k2_nash_analytic(sol.trajectory.times)
    np.testing.assert_allclose(sol.trajectory.opinions[:, 0], y, atol=1e-13)
    np.testing.assert_allclose(sol.trajectory.opinions[:, 1], -y, atol=1e-13)
    np.testing.assert_allclose(sol.trajectory.controls[:, 0], u, atol=1e-13)
    assert sol.policies[0](0.3) == pytest.approx(k2_nash_analytic(0.3)[1], abs=1e-14)


def test_k2_antisymmetry(k2_config):
    sol = solve(k2_config)
    X, U = sol.trajectory.opinions, sol.trajectory.controls
    assert np.max(np.abs(X[:, 0] + X[:, 1])) <= 1e-14
    assert np.max(np.abs(U[:, 0] + U[:, 1])) <= 1e-14


def test_k2_matches_rk4(k2_config):
    sol = solve(k2_config)
    integrated = simulate(k2_config, sol.control)
    assert np.max(np.abs(integrated.opinions - sol.trajectory.opinions)) <= 1e-6


def test_consensus_start_gives_zero_policies(zachary):
    cfg = GameConfig(zachary, 10.0, 1.0, 1.0, np.full(34, 0.25))
    sol = solve(cfg)
    assert np.max(np.abs(sol.trajectory.controls)) <= 1e-10
    assert np.max(np.abs(sol.trajectory.opinions - 0.25)) <= 1e-10
    assert np.max(np.abs(sol.costate(4, 2.0))) <= 1e-10


def test_boundary_identity_and_endpoint(zachary_config):
    sol = solve(zachary_config)
    cfg = zachary_config
    rhs = matrix_exponential(cfg.t_f * cfg.dynamics) @ cfg.x0
    assert np.linalg.norm(sol.H @ sol.terminal_state - rhs) <= 1e-9 * np.linalg.norm(cfg.x0)
    assert np.max(np.abs(sol.trajectory.final - sol.terminal_state)) <= 1e-10
    assert sol.trajectory.provenance == "closed-form"


def test_costate(zachary_config):
    sol = solve(zachary_config)
    cfg = zachary_config
    for i in (0, 11, 33):
        lam_f = agent_laplacian(cfg.graph, i) @ sol.terminal_state / cfg.graph.degrees[i]
        np.testing.assert_array_equal(costate(sol, i, cfg.t_f), lam_f)
        for t in (0.0, 2.5, 9.9):
            lam = costate(sol, i, t)
            assert abs(sol.policies[i](t) + cfg.b[i] * lam[i] / cfg.r[i]) <= 1e-12
    with pytest.raises(ValueError):
        costate(sol, 0, 10.5)
    with pytest.raises(ValueError):
        sol.policies[0](-0.1)


def test_policy_fast_path_matches_fresh_expm(zachary_config):
    sol = solve(zachary_config)
    ts = np.array([0.0, 0.73, 5.0, 9.999, 10.0])
    for p in sol.policies[::7]:
        fresh = np.array([p(t) for t in ts])
        assert np.max(np.abs(p.sample(ts) - fresh)) <= 1e-10
    np.testing.assert_allclose(sol.control.sample(ts)[2], sol.control(5.0), atol=1e-10)


def test_closed_form_state_matches_grid(zachary_config):
    sol = solve(zachary_config)
    for k in (1, 50, 133, 200):
        t = sol.trajectory.times[k]
        assert np.max(np.abs(sol.state(t) - sol.trajectory.opinions[k])) <= 1e-10


def test_same_lag_gramian_form_misses_interior_states(k2_config):
    """Pairing Psi_i(t) with the terminal costate is right only at t = 0 and t_f."""
    sol = solve(k2_config)
    cfg = k2_config
    t = 0.5
    wrong = matrix_exponential(t * cfg.dynamics) @ cfg.x0 - sum(
        nash.gramian_integral(cfg.dynamics, cfg.agent_weight(i), t).value
        @ sol.terminal_costates[:, i] for i in range(2))
    assert np.max(np.abs(wrong - k2_nash_analytic(t)[0] * np.array([1, -1]))) > 1e-3
    np.testing.assert_allclose(sol.state(t), k2_nash_analytic(t)[0] * np.array([1, -1]), atol=1e-13)


def test_random_graphs_match_rk4():
    rng = np.random.default_rng(21)
    for _ in range(4):
        n = int(rng.integers(3, 9))
        g = random_connected_graph(rng, n, 0.3)
        cfg = GameConfig(g, float(rng.uniform(0.5, 6)), rng.uniform(0.3, 5, n),
                         rng.choice([-1.0, 1.0], n) * rng.uniform(0.5, 2, n), rng.normal(size=n))
        sol = solve(cfg)
        integrated = simulate(cfg, sol.control)
        assert np.max(np.abs(integrated.opinions - sol.trajectory.opinions)) <= 1e-6
