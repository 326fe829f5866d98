import numpy as np
import pytest

from hkgame import nash, social
from hkgame.dynamics import GameConfig
from hkgame.verification import (
    VerificationReport,
    check_nash_deviation,
    check_pontryagin,
    check_social_minimum,
    check_state_residual,
    check_trajectory_oracle,
    default_probe_agents,
    locality_probe,
    oracle_convergence_ratio,
)


@pytest.fixture
def consensus_solutions(p3):
    cfg = GameConfig(p3, 3.0, 1.0, 1.0, np.full(3, 0.8))
    return nash.solve(cfg), social.solve_social(cfg)


def test_report_pass_flag():
    assert VerificationReport("a", 1e-9, 1e-8).passed
    assert not VerificationReport("a", 2e-8, 1e-8).passed
    combo = VerificationReport.combine("c", [VerificationReport("a", 1e-9, 1e-8),
                                             VerificationReport("b", 5.0, 1.0)])
    assert combo.max_residual == 5.0 and not combo.passed
    assert combo.to_dict()["parts"][0]["passed"]


def test_consensus_checks_are_exact(consensus_solutions):
    for sol in consensus_solutions:
        assert check_trajectory_oracle(sol).max_residual <= 1e-12
        pont = check_pontryagin(sol)
        assert all(p.max_residual <= 1e-12 for p in pont.parts)
    eq, opt = consensus_solutions
    dev = check_nash_deviation(eq, directions=3)
    assert dev.parts[0].max_residual == 0.0
    assert dev.parts[1].max_residual <= 1e-10


def test_k2_checks(k2_config):
    eq = nash.solve(k2_config)
    opt = social.solve_social(k2_config)
    assert check_trajectory_oracle(eq, tolerance=1e-6).passed
    pont = check_pontryagin(eq)
    assert [p.name for p in pont.parts] == ["stationarity", "costate_ode", "terminal_condition"]
    assert pont.passed
    assert check_pontryagin(opt).passed
    assert check_state_residual(eq).passed and check_state_residual(opt).passed
    assert check_nash_deviation(eq, [0, 1], directions=20, epsilon=1e-3).passed
    assert check_social_minimum(opt).passed


def test_reports_are_reproducible(k2_config):
    eq = nash.solve(k2_config)
    a = check_nash_deviation(eq, [0], directions=5, seed=9).to_dict()
    b = check_nash_deviation(eq, [0], directions=5, seed=9).to_dict()
    assert a == b


def test_deviation_detects_a_non_equilibrium(k2_config):
    """Scaling the equilibrium controls must let some agent profit from deviating."""
    eq = nash.solve(k2_config)

    class Scaled:
        def sample(self, ts):
            return 0.5 * eq.control.sample(ts)

    fake = type("Fake", (), {"config": k2_config, "control": Scaled()})()
    report = check_nash_deviation(fake, [0], directions=20)
    assert not report.passed


def test_convergence_order(k2):
    cfg = GameConfig(k2, 1.0, 1.0, 1.0, [1.0, -1.0], samples=11)
    assert oracle_convergence_ratio(nash.solve(cfg)) >= 8.0


def test_probe_agents():
    assert default_probe_agents(34) == [0, 16, 33]
    assert default_probe_agents(2) == [0, 1]


def test_locality_probe_k2(k2_config):
    rep = locality_probe(k2_config, 0)
    assert rep.neighborhood == [0, 1] and rep.outside_above == []
    assert np.all(rep.sensitivities > 0)
    assert rep.shift_response <= 1e-10


def test_locality_probe_zachary(zachary_config):
    rep = locality_probe(zachary_config, 0)
    assert rep.shift_response <= 1e-10
    assert rep.sensitivities.shape == (34,)
    d = rep.to_dict()
    assert d["outside_count"] == len(rep.outside_above)
