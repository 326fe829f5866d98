"""Independent checks on the closed-form solutions.

Each check returns a :class:`VerificationReport`.  The oracles here rely on
numerical integration, finite differences and random perturbations only, so
they share nothing with the closed forms beyond the problem data.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    GameConfig,
    evaluate_individual_cost,
    evaluate_social_cost,
    integrate_stage_controls,
    simpson,
    stage_times,
)
from .matfun import matrix_exponential
from .nash import NashSolution, _check_condition, build_H
from .social import SocialSolution


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one check; ``passed`` iff ``max_residual <= tolerance``.

    Composite checks carry their sub-checks in ``parts`` and report the
    worst ``residual / tolerance`` ratio against a tolerance of 1.
    """

    name: str
    max_residual: float
    tolerance: float
    details: list = field(default_factory=list)
    parts: tuple = ()

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tolerance)

    @classmethod
    def combine(cls, name, parts, details=None):
        worst = max(p.max_residual / p.tolerance for p in parts)
        return cls(name, float(worst), 1.0, details or [], tuple(parts))

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
        }
        if self.parts:
            out["parts"] = [p.to_dict() for p in self.parts]
        return out


def interior_indices(samples: int, count: int = 20) -> np.ndarray:
    """``count`` grid indices spread evenly over the interior of the grid."""
    return np.unique(np.linspace(1, samples - 2, count).round().astype(int))


def check_trajectory_oracle(sol, oversample: int = 10, tolerance: float = 1e-5) -> VerificationReport:
    """Sup-norm gap between the closed-form trajectory and RK4 under the same controls."""
    cfg = sol.config
    U = sol.control.sample(stage_times(cfg, oversample))
    integrated = integrate_stage_controls(cfg, U, oversample)
    err = np.abs(integrated.opinions - sol.trajectory.opinions)
    k, j = np.unravel_index(np.argmax(err), err.shape)
    return VerificationReport(
        "trajectory_oracle",
        float(err.max()),
        tolerance,
        [{"time": float(cfg.times[k]), "agent": int(j), "oversample": oversample}],
    )


def oracle_convergence_ratio(sol, oversample: int = 1) -> float:
    """Oracle residual at ``oversample`` divided by the residual at twice the refinement."""
    coarse = check_trajectory_oracle(sol, oversample).max_residual
    fine = check_trajectory_oracle(sol, 2 * oversample).max_residual
    return coarse / fine


def _costate_fns(sol):
    """Per-agent (costate, control, input-row, terminal-target) accessors."""
    cfg = sol.config
    x_final = sol.trajectory.final
    if isinstance(sol, NashSolution):
        Ls = cfg.matrices.agent_laplacians
        deg = cfg.graph.degrees
        return [
            (lambda t, i=i: sol.costate(i, t),
             lambda t, i=i: sol.policies[i](t),
             lambda lam, i=i: -cfg.b[i] * lam[i] / cfg.r[i],
             Ls[i] @ x_final / deg[i],
             i)
            for i in range(cfg.n)
        ]
    L = cfg.matrices.global_laplacian
    return [(sol.costate, sol.policy, lambda lam: -cfg.b * lam / cfg.r, L @ x_final, None)]


def check_pontryagin(sol, points: int = 20, fd_step: float = 1e-4,
                     stationarity_tol: float = 1e-12, costate_tol: float = 1e-5,
                     terminal_tol: float = 1e-10) -> VerificationReport:
    """Necessary conditions at interior grid points.

    (a) control equals ``-B^T lam / r``; (b) central-difference ``lam'`` equals
    ``-Lam^T lam``; (c) ``lam(t_f)`` matches the terminal gradient evaluated at
    the closed-form trajectory's endpoint.
    """
    cfg = sol.config
    Lam = cfg.dynamics
    ts = cfg.times[interior_indices(cfg.samples, points)]
    stat, ode, term = [], [], []
    for lam_fn, u_fn, u_from_lam, target, agent in _costate_fns(sol):
        for t in ts:
            lam = lam_fn(t)
            stat.append((np.max(np.abs(np.subtract(u_fn(t), u_from_lam(lam)))), agent, t))
            dlam = (lam_fn(t + fd_step) - lam_fn(t - fd_step)) / (2 * fd_step)
            ode.append((np.max(np.abs(dlam + Lam.T @ lam)), agent, t))
        term.append((np.max(np.abs(lam_fn(cfg.t_f) - target)), agent, cfg.t_f))

    def part(name, rows, tol):
        worst = max(rows, key=lambda r: r[0])
        return VerificationReport(name, float(worst[0]), tol,
                                  [{"agent": worst[1], "time": float(worst[2])}])

    return VerificationReport.combine("pontryagin", [
        part("stationarity", stat, stationarity_tol),
        part("costate_ode", ode, costate_tol),
        part("terminal_condition", term, terminal_tol),
    ])


def check_state_residual(sol, points: int = 20, fd_step: float = 1e-4,
                         tolerance: float = 1e-5) -> VerificationReport:
    """Central-difference ``x' - Lam x - b u`` along the closed-form state."""
    cfg = sol.config
    worst, at = 0.0, None
    for t in cfg.times[interior_indices(cfg.samples, points)]:
        dx = (sol.state(t + fd_step) - sol.state(t - fd_step)) / (2 * fd_step)
        res = dx - cfg.dynamics @ sol.state(t) - cfg.b * sol.control(t)
        r = float(np.max(np.abs(res)))
        if r >= worst:
            worst, at = r, float(t)
    return VerificationReport("state_residual", worst, tolerance, [{"time": at}])


def _random_directions(times, count, width, seed):
    """Piecewise-linear directions with unit L2 norm on ``[times[0], times[-1]]``.

    Returns nodal values of shape ``(count, len(times), width)``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    nodes = rng.standard_normal((count, len(times), width))
    h = np.diff(times)
    a, b = nodes[:, :-1], nodes[:, 1:]
    # exact integral of a squared linear interpolant
    sq = np.einsum("k,ckw->c", h, (a * a + a * b + b * b) / 3.0)
    return nodes / np.sqrt(sq)[:, None, None]


def _to_stages(times, stages, nodal):
    """Linear interpolation of nodal values (``len(times) x w``) onto stage times."""
    return np.column_stack([np.interp(stages, times, nodal[:, j]) for j in range(nodal.shape[1])])


def _step_resolution(cfg, oversample):
    # Cost deviations on the RK4 step grid: perturbation kinks then fall on
    # Simpson panel boundaries, which the coarse output grid cannot promise.
    return cfg.replace(samples=(cfg.samples - 1) * oversample + 1)


def default_probe_agents(n: int) -> list[int]:
    return sorted({0, (n - 1) // 2, n - 1})


def check_nash_deviation(sol: NashSolution, probe_agents=None, directions: int = 20,
                         epsilon: float = 1e-3, seed: int = 0, oversample: int = 10,
                         fd_step: float = 1e-3, decrease_rtol: float = 1e-8,
                         gradient_tol: float = 1e-4) -> VerificationReport:
    """Unilateral deviations from the equilibrium, costed by simulation.

    For each probed agent the equilibrium control is perturbed by
    ``epsilon * delta`` along seeded unit-norm piecewise-linear directions with
    every other agent held at equilibrium; no perturbation may lower the
    agent's own cost by more than ``decrease_rtol * (1 + J_i)``.  The central
    finite-difference gradient of ``J_i`` in the nodal values of ``u_i`` is
    reported against ``gradient_tol``.
    """
    cfg = sol.config
    if probe_agents is None:
        probe_agents = default_probe_agents(cfg.n)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    times = cfg.times
    stages = stage_times(cfg, oversample)
    U_eq = sol.control.sample(stages)
    fine = _step_resolution(cfg, oversample)

    def cost(i, du):
        U = U_eq.copy()
        U[:, i] += du
        return evaluate_individual_cost(fine, i, integrate_stage_controls(fine, U, 1))

    dirs = _random_directions(times, directions, 1, seed)
    decrease_rows, grad_rows = [], []
    for i in probe_agents:
        J0 = cost(i, 0.0)
        worst = -np.inf
        for d in dirs:
            dJ = (J0 - cost(i, epsilon * _to_stages(times, stages, d)[:, 0])) / (1.0 + J0)
            worst = max(worst, dJ)
        decrease_rows.append({"agent": int(i), "cost": J0, "max_relative_decrease": float(worst)})
        grad = np.empty(len(times))
        for k in range(len(times)):
            hat = np.interp(stages, times, np.eye(len(times))[k])
            grad[k] = (cost(i, fd_step * hat) - cost(i, -fd_step * hat)) / (2 * fd_step)
        grad_rows.append({"agent": int(i), "gradient_norm": float(np.linalg.norm(grad))})

    decrease = VerificationReport(
        "unilateral_decrease",
        max(0.0, max(r["max_relative_decrease"] for r in decrease_rows)),
        decrease_rtol, decrease_rows)
    gradient = VerificationReport(
        "cost_gradient",
        max(r["gradient_norm"] for r in grad_rows),
        gradient_tol, grad_rows)
    return VerificationReport.combine(
        "nash_deviation", [decrease, gradient],
        [{"directions": directions, "epsilon": epsilon, "seed": seed}])


def check_social_minimum(sol: SocialSolution, directions: int = 20, epsilon: float = 1e-3,
                         seed: int = 0, oversample: int = 10,
                         decrease_rtol: float = 1e-8) -> VerificationReport:
    """Joint perturbations of the planner's full control vector."""
    cfg = sol.config
    times = cfg.times
    stages = stage_times(cfg, oversample)
    U_eq = sol.control.sample(stages)
    fine = _step_resolution(cfg, oversample)
    J0 = evaluate_social_cost(fine, integrate_stage_controls(fine, U_eq, 1))
    worst = -np.inf
    for d in _random_directions(times, directions, cfg.n, seed):
        U = U_eq + epsilon * _to_stages(times, stages, d)
        J = evaluate_social_cost(fine, integrate_stage_controls(fine, U, 1))
        worst = max(worst, (J0 - J) / (1.0 + J0))
    return VerificationReport("social_minimum", max(0.0, float(worst)), decrease_rtol,
                              [{"cost": J0, "max_relative_decrease": float(worst),
                                "directions": directions, "seed": seed}])


@dataclass(frozen=True)
class LocalityReport:
    """How strongly agent ``agent``'s equilibrium control reacts to each initial opinion.

    ``sensitivities[j]`` is the L2 norm over ``[0, t_f]`` of ``d u_i(t) / d x0_j``.
    """

    agent: int
    sensitivities: np.ndarray
    neighborhood: list
    outside_above: list
    shift_response: float
    threshold: float = 1e-10

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "sensitivities": self.sensitivities.tolist(),
            "neighborhood": self.neighborhood,
            "outside_above_threshold": self.outside_above,
            "outside_count": len(self.outside_above),
            "shift_response": self.shift_response,
            "threshold": self.threshold,
        }


def locality_probe(cfg: GameConfig, i: int, threshold: float = 1e-10) -> LocalityReport:
    """Measure which initial opinions agent ``i``'s equilibrium control depends on.

    This is a measurement; it never fails.
    """
    cfg.graph._check_agent(i)
    H, _ = build_H(cfg)
    _check_condition(H)
    Lam = cfg.dynamics
    L_i = cfg.matrices.agent_laplacians[i]
    M = L_i @ np.linalg.solve(H, matrix_exponential(cfg.t_f * Lam))
    scale = -cfg.b[i] / (cfg.r[i] * cfg.graph.degrees[i])
    # row i of exp(tau Lam^T) is column i of exp(tau Lam)
    cols = cfg.propagator.expm_many(cfg.t_f - cfg.times)[:, :, i]
    K = scale * cols @ M
    sens = np.sqrt(np.maximum(simpson(K**2, cfg.times), 0.0))
    hood = sorted(set(cfg.graph.neighbor_sets[i]) | {i})
    outside = [j for j in range(cfg.n) if j not in hood and sens[j] > threshold]
    return LocalityReport(i, sens, hood, outside, float(np.max(np.abs(K.sum(axis=1)))), threshold)
