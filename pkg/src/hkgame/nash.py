"""Open-loop Nash equilibrium of the opinion formation game.

Agent ``i`` minimizes

    J_i = x(t_f)^T L_i x(t_f) / |N_i| + int_0^t_f r_i u_i(t)^2 dt

subject to ``x' = Lam x + sum_j B_j u_j``.  The equilibrium follows from the
stationarity and costate conditions

    u_i(t) = -B_i^T lam_i(t) / r_i,   lam_i' = -Lam^T lam_i,
    lam_i(t_f) = L_i x(t_f) / |N_i|,

whose terminal conditions stack into ``H x(t_f) = exp(t_f Lam) x0`` with
``H = I + Psi(t_f) Delta``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import GameConfig, Trajectory, evaluate_individual_cost
from .graph import SocialGraph, agent_laplacian
from .matfun import gramian_grid, gramian_integral, matrix_exponential, stacked_psi

SINGULAR_CONDITION = 1e12


class SingularBoundaryError(RuntimeError):
    """The boundary matrix is numerically singular: no unique equilibrium."""

    def __init__(self, condition):
        super().__init__(f"boundary matrix is numerically singular (condition {condition:.3e})")
        self.condition = condition


def build_delta(g: SocialGraph) -> np.ndarray:
    """Vertical stack of the blocks ``L_i / |N_i|`` (shape ``n^2 x n``)."""
    return np.vstack([agent_laplacian(g, i) / g.degrees[i] for i in range(g.n)])


def agent_weights(cfg: GameConfig) -> list[np.ndarray]:
    return [cfg.agent_weight(i) for i in range(cfg.n)]


def boundary_matrix(Lam, S_list, delta, t) -> np.ndarray:
    """``I + [Psi_1(t) ... Psi_n(t)] @ delta``; equals ``I`` at ``t = 0``."""
    n = np.shape(Lam)[0]
    return np.eye(n) + stacked_psi(Lam, S_list, t) @ delta


def _check_condition(H):
    cond = float(np.linalg.cond(H))
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise SingularBoundaryError(cond)
    return cond


def build_H(cfg: GameConfig) -> tuple[np.ndarray, float]:
    """Boundary matrix at the horizon and its 2-norm condition number.

    Raises
    ------
    SingularBoundaryError
        If the condition number exceeds ``SINGULAR_CONDITION``.
    """
    H = boundary_matrix(cfg.dynamics, agent_weights(cfg), build_delta(cfg.graph), cfg.t_f)
    return H, _check_condition(H)


@dataclass(frozen=True, eq=False)
class OpenLoopPolicy:
    """``u_i(t) = scale * [exp((t_f - t) Lam^T) v]_i`` for one agent.

    ``scale = -b_i / (r_i |N_i|)`` and ``v = L_i x(t_f)``.
    """

    agent: int
    scale: float
    vector: np.ndarray
    t_f: float
    dynamics: np.ndarray
    propagator: object

    def __call__(self, t: float) -> float:
        _check_time(t, self.t_f)
        E = matrix_exponential((self.t_f - t) * self.dynamics.T)
        return float(self.scale * (E[self.agent] @ self.vector))

    def sample(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        lam = self.propagator.transpose_apply(self.t_f - times, self.vector)
        return self.scale * lam[:, self.agent]


class PolicyProfile:
    """Joint control ``t -> (u_1(t), ..., u_n(t))`` of a tuple of policies."""

    def __init__(self, policies):
        self.policies = tuple(policies)
        first = self.policies[0]
        self._scale = np.array([p.scale for p in self.policies])
        self._V = np.column_stack([p.vector for p in self.policies])
        self._t_f = first.t_f
        self._propagator = first.propagator

    def __call__(self, t) -> np.ndarray:
        return np.array([p(t) for p in self.policies])

    def sample(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        lam = self._propagator.transpose_apply(self._t_f - times, self._V)
        return self._scale * np.diagonal(lam, axis1=1, axis2=2)


def _check_time(t, t_f):
    if not (0.0 <= t <= t_f):
        raise ValueError(f"time {t} outside the horizon [0, {t_f}]")


@dataclass(frozen=True, eq=False)
class NashSolution:
    config: GameConfig
    H: np.ndarray
    H_condition: float
    terminal_state: np.ndarray
    terminal_costates: np.ndarray  # column i is lam_i(t_f)
    policies: tuple[OpenLoopPolicy, ...]
    trajectory: Trajectory
    costs: np.ndarray

    @property
    def control(self) -> PolicyProfile:
        return PolicyProfile(self.policies)

    def costate(self, i: int, t: float) -> np.ndarray:
        return costate(self, i, t)

    def state(self, t: float) -> np.ndarray:
        """Equilibrium opinions at an arbitrary time, from fresh exponentials."""
        cfg = self.config
        _check_time(t, cfg.t_f)
        Lam = cfg.dynamics
        x = matrix_exponential(t * Lam) @ cfg.x0
        back = matrix_exponential((cfg.t_f - t) * Lam.T)
        for i in range(cfg.n):
            psi = gramian_integral(Lam, cfg.agent_weight(i), t).value
            x = x - psi @ (back @ self.terminal_costates[:, i])
        return x


def costate(sol: NashSolution, i: int, t: float) -> np.ndarray:
    """``lam_i(t) = exp((t_f - t) Lam^T) L_i x(t_f) / |N_i|``."""
    cfg = sol.config
    cfg.graph._check_agent(i)
    _check_time(t, cfg.t_f)
    if t == cfg.t_f:
        return sol.terminal_costates[:, i].copy()
    return matrix_exponential((cfg.t_f - t) * cfg.dynamics.T) @ sol.terminal_costates[:, i]


def closed_form_states(cfg: GameConfig, S_list, terminal_costates) -> np.ndarray:
    """``x(t_k) = exp(t_k Lam) x0 - sum_i Psi_i(t_k) lam_i(t_k)`` on the grid.

    ``S_list[i]`` pairs with column ``i`` of ``terminal_costates``.
    """
    times = cfg.times
    dt = cfg.t_f / (cfg.samples - 1)
    prop = cfg.propagator
    free = prop.expm_many(times) @ cfg.x0
    psi = gramian_grid(cfg.dynamics, S_list, dt, cfg.samples - 1)
    lam = prop.transpose_apply(cfg.t_f - times, terminal_costates)
    return free - np.einsum("kimn,kni->km", psi, lam, optimize=True)


def solve(cfg: GameConfig) -> NashSolution:
    """Closed-form open-loop Nash equilibrium for ``cfg``.

    Raises
    ------
    SingularBoundaryError
        If the boundary matrix cannot be inverted reliably.
    """
    g = cfg.graph
    Lam = cfg.dynamics
    S_list = agent_weights(cfg)
    Ls = cfg.matrices.agent_laplacians
    H = boundary_matrix(Lam, S_list, build_delta(g), cfg.t_f)
    cond = _check_condition(H)
    xf = np.linalg.solve(H, matrix_exponential(cfg.t_f * Lam) @ cfg.x0)
    deg = g.degrees
    lam_f = np.column_stack([Ls[i] @ xf / deg[i] for i in range(g.n)])
    policies = tuple(
        OpenLoopPolicy(
            agent=i,
            scale=float(-cfg.b[i] / (cfg.r[i] * deg[i])),
            vector=Ls[i] @ xf,
            t_f=cfg.t_f,
            dynamics=Lam,
            propagator=cfg.propagator,
        )
        for i in range(g.n)
    )
    X = closed_form_states(cfg, S_list, lam_f)
    U = PolicyProfile(policies).sample(cfg.times)
    traj = Trajectory(cfg.times, X, U, "closed-form")
    costs = np.array([evaluate_individual_cost(cfg, i, traj) for i in range(g.n)])
    for arr in (H, xf, lam_f, costs):
        arr.setflags(write=False)
    return NashSolution(cfg, H, cond, xf, lam_f, policies, traj, costs)
