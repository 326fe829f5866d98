"""Centralized social optimum: one planner minimizes

    J = x(t_f)^T L x(t_f) + int_0^t_f u^T R u dt,   L = sum_i L_i,

under the same dynamics.  Its boundary matrix is ``I + Psi_hat(t_f) L`` with
``Psi_hat`` the Gramian of ``B R^-1 B^T``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import GameConfig, Trajectory, evaluate_social_cost
from .matfun import gramian_integral, matrix_exponential
from .nash import SingularBoundaryError, _check_condition, _check_time, closed_form_states
from . import nash

__all__ = ["SingularBoundaryError", "SocialPolicy", "SocialSolution", "solve_social",
           "social_vs_nash_gap"]


def planner_weight(cfg: GameConfig) -> np.ndarray:
    """``B R^-1 B^T`` with ``B = diag(b)``, ``R = diag(r)``."""
    return np.diag(cfg.b**2 / cfg.r)


@dataclass(frozen=True, eq=False)
class SocialPolicy:
    """``u(t) = -R^-1 B exp((t_f - t) Lam^T) lam(t_f)``."""

    gain: np.ndarray  # -b / r
    terminal_costate: np.ndarray
    t_f: float
    dynamics: np.ndarray
    propagator: object

    def __call__(self, t) -> np.ndarray:
        _check_time(t, self.t_f)
        return self.gain * (matrix_exponential((self.t_f - t) * self.dynamics.T)
                            @ self.terminal_costate)

    def sample(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return self.gain * self.propagator.transpose_apply(self.t_f - times,
                                                           self.terminal_costate)


@dataclass(frozen=True, eq=False)
class SocialSolution:
    config: GameConfig
    H_hat: np.ndarray
    condition: float
    terminal_state: np.ndarray
    terminal_costate: np.ndarray
    policy: SocialPolicy
    trajectory: Trajectory
    social_cost: float

    @property
    def control(self) -> SocialPolicy:
        return self.policy

    def costate(self, t: float) -> np.ndarray:
        cfg = self.config
        _check_time(t, cfg.t_f)
        return matrix_exponential((cfg.t_f - t) * cfg.dynamics.T) @ self.terminal_costate

    def state(self, t: float) -> np.ndarray:
        cfg = self.config
        _check_time(t, cfg.t_f)
        psi = gramian_integral(cfg.dynamics, planner_weight(cfg), t).value
        return matrix_exponential(t * cfg.dynamics) @ cfg.x0 - psi @ self.costate(t)


def solve_social(cfg: GameConfig) -> SocialSolution:
    """Closed-form social optimum.

    Raises
    ------
    SingularBoundaryError
        If ``I + Psi_hat(t_f) L`` is numerically singular.
    """
    Lam = cfg.dynamics
    L = cfg.matrices.global_laplacian
    S = planner_weight(cfg)
    H_hat = np.eye(cfg.n) + gramian_integral(Lam, S, cfg.t_f).value @ L
    cond = _check_condition(H_hat)
    xf = np.linalg.solve(H_hat, matrix_exponential(cfg.t_f * Lam) @ cfg.x0)
    lam_f = L @ xf
    policy = SocialPolicy(-cfg.b / cfg.r, lam_f, cfg.t_f, Lam, cfg.propagator)
    X = closed_form_states(cfg, [S], lam_f[:, None])
    traj = Trajectory(cfg.times, X, policy.sample(cfg.times), "closed-form")
    for arr in (H_hat, xf, lam_f):
        arr.setflags(write=False)
    return SocialSolution(cfg, H_hat, cond, xf, lam_f, policy, traj,
                          evaluate_social_cost(cfg, traj))


def social_vs_nash_gap(cfg: GameConfig) -> tuple[float, float]:
    """Social cost at the social optimum and along the Nash equilibrium."""
    social = solve_social(cfg)
    eq = nash.solve(cfg)
    return social.social_cost, evaluate_social_cost(cfg, eq.trajectory)
