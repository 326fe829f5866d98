"""Forward simulation of the neighbor-averaging opinion flow and its costs.

The controlled flow is ``x' = Lam x + b * u(t)`` with ``Lam = D^-1 A - I``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _backend
from .graph import GraphMatrices, SocialGraph
from .matfun import GraphPropagator, matrix_exponential


class ConfigError(ValueError):
    """Invalid game or experiment configuration."""


class SimulationError(RuntimeError):
    """Non-finite control input or state blow-up during integration."""


def _broadcast(name, value, n):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ConfigError(f"{name} must be a scalar or have length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GameConfig:
    """Horizon, weights, gains and initial opinions for one experiment.

    ``r`` and ``b`` may be scalars (broadcast to every agent).  ``samples``
    is the size of the output time grid; it must be odd so composite
    Simpson applies to cost integrals.
    """

    graph: SocialGraph
    t_f: float
    r: np.ndarray
    b: np.ndarray
    x0: np.ndarray
    samples: int = 201

    def __post_init__(self):
        n = self.graph.n
        if not (np.isfinite(self.t_f) and self.t_f > 0):
            raise ConfigError(f"horizon t_f must be positive, got {self.t_f}")
        object.__setattr__(self, "t_f", float(self.t_f))
        r = _broadcast("r", self.r, n)
        if np.any(r <= 0):
            raise ConfigError("control weights r must all be positive")
        b = _broadcast("b", self.b, n)
        if np.any(b == 0):
            raise ConfigError("input gains b must all be nonzero")
        x0 = np.array(self.x0, dtype=float)
        if x0.shape != (n,):
            raise ConfigError(f"x0 must have length {n}, got shape {x0.shape}")
        if not np.all(np.isfinite(x0)):
            raise ConfigError("x0 has non-finite entries")
        x0.setflags(write=False)
        if int(self.samples) != self.samples or self.samples < 3 or self.samples % 2 == 0:
            raise ConfigError(f"samples must be an odd integer >= 3, got {self.samples}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "samples", int(self.samples))

    @property
    def n(self) -> int:
        return self.graph.n

    @cached_property
    def matrices(self) -> GraphMatrices:
        return GraphMatrices.of(self.graph)

    @property
    def dynamics(self) -> np.ndarray:
        return self.matrices.dynamics

    @cached_property
    def propagator(self) -> GraphPropagator:
        return GraphPropagator(self.matrices.adjacency, self.graph.degrees)

    @cached_property
    def times(self) -> np.ndarray:
        t = np.linspace(0.0, self.t_f, self.samples)
        t.setflags(write=False)
        return t

    def input_vector(self, i: int) -> np.ndarray:
        """``B_i``: zero except ``b_i`` in slot ``i``."""
        v = np.zeros(self.n)
        v[i] = self.b[i]
        return v

    def agent_weight(self, i: int) -> np.ndarray:
        """``S_i = B_i B_i^T / r_i``."""
        B = self.input_vector(i)
        return np.outer(B, B) / self.r[i]

    def replace(self, **changes) -> "GameConfig":
        fields = dict(graph=self.graph, t_f=self.t_f, r=self.r, b=self.b,
                      x0=self.x0, samples=self.samples)
        fields.update(changes)
        return GameConfig(**fields)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Opinions (and optionally controls) sampled on a time grid.

    ``provenance`` is one of ``"closed-form"``, ``"integrated"`` or
    ``"discrete"``.
    """

    times: np.ndarray
    opinions: np.ndarray
    controls: np.ndarray | None = None
    provenance: str = "integrated"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        X = np.asarray(self.opinions, dtype=float)
        if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be a strictly increasing grid of >= 2 points")
        if X.ndim != 2 or X.shape[0] != len(times):
            raise ValueError(f"opinions shape {X.shape} does not match {len(times)} times")
        if not np.all(np.isfinite(X)):
            raise ValueError("opinions contain non-finite values")
        for arr in (times, X):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "opinions", X)
        if self.controls is not None:
            U = np.asarray(self.controls, dtype=float)
            if U.shape != X.shape:
                raise ValueError(f"controls shape {U.shape} does not match opinions {X.shape}")
            U.setflags(write=False)
            object.__setattr__(self, "controls", U)

    @property
    def final(self) -> np.ndarray:
        return self.opinions[-1]

    def spread(self, k: int = -1) -> float:
        """Max minus min opinion at sample ``k``."""
        x = self.opinions[k]
        return float(x.max() - x.min())


def two_cluster_opinions(n: int, seed: int) -> np.ndarray:
    """Initial opinions split between (-1.5, -0.5) and (0.5, 1.5).

    Generator: numpy PCG64 seeded with ``seed``.  Draw ``v = random(n)`` and
    then ``w = random(n)``; agent ``i`` gets ``-1.5 + w[i]`` if ``v[i] < 0.5``
    and ``0.5 + w[i]`` otherwise.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    v = rng.random(n)
    w = rng.random(n)
    return np.where(v < 0.5, -1.5 + w, 0.5 + w)


def discrete_hk_step(g: SocialGraph, x) -> np.ndarray:
    """One synchronous update: every agent takes its neighbors' mean opinion."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"opinion vector must have length {g.n}, got shape {x.shape}")
    return np.array([x[sorted(nb)].mean() for nb in g.neighbor_sets])


def stage_times(cfg: GameConfig, oversample: int = 10) -> np.ndarray:
    """Times at which RK4 needs the control: step starts and midpoints."""
    steps = (cfg.samples - 1) * oversample
    return np.linspace(0.0, cfg.t_f, 2 * steps + 1)


def _stage_controls(cfg, control, ts):
    if control is None:
        return np.zeros((len(ts), cfg.n))
    if hasattr(control, "sample"):
        U = control.sample(ts)
    elif callable(control):
        U = np.array([np.broadcast_to(control(t), (cfg.n,)) for t in ts], dtype=float)
    else:
        U = np.asarray(control, dtype=float)
    U = np.ascontiguousarray(U, dtype=float)
    if U.shape != (len(ts), cfg.n):
        raise ValueError(f"control samples have shape {U.shape}, expected {(len(ts), cfg.n)}")
    return U


def integrate_stage_controls(cfg: GameConfig, U, oversample: int = 10) -> Trajectory:
    """RK4 with controls already sampled on ``stage_times(cfg, oversample)``."""
    U = np.ascontiguousarray(U, dtype=float)
    steps = (cfg.samples - 1) * oversample
    if U.shape != (2 * steps + 1, cfg.n):
        raise ValueError(f"stage controls have shape {U.shape}, expected {(2 * steps + 1, cfg.n)}")
    if not np.all(np.isfinite(U)):
        raise SimulationError("control values are not finite")
    X = _backend.rk4_linear(
        np.ascontiguousarray(cfg.dynamics),
        np.ascontiguousarray(cfg.b),
        U,
        np.ascontiguousarray(cfg.x0),
        cfg.t_f / steps,
        oversample,
    )
    if not np.all(np.isfinite(X)):
        raise SimulationError("state blew up during integration")
    return Trajectory(cfg.times, X, U[:: 2 * oversample].copy(), "integrated")


def simulate(cfg: GameConfig, control=None, oversample: int = 10) -> Trajectory:
    """Integrate ``x' = Lam x + b * u(t)`` with fixed-step classical RK4.

    Parameters
    ----------
    control : None, callable or object with ``sample(times)``
        ``None`` means zero input.  A callable maps ``t`` to an n-vector;
        objects exposing ``sample`` are evaluated on all stage times at once.
    oversample : int
        RK4 steps per output interval.
    """
    if int(oversample) != oversample or oversample < 1:
        raise ValueError(f"oversample must be a positive integer, got {oversample}")
    U = _stage_controls(cfg, control, stage_times(cfg, oversample))
    return integrate_stage_controls(cfg, U, int(oversample))


def uncontrolled_closed_form(cfg: GameConfig) -> Trajectory:
    """``x(t) = exp(t Lam) x0`` on the sampling grid."""
    Lam = cfg.dynamics
    X = np.array([matrix_exponential(t * Lam) @ cfg.x0 for t in cfg.times])
    return Trajectory(cfg.times, X, np.zeros_like(X), "closed-form")


def simpson(values, times) -> np.ndarray:
    """Composite Simpson rule on a uniform grid with an odd number of points."""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    m = len(times)
    if m < 3:
        raise ValueError(f"Simpson needs at least 3 grid points, got {m}")
    if m % 2 == 0:
        raise ValueError(f"Simpson needs an odd number of grid points, got {m}")
    h = (times[-1] - times[0]) / (m - 1)
    if not np.allclose(np.diff(times), h, rtol=1e-9, atol=0):
        raise ValueError("Simpson needs a uniform grid")
    w = np.ones(m)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return (h / 3.0) * np.tensordot(w, values, axes=(0, 0))


def _require_controls(traj):
    if traj.controls is None:
        raise ValueError("trajectory carries no controls; cost needs the effort term")


def terminal_disagreement(cfg: GameConfig, i: int, x) -> float:
    """Mean squared gap between agent ``i`` and its neighbors."""
    nb = sorted(cfg.graph.neighbor_sets[i])
    return float(np.mean((x[i] - x[nb]) ** 2))


def evaluate_individual_cost(cfg: GameConfig, i: int, traj: Trajectory) -> float:
    """Terminal neighbor disagreement of agent ``i`` plus its weighted effort."""
    _require_controls(traj)
    cfg.graph._check_agent(i)
    effort = simpson(cfg.r[i] * traj.controls[:, i] ** 2, traj.times)
    return terminal_disagreement(cfg, i, traj.final) + float(effort)


def evaluate_social_cost(cfg: GameConfig, traj: Trajectory) -> float:
    """``x(t_f)^T L x(t_f) + int u^T R u dt`` with ``L`` the summed agent Laplacians."""
    _require_controls(traj)
    x = traj.final
    # x^T L x written as its sum of squares so roundoff cannot make it negative
    i, j = np.array(sorted(cfg.graph.edges)).T
    terminal = 2.0 * float(np.sum((x[i] - x[j]) ** 2))
    effort = float(simpson(traj.controls**2 @ cfg.r, traj.times))
    return terminal + effort
