"""Optimal opinion formation under neighbor-averaging (Hegselmann-Krause) dynamics.

Closed-form open-loop Nash equilibrium and social optimum for a finite-horizon
opinion game on a fixed social graph, with numerical oracles for both.
"""
from ._backend import BACKEND
from .dynamics import (
    ConfigError,
    GameConfig,
    SimulationError,
    Trajectory,
    discrete_hk_step,
    evaluate_individual_cost,
    evaluate_social_cost,
    simulate,
    two_cluster_opinions,
    uncontrolled_closed_form,
)
from .graph import (
    GraphError,
    GraphMatrices,
    SocialGraph,
    agent_laplacian,
    dynamics_matrix,
    global_laplacian,
    load_edge_list,
    zachary_karate_club,
)
from .matfun import gramian_integral, gramian_quadrature, matrix_exponential, stacked_psi
from .nash import NashSolution, OpenLoopPolicy, SingularBoundaryError, build_delta, build_H, costate, solve
from .social import SocialSolution, social_vs_nash_gap, solve_social

__version__ = "0.1.0"
