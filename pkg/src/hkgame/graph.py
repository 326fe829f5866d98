"""Social graphs and the matrices derived from them.

Agents are indexed from zero internally.  Edge-list files may use one-based
labels (the convention of the bundled Zachary dataset); they are shifted on
load.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources

import numpy as np


class GraphError(ValueError):
    """Raised for malformed, non-simple or disconnected graphs."""


@dataclass(frozen=True)
class SocialGraph:
    """Undirected, simple, connected graph over agents ``0 .. n-1``.

    Parameters
    ----------
    n : int
        Number of agents.
    edges : iterable of (int, int)
        Unordered agent pairs.  Stored normalized as ``(min, max)``.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    neighbor_sets: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise GraphError(f"agent count must be a positive integer, got {self.n!r}")
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphError(f"self-loop on agent {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) outside agent range 0..{self.n - 1}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))
        nbrs = [set() for _ in range(self.n)]
        for i, j in norm:
            nbrs[i].add(j)
            nbrs[j].add(i)
        object.__setattr__(self, "neighbor_sets", tuple(frozenset(s) for s in nbrs))
        isolated = [i for i, s in enumerate(nbrs) if not s]
        if isolated and self.n > 1:
            raise GraphError(f"isolated agent(s) {isolated}: every agent needs a neighbor")
        if self.n == 1:
            raise GraphError("a single agent has no neighbors")
        if _component_count(self.n, norm) != 1:
            raise GraphError("graph is disconnected")

    @classmethod
    def from_edges(cls, edges, n=None):
        """Build from an edge iterable; rejects duplicate edges."""
        edges = [(int(i), int(j)) for i, j in edges]
        seen = set()
        for i, j in edges:
            key = (min(i, j), max(i, j))
            if key in seen and i != j:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
        if n is None:
            n = 1 + max(max(e) for e in edges) if edges else 0
        return cls(n, frozenset(edges))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(s) for s in self.neighbor_sets], dtype=float)

    def neighbors(self, i: int) -> list[int]:
        self._check_agent(i)
        return sorted(self.neighbor_sets[i])

    def _check_agent(self, i):
        if not (0 <= int(i) < self.n) or int(i) != i:
            raise IndexError(f"agent index {i} out of range 0..{self.n - 1}")


def _component_count(n, edges):
    # union-find with path halving
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    return len({find(a) for a in range(n)})


def load_edge_list(text: str, indexing: str = "one-based") -> SocialGraph:
    """Parse a whitespace-separated edge list.

    One edge per line; blank lines and lines starting with ``#`` are skipped.
    The agent count is the largest label seen.

    Raises
    ------
    GraphError
        On a malformed line (reported with its line number), a self-loop,
        a duplicate edge, an isolated agent or a disconnected graph.
    """
    if indexing not in ("one-based", "zero-based"):
        raise ValueError(f"indexing must be 'one-based' or 'zero-based', got {indexing!r}")
    offset = 1 if indexing == "one-based" else 0
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected two integers, got {line!r}")
        try:
            i, j = (int(p) - offset for p in parts)
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer label in {line!r}") from None
        if i < 0 or j < 0:
            raise GraphError(f"line {lineno}: label below {offset} for {indexing} input")
        if i == j:
            raise GraphError(f"line {lineno}: self-loop on label {parts[0]}")
        edges.append((i, j))
    if not edges:
        raise GraphError("edge list is empty")
    return SocialGraph.from_edges(edges)


def read_edge_list(path, indexing: str = "one-based") -> SocialGraph:
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh.read(), indexing)


def zachary_karate_club() -> SocialGraph:
    """The 34-member, 78-tie Zachary karate club network."""
    text = resources.files("hkgame").joinpath("data/zachary_karate.txt").read_text("utf-8")
    return load_edge_list(text, "one-based")


def adjacency_matrix(g: SocialGraph) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    for i, j in g.edges:
        A[i, j] = A[j, i] = 1.0
    return A


def agent_laplacian(g: SocialGraph, i: int) -> np.ndarray:
    """Laplacian of the star of edges incident to agent ``i``.

    Its quadratic form is agent ``i``'s total squared disagreement,
    ``x @ L_i @ x == sum((x[i] - x[j])**2 for j in neighbors(i))``.
    """
    g._check_agent(i)
    L = np.zeros((g.n, g.n))
    for j in g.neighbor_sets[i]:
        L[i, i] += 1.0
        L[j, j] += 1.0
        L[i, j] = L[j, i] = -1.0
    return L


def agent_laplacians(g: SocialGraph) -> list[np.ndarray]:
    return [agent_laplacian(g, i) for i in range(g.n)]


def global_laplacian(g: SocialGraph) -> np.ndarray:
    """Sum of the agent Laplacians (twice the usual graph Laplacian)."""
    L = np.zeros((g.n, g.n))
    for i in range(g.n):
        L += agent_laplacian(g, i)
    return L


def dynamics_matrix(g: SocialGraph) -> np.ndarray:
    """Generator ``D^-1 A - I`` of the continuous-time neighbor-averaging flow."""
    deg = g.degrees
    if np.any(deg == 0):
        raise GraphError("isolated agent: degree matrix is singular")
    return adjacency_matrix(g) / deg[:, None] - np.eye(g.n)


@dataclass(frozen=True)
class GraphMatrices:
    adjacency: np.ndarray
    degree: np.ndarray
    agent_laplacians: tuple[np.ndarray, ...]
    global_laplacian: np.ndarray
    dynamics: np.ndarray

    @classmethod
    def of(cls, g: SocialGraph) -> "GraphMatrices":
        Ls = tuple(agent_laplacians(g))
        return cls(
            adjacency=adjacency_matrix(g),
            degree=np.diag(g.degrees),
            agent_laplacians=Ls,
            global_laplacian=sum(Ls, np.zeros((g.n, g.n))),
            dynamics=dynamics_matrix(g),
        )
