"""Dense matrix functions: the matrix exponential and Gramian-type integrals

    G(t) = int_0^t exp(s M) S exp(s M^T) ds .

Two independent evaluations of ``G`` are provided.  ``gramian_integral`` uses
the block-triangular exponential identity; ``gramian_quadrature`` integrates
the matrix-valued integrand with adaptive Simpson and serves as its oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Higham (2005) backward-error thresholds on the 1-norm for Pade degree m.
_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_coefficients(m):
    return [
        math.factorial(2 * m - j) * math.factorial(m)
        / (math.factorial(2 * m) * math.factorial(j) * math.factorial(m - j))
        for j in range(m + 1)
    ]


_PADE_COEF = {m: np.array(_pade_coefficients(m)) for m in _PADE_THETA}


def _pade_uv(A, m):
    b = _PADE_COEF[m]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
        return U, V
    U = b[1] * ident
    V = b[0] * ident
    P = ident
    for k in range(1, m // 2 + 1):
        P = P @ A2
        U = U + b[2 * k + 1] * P
        V = V + b[2 * k] * P
    return A @ U, V


def matrix_exponential(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade approximant.

    The Pade degree (3, 5, 7, 9 or 13) and the number of squarings are picked
    from the 1-norm of ``M``.

    Raises
    ------
    ValueError
        If ``M`` is not square or has non-finite entries.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix_exponential needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix_exponential: non-finite entries")
    if A.size == 0:
        return A
    norm = np.linalg.norm(A, 1)
    if norm == 0.0:
        return np.eye(A.shape[0])
    for m in (3, 5, 7, 9):
        if norm <= _PADE_THETA[m]:
            U, V = _pade_uv(A, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(math.ceil(math.log2(norm / _PADE_THETA[13]))))
    A = A / 2.0**s
    U, V = _pade_uv(A, 13)
    X = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        X = X @ X
    return X


@dataclass(frozen=True)
class GramianResult:
    value: np.ndarray
    method: str
    t: float


def _check_gramian_args(M, S, t):
    M = np.asarray(M, dtype=float)
    S = np.asarray(S, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"generator must be square, got shape {M.shape}")
    if S.shape != M.shape:
        raise ValueError(f"weight shape {S.shape} does not match generator {M.shape}")
    if not np.allclose(S, S.T, rtol=1e-12, atol=1e-14):
        raise ValueError("weight matrix S must be symmetric")
    if not t >= 0:
        raise ValueError(f"upper limit must be nonnegative, got {t}")
    return M, S, float(t)


# Keep the base block step short: the (1,2) block of exp(t*[[-M, S], [0, M^T]])
# carries exp(-t M), whose growth would cost digits over long horizons.
_BASE_STEP_NORM = 0.5


def _block_gramian(M, S, t):
    n = M.shape[0]
    Z = np.zeros((2 * n, 2 * n))
    Z[:n, :n] = -M
    Z[:n, n:] = S
    Z[n:, n:] = M.T
    F = matrix_exponential(t * Z)
    return F[n:, n:].T @ F[:n, n:]


def gramian_integral(M, S, t) -> GramianResult:
    """``int_0^t exp(sM) S exp(sM^T) ds`` via the block exponential identity.

    The integral is evaluated on ``[0, t / 2^k]`` from one ``2n x 2n``
    exponential and then extended by the exact doubling rule
    ``G(2h) = G(h) + exp(hM) G(h) exp(hM)^T``.
    """
    M, S, t = _check_gramian_args(M, S, t)
    n = M.shape[0]
    if t == 0.0:
        return GramianResult(np.zeros((n, n)), "block-exponential", 0.0)
    norm = max(np.linalg.norm(M, 1), 1e-300)
    k = max(0, int(math.ceil(math.log2(t * norm / _BASE_STEP_NORM))))
    h = t / 2.0**k
    G = _block_gramian(M, S, h)
    E = matrix_exponential(h * M)
    for _ in range(k):
        G = G + E @ G @ E.T
        E = E @ E
    return GramianResult(0.5 * (G + G.T), "block-exponential", t)


def gramian_quadrature(M, S, t, tol=1e-10, max_depth=50) -> GramianResult:
    """Adaptive Simpson evaluation of the same integral (reference oracle).

    Intervals are bisected until the Richardson error estimate, measured
    in the max-abs entry, falls below the interval's share of ``tol``.
    """
    M, S, t = _check_gramian_args(M, S, t)
    n = M.shape[0]
    if t == 0.0:
        return GramianResult(np.zeros((n, n)), "quadrature", 0.0)

    def f(s):
        E = matrix_exponential(s * M)
        return E @ S @ E.T

    def simpson(a, fa, b, fb):
        c = 0.5 * (a + b)
        fc = f(c)
        return c, fc, (b - a) / 6.0 * (fa + 4.0 * fc + fb)

    fa, fb = f(0.0), f(t)
    c, fc, whole = simpson(0.0, fa, t, fb)
    total = np.zeros((n, n))
    stack = [(0.0, fa, t, fb, c, fc, whole, tol, 0)]
    while stack:
        a, fa, b, fb, c, fc, whole, eps, depth = stack.pop()
        lc, flc, left = simpson(a, fa, c, fc)
        rc, frc, right = simpson(c, fc, b, fb)
        delta = left + right - whole
        if depth >= max_depth or np.max(np.abs(delta)) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((a, fa, c, fc, lc, flc, left, 0.5 * eps, depth + 1))
            stack.append((c, fc, b, fb, rc, frc, right, 0.5 * eps, depth + 1))
    return GramianResult(0.5 * (total + total.T), "quadrature", t)


def stacked_psi(M, S_list, t) -> np.ndarray:
    """Horizontal concatenation ``[G_1(t) ... G_k(t)]`` for the weights ``S_list``."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    blocks = []
    for S in S_list:
        if np.shape(S) != (n, n):
            raise ValueError(f"weight of shape {np.shape(S)} does not match n = {n}")
        blocks.append(gramian_integral(M, S, t).value)
    if not blocks:
        raise ValueError("S_list is empty")
    return np.hstack(blocks)


def gramian_grid(M, S_list, dt, steps) -> np.ndarray:
    """Gramians for every weight in ``S_list`` at times ``0, dt, ..., steps*dt``.

    Uses ``G(t + dt) = G(dt) + exp(dt M) G(t) exp(dt M)^T``.  Returns an array of
    shape ``(steps + 1, len(S_list), n, n)``.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    k = len(S_list)
    out = np.zeros((steps + 1, k, n, n))
    if steps == 0:
        return out
    base = np.stack([gramian_integral(M, S, dt).value for S in S_list])
    E = matrix_exponential(dt * M)
    G = base.copy()
    out[1] = G
    for step in range(2, steps + 1):
        G = base + E @ G @ E.T
        out[step] = G
    return out


class GraphPropagator:
    """Fast ``exp(s * Lam)`` for ``Lam = D^-1 A - I`` with ``A`` symmetric.

    ``D^{1/2} Lam D^{-1/2}`` is symmetric, so one ``eigh`` gives the exponential
    at every ``s`` without a fresh Pade evaluation.
    """

    def __init__(self, adjacency, degrees):
        d = np.asarray(degrees, dtype=float)
        A = np.asarray(adjacency, dtype=float)
        root = np.sqrt(d)
        sym = A / np.outer(root, root) - np.eye(len(d))
        self.eigenvalues, Q = np.linalg.eigh(0.5 * (sym + sym.T))
        self._left = Q / root[:, None]        # D^-1/2 Q
        self._right = Q.T * root[None, :]     # Q^T D^1/2

    def expm(self, s) -> np.ndarray:
        return (self._left * np.exp(s * self.eigenvalues)) @ self._right

    def expm_many(self, times) -> np.ndarray:
        """Stack of ``exp(s * Lam)`` for each ``s`` in ``times``."""
        w = np.exp(np.outer(np.asarray(times, dtype=float), self.eigenvalues))
        return np.einsum("ik,sk,kj->sij", self._left, w, self._right, optimize=True)

    def transpose_apply(self, times, V) -> np.ndarray:
        """``exp(s * Lam^T) @ V`` for each ``s``; shape ``(len(times), n, k)``."""
        V = np.asarray(V, dtype=float)
        w = np.exp(np.outer(np.asarray(times, dtype=float), self.eigenvalues))
        inner = self._left.T @ V.reshape(V.shape[0], -1)
        out = np.einsum("ki,sk,kj->sij", self._right, w, inner, optimize=True)
        return out.reshape((len(w),) + V.shape)
