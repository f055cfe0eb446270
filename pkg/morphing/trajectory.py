"""
Minimum-jerk piecewise quintic trajectories (MINCO class with s = 3).

A trajectory with K pieces is fixed by its K - 1 intermediate waypoints q,
the piece durations T and the position/velocity/acceleration at both ends.
The coefficients c (K blocks of 6 x 3) solve a banded linear system

    A(T) c = b(q, d_0, d_g)

built row by row as:

    rows 0..2              head state           p_1^(d)(0) = d_0[d]
    row 6i - 3             waypoint i           p_i(T_i) = q_i
    rows 6i - 2 + d        continuity, d=0..4   p_i^(d)(T_i) - p_{i+1}^(d)(0) = 0
    rows 6K - 3 + d        tail state           p_K^(d)(T_K) = d_g[d]

Gradients of any J(c(q, T), T) come back through one transposed banded
solve (see propagate_gradient).
"""

from dataclasses import dataclass
from math import factorial
from typing import Tuple

import numpy as np
from scipy.linalg import solve_banded

from .errors import DegenerateTime, OutOfDomain

N_COEFFS = 6
_JERK_WEIGHTS = np.array([0.0, 0.0, 0.0, 6.0, 24.0, 60.0])


def basis(t, order: int = 0) -> np.ndarray:
    """
    Derivative `order` of the time basis [1, t, ..., t^5].

    Scalar t gives a (6,) vector, an array of n times gives (n, 6).
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros((t.size, N_COEFFS))
    for j in range(order, N_COEFFS):
        out[:, j] = factorial(j) / factorial(j - order) * t ** (j - order)
    return out[0] if scalar else out


@dataclass(frozen=True)
class BoundaryState:
    """Head and tail states, each a (3, 3) array with rows position, velocity, acceleration."""
    d0: np.ndarray
    dg: np.ndarray

    def __post_init__(self):
        d0 = np.asarray(self.d0, dtype=float).reshape(3, 3)
        dg = np.asarray(self.dg, dtype=float).reshape(3, 3)
        if not (np.all(np.isfinite(d0)) and np.all(np.isfinite(dg))):
            raise ValueError("boundary states must be finite")
        object.__setattr__(self, "d0", d0)
        object.__setattr__(self, "dg", dg)

    @classmethod
    def rest(cls, start, goal) -> "BoundaryState":
        d0 = np.zeros((3, 3))
        dg = np.zeros((3, 3))
        d0[0] = start
        dg[0] = goal
        return cls(d0, dg)


class MincoTrajectory:
    """Piecewise quintic solved from (q, T, boundary); immutable after construction."""

    def __init__(self, q: np.ndarray, T: np.ndarray, boundary: BoundaryState):
        T = np.asarray(T, dtype=float).reshape(-1)
        q = np.asarray(q, dtype=float).reshape(-1, 3)
        if T.size < 1:
            raise DegenerateTime("a trajectory needs at least one piece")
        if q.shape[0] != T.size - 1:
            raise ValueError(f"expected {T.size - 1} intermediate waypoints, got {q.shape[0]}")
        if not np.all(np.isfinite(T)) or np.any(T <= 0.0):
            raise DegenerateTime(f"piece durations must be positive, got {T}")
        self.q = q
        self.T = T
        self.boundary = boundary
        self._build_system()
        self.coeffs = self._solve(self._rhs()).reshape(self.n_pieces, N_COEFFS, 3)

    # ------------------------------------------------------------------
    # Linear system
    # ------------------------------------------------------------------

    @property
    def n_pieces(self) -> int:
        return self.T.size

    def _build_system(self):
        K = self.n_pieces
        rows, cols, vals = [], [], []

        def put(row, piece, vector):
            for j in range(N_COEFFS):
                if vector[j] != 0.0:
                    rows.append(row)
                    cols.append(N_COEFFS * piece + j)
                    vals.append(vector[j])

        for d in range(3):
            put(d, 0, basis(0.0, d))
        for i in range(1, K):
            s = i - 1
            put(6 * i - 3, s, basis(self.T[s], 0))
            for d in range(5):
                put(6 * i - 2 + d, s, basis(self.T[s], d))
                put(6 * i - 2 + d, s + 1, -basis(0.0, d))
        for d in range(3):
            put(6 * K - 3 + d, K - 1, basis(self.T[K - 1], d))

        self._rows = np.asarray(rows)
        self._cols = np.asarray(cols)
        self._vals = np.asarray(vals)
        self._lower = int(np.max(self._rows - self._cols))
        self._upper = int(np.max(self._cols - self._rows))

    def _banded(self, transpose: bool) -> Tuple[Tuple[int, int], np.ndarray]:
        n = N_COEFFS * self.n_pieces
        rows, cols = (self._cols, self._rows) if transpose else (self._rows, self._cols)
        lower, upper = (self._upper, self._lower) if transpose else (self._lower, self._upper)
        ab = np.zeros((lower + upper + 1, n))
        ab[upper + rows - cols, cols] = self._vals
        return (lower, upper), ab

    def _solve(self, rhs: np.ndarray, transpose: bool = False) -> np.ndarray:
        bands, ab = self._banded(transpose)
        return solve_banded(bands, ab, rhs)

    def _rhs(self) -> np.ndarray:
        K = self.n_pieces
        b = np.zeros((N_COEFFS * K, 3))
        b[0:3] = self.boundary.d0
        for i in range(1, K):
            b[6 * i - 3] = self.q[i - 1]
        b[6 * K - 3:6 * K] = self.boundary.dg
        return b

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    @property
    def total_duration(self) -> float:
        return float(np.sum(self.T))

    @property
    def junction_times(self) -> np.ndarray:
        """[0, t_1, ..., t_K] cumulative piece boundaries."""
        return np.concatenate(([0.0], np.cumsum(self.T)))

    def locate(self, t):
        """Piece index and local time for each t (scalar or array)."""
        t = np.asarray(t, dtype=float)
        total = self.total_duration
        tol = 1e-9 * max(1.0, total)
        if np.any(t < -tol) or np.any(t > total + tol):
            raise OutOfDomain(f"t outside [0, {total:.6f}]")
        t = np.clip(t, 0.0, total)
        starts = self.junction_times[:-1]
        idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, self.n_pieces - 1)
        return idx, t - starts[idx]

    def evaluate(self, t: float, order: int = 0) -> np.ndarray:
        idx, tau = self.locate(t)
        return basis(float(tau), order) @ self.coeffs[int(idx)]

    def sample(self, ts, order: int = 0) -> np.ndarray:
        """(n, 3) values of derivative `order` at the times ts."""
        idx, tau = self.locate(np.atleast_1d(ts))
        B = basis(tau, order)
        return np.einsum("nj,njk->nk", B, self.coeffs[idx])

    def positions_at_junctions(self) -> np.ndarray:
        return np.array([basis(self.T[s], 0) @ self.coeffs[s] for s in range(self.n_pieces)])

    # ------------------------------------------------------------------
    # Cost and gradients
    # ------------------------------------------------------------------

    def jerk_cost(self) -> float:
        total = 0.0
        for s in range(self.n_pieces):
            Q = _jerk_gram(self.T[s])
            c = self.coeffs[s]
            total += float(np.trace(c.T @ Q @ c))
        return total

    def jerk_gradient(self) -> Tuple[np.ndarray, np.ndarray]:
        """Partial derivatives of the jerk integral w.r.t. c (K, 6, 3) and T (K,) with c held fixed."""
        gc = np.zeros_like(self.coeffs)
        gT = np.zeros(self.n_pieces)
        for s in range(self.n_pieces):
            c = self.coeffs[s]
            gc[s] = 2.0 * _jerk_gram(self.T[s]) @ c
            jerk_end = basis(self.T[s], 3) @ c
            gT[s] = float(jerk_end @ jerk_end)
        return gc, gT

    def propagate_gradient(self, grad_c: np.ndarray, grad_T_direct=None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Chain dJ/dc through c = A(T)^-1 b(q).

        With lambda = A^-T dJ/dc:  dJ/dq_i = lambda[row of q_i] and
        dJ/dT_s = grad_T_direct_s - sum_r lambda_r . (dA_r/dT_s c).
        """
        K = self.n_pieces
        G = np.asarray(grad_c, dtype=float).reshape(N_COEFFS * K, 3)
        lam = self._solve(G, transpose=True)

        grad_q = np.array([lam[6 * i - 3] for i in range(1, K)]).reshape(-1, 3)
        grad_T = np.zeros(K) if grad_T_direct is None else np.array(grad_T_direct, dtype=float).copy()
        for s in range(K):
            c = self.coeffs[s]
            Ts = self.T[s]
            if s < K - 1:
                grad_T[s] -= lam[6 * s + 3] @ (basis(Ts, 1) @ c)
                for d in range(5):
                    grad_T[s] -= lam[6 * s + 4 + d] @ (basis(Ts, d + 1) @ c)
            else:
                for d in range(3):
                    grad_T[s] -= lam[6 * s + 3 + d] @ (basis(Ts, d + 1) @ c)
        return grad_q, grad_T


def _jerk_gram(T: float) -> np.ndarray:
    """Q_ij = integral over [0, T] of beta'''_i beta'''_j."""
    Q = np.zeros((N_COEFFS, N_COEFFS))
    for i in range(3, N_COEFFS):
        for j in range(3, N_COEFFS):
            power = i + j - 5
            Q[i, j] = _JERK_WEIGHTS[i] * _JERK_WEIGHTS[j] * T**power / power
    return Q


def rest_to_rest_jerk(distance: float, duration: float) -> float:
    """Jerk integral of the single-piece rest-to-rest quintic: 720 d^2 / T^5."""
    return 720.0 * distance**2 / duration**5


def solve_coefficients(q, T, boundary: BoundaryState) -> MincoTrajectory:
    """Solve the banded system for waypoints q, durations T and boundary; the trajectory owns the coefficients."""
    return MincoTrajectory(q, T, boundary)
