"""
Differential flatness with rotor drag.

Given velocity, acceleration, jerk and heading of a smooth trajectory this
module recovers the attitude, the feedforward body rates and the thrust.
The drag feedforward depends on the attitude, so the thrust direction is
resolved by two fixed-point passes started from the drag-free solution.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .dynamics import GRAVITY, DragParams
from .errors import DegenerateThrust, SingularYaw
from .rotations import matrix_to_quat

THRUST_EPS = 1e-6
YAW_EPS = 1e-6
DRAG_ITERATIONS = 2
RATE_DIFF_STEP = 1e-3


@dataclass(frozen=True)
class FlatOutputs:
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray
    j: np.ndarray
    psi: float = 0.0
    psi_dot: float = 0.0
    snap: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("p", "v", "a", "j"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))
        if self.snap is not None:
            object.__setattr__(self, "snap", np.asarray(self.snap, dtype=float).reshape(3))

    @classmethod
    def hover(cls, p, psi: float = 0.0) -> "FlatOutputs":
        zero = np.zeros(3)
        return cls(np.asarray(p, dtype=float), zero, zero, zero, psi, 0.0, zero)

    def shifted(self, h: float) -> "FlatOutputs":
        """Taylor shift by h seconds (snap assumed constant, zero if absent)."""
        s = np.zeros(3) if self.snap is None else self.snap
        return FlatOutputs(
            p=self.p + self.v * h + 0.5 * self.a * h**2 + self.j * h**3 / 6.0,
            v=self.v + self.a * h + 0.5 * self.j * h**2 + s * h**3 / 6.0,
            a=self.a + self.j * h + 0.5 * s * h**2,
            j=self.j + s * h,
            psi=self.psi + self.psi_dot * h,
            psi_dot=self.psi_dot,
            snap=self.snap,
        )


@dataclass(frozen=True)
class FlatReference:
    q_d: np.ndarray
    R_d: np.ndarray
    omega_ff: np.ndarray
    omega_dot_ff: np.ndarray
    f_ff: float
    a_cmd: np.ndarray


def _normalize_rows(x: np.ndarray, eps: float, strict: bool, error) -> Tuple[np.ndarray, np.ndarray]:
    norm = np.linalg.norm(x, axis=-1)
    if strict and np.any(norm < eps):
        raise error(f"norm {norm.min():.3e} below {eps:.1e}")
    norm = np.maximum(norm, eps)
    return x / norm[..., None], norm


def _drag_accel(R: np.ndarray, D: np.ndarray, v: np.ndarray) -> np.ndarray:
    """R D R^T v for stacked R (n, 3, 3) and v (n, 3)."""
    body = np.einsum("nji,nj->ni", R, v)
    return np.einsum("nij,nj->ni", R, body @ D.T)


def thrust_frame(a_cmd: np.ndarray, psi: np.ndarray, strict: bool):
    z, a_norm = _normalize_rows(a_cmd, THRUST_EPS, strict, DegenerateThrust)
    y_c = np.stack([-np.sin(psi), np.cos(psi), np.zeros_like(psi)], axis=-1)
    u = np.cross(y_c, z)
    x, u_norm = _normalize_rows(u, YAW_EPS, strict, SingularYaw)
    y = np.cross(z, x)
    R = np.stack([x, y, z], axis=-1)
    return R, z, a_norm, y_c, u_norm


def attitude_and_rates(v, a, j, psi, psi_dot, D: Optional[np.ndarray] = None,
                       g: float = GRAVITY, strict: bool = True):
    """
    Vectorized flatness map.

    Inputs are (n, 3) arrays and (n,) headings. Returns (R, omega, a_cmd) with
    R (n, 3, 3), body rates omega (n, 3) and the commanded thrust acceleration
    a_cmd (n, 3). With strict=False degenerate samples are regularized instead
    of raising, which keeps penalty evaluation total.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    j = np.atleast_2d(np.asarray(j, dtype=float))
    psi = np.broadcast_to(np.asarray(psi, dtype=float), (v.shape[0],))
    psi_dot = np.broadcast_to(np.asarray(psi_dot, dtype=float), (v.shape[0],))
    D = np.zeros((3, 3)) if D is None else np.asarray(D, dtype=float)
    gravity = np.array([0.0, 0.0, g])

    a_cmd = a + gravity
    R, z, a_norm, y_c, u_norm = thrust_frame(a_cmd, psi, strict)
    if np.any(D):
        for _ in range(DRAG_ITERATIONS):
            a_cmd = a + gravity + _drag_accel(R, D, v)
            R, z, a_norm, y_c, u_norm = thrust_frame(a_cmd, psi, strict)
        omega = _rates(R, z, a_norm, y_c, u_norm, j + _drag_accel(R, D, a), psi, psi_dot)
        # rotating drag term R (hat(omega) D - D hat(omega)) R^T v
        body_v = np.einsum("nji,nj->ni", R, v)
        coupling = np.cross(omega, body_v @ D.T) - np.cross(omega, body_v) @ D.T
        a_cmd_dot = j + _drag_accel(R, D, a) + np.einsum("nij,nj->ni", R, coupling)
    else:
        a_cmd_dot = j
    omega = _rates(R, z, a_norm, y_c, u_norm, a_cmd_dot, psi, psi_dot)
    return R, omega, a_cmd


def _rates(R, z, a_norm, y_c, u_norm, a_cmd_dot, psi, psi_dot) -> np.ndarray:
    """Body rates from the time derivative of the thrust acceleration."""
    x, y = R[..., 0], R[..., 1]
    z_dot = (a_cmd_dot - z * np.sum(z * a_cmd_dot, axis=-1, keepdims=True)) / a_norm[:, None]
    y_c_dot = np.stack([-np.cos(psi), -np.sin(psi), np.zeros_like(psi)], axis=-1) * psi_dot[:, None]
    u_dot = np.cross(y_c_dot, z) + np.cross(y_c, z_dot)
    x_dot = (u_dot - x * np.sum(x * u_dot, axis=-1, keepdims=True)) / u_norm[:, None]
    y_dot = np.cross(z_dot, x) + np.cross(z, x_dot)

    omega = np.stack([
        np.sum(z * y_dot, axis=-1),
        np.sum(x * z_dot, axis=-1),
        np.sum(y * x_dot, axis=-1),
    ], axis=-1)
    return omega


def _single(flat: FlatOutputs, D: np.ndarray, g: float):
    R, omega, a_cmd = attitude_and_rates(flat.v, flat.a, flat.j, flat.psi, flat.psi_dot, D, g)
    return R[0], omega[0], a_cmd[0]


def flat_to_reference(flat: FlatOutputs, mass: float, drag: Optional[DragParams] = None,
                      g: float = GRAVITY) -> FlatReference:
    """Desired attitude, feedforward rates and thrust for one reference sample."""
    D = np.zeros((3, 3)) if drag is None else drag.D
    R, omega, a_cmd = _single(flat, D, g)
    h = RATE_DIFF_STEP
    _, omega_plus, _ = _single(flat.shifted(h), D, g)
    _, omega_minus, _ = _single(flat.shifted(-h), D, g)
    omega_dot = (omega_plus - omega_minus) / (2.0 * h)
    return FlatReference(
        q_d=matrix_to_quat(R),
        R_d=R,
        omega_ff=omega,
        omega_dot_ff=omega_dot,
        f_ff=float(mass * np.linalg.norm(a_cmd)),
        a_cmd=a_cmd,
    )
