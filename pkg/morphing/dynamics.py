"""
Rigid-body dynamics of the morphing quadrotor with rotor drag.

    p_dot     = v
    v_dot     = -g z_E + R (f / m_t) e_3 - R D R^T v
    q_dot     = 1/2 q ⊗ (0, omega)
    omega_dot = J^-1 (tau - omega x J omega - A R^T v - B omega)

Shape changes are quasi-static: the caller passes the InertialProps of the
current arm angles at every step and no J_dot or CoG-rate terms are added.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteState
from .morphology import InertialProps
from .rotations import quat_multiply, quat_normalize, quat_to_matrix

GRAVITY = 9.81
E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class DragParams:
    """Mass-normalized rotor drag D (1/s, diagonal), translational moment A and rotational damping B."""
    D: np.ndarray = field(default_factory=lambda: np.diag([0.3, 0.3, 0.1]))
    A: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    B: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float)
        if D.shape == (3,):
            D = np.diag(D)
        A = np.asarray(self.A, dtype=float).reshape(3, 3)
        B = np.asarray(self.B, dtype=float).reshape(3, 3)
        if D.shape != (3, 3) or np.any(D != np.diag(np.diag(D))):
            raise ValueError("D must be a diagonal 3x3 matrix")
        if np.any(np.diag(D) < 0.0):
            raise ValueError("D entries must be non-negative")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("A and B must be finite")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @classmethod
    def none(cls) -> "DragParams":
        return cls(D=np.zeros((3, 3)))


@dataclass(frozen=True)
class WrenchInput:
    """Collective thrust f (N) and body torque tau (N m)."""
    f: float
    tau: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.f < 0.0:
            raise ValueError(f"collective thrust must be non-negative, got {self.f}")
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float).reshape(3))


@dataclass(frozen=True)
class RigidState:
    """CoG position p (m), velocity v (m/s), attitude q (scalar-first), body rate omega (rad/s)."""
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(3))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))
        object.__setattr__(self, "q", quat_normalize(np.asarray(self.q, dtype=float).reshape(4)))
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float).reshape(3))

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.q)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.q, self.omega])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "RigidState":
        return cls(p=x[0:3], v=x[3:6], q=x[6:10], omega=x[10:13])


def _derivative(x: np.ndarray, f: float, tau: np.ndarray, J: np.ndarray, J_inv: np.ndarray,
                drag: DragParams, mass: float, g: float) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("state is not finite")
    v, q, omega = x[3:6], x[6:10], x[10:13]
    R = quat_to_matrix(q)
    body_v = R.T @ v
    v_dot = -g * E3 + (f / mass) * R[:, 2] - R @ (drag.D @ body_v)
    q_dot = 0.5 * quat_multiply(q, np.concatenate(([0.0], omega)))
    omega_dot = J_inv @ (tau - np.cross(omega, J @ omega) - drag.A @ body_v - drag.B @ omega)
    xdot = np.concatenate([v, v_dot, q_dot, omega_dot])
    if not np.all(np.isfinite(xdot)):
        raise NonFiniteState("state derivative is not finite")
    return xdot


def state_derivative(s: RigidState, u: WrenchInput, props: InertialProps, drag: DragParams,
                     mass: float, g: float = GRAVITY) -> np.ndarray:
    """13-vector [p_dot, v_dot, q_dot, omega_dot]."""
    J = props.inertia
    return _derivative(s.to_vector(), u.f, u.tau, J, np.linalg.inv(J), drag, mass, g)


def rk4_step(s: RigidState, u: WrenchInput, props: InertialProps, drag: DragParams,
             mass: float, dt: float, g: float = GRAVITY) -> RigidState:
    """One classical Runge-Kutta step with the input held constant; the quaternion is renormalized."""
    if not 0.0 < dt <= 0.01:
        raise ValueError(f"dt must lie in (0, 0.01] s, got {dt}")
    J = props.inertia
    J_inv = np.linalg.inv(J)
    x = s.to_vector()

    k1 = _derivative(x, u.f, u.tau, J, J_inv, drag, mass, g)
    k2 = _derivative(x + 0.5 * dt * k1, u.f, u.tau, J, J_inv, drag, mass, g)
    k3 = _derivative(x + 0.5 * dt * k2, u.f, u.tau, J, J_inv, drag, mass, g)
    k4 = _derivative(x + dt * k3, u.f, u.tau, J, J_inv, drag, mass, g)
    x_next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    if not np.all(np.isfinite(x_next)):
        raise NonFiniteState("integrated state is not finite")
    x_next[6:10] = quat_normalize(x_next[6:10])
    return RigidState.from_vector(x_next)


def kinetic_energy(s: RigidState, mass: float, props: InertialProps) -> float:
    return 0.5 * mass * float(s.v @ s.v) + 0.5 * float(s.omega @ props.inertia @ s.omega)


def specific_thrust_z(s: RigidState, f: float, mass: float) -> float:
    """World-z component of the thrust acceleration, as an accelerometer would report it."""
    return float(f / mass * s.rotation[2, 2])
