"""
Geometric and inertial model of the four-arm morphing quadrotor.

Each arm is hinged on a corner of the central frame and swings its rotor about
the body z axis by an angle alpha_i in [0, pi/2]:

    rotor_i = hinge_i + (l / 2) * (sx_i * sin(alpha_i), sy_i * cos(alpha_i), 0)
    hinge_i = (sx_i * a / 2, sy_i * a / 2, motor_height)

so the rotor tips reach exactly the morph-dependent half extents

    r = (a + l * sin(alpha)) / 2      (body x)
    w = (a + l * cos(alpha)) / 2      (body y)

Rotor order: 1 front-right, 2 rear-left, 3 front-left, 4 rear-right. Rotors
1 and 2 (one diagonal) share the positive yaw-moment sign, 3 and 4 the
negative one.
"""

from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import SingularAllocation

HALF_PI = 0.5 * np.pi

ROTOR_SIGNS = np.array([
    [1.0, -1.0],
    [-1.0, 1.0],
    [1.0, 1.0],
    [-1.0, -1.0],
])
SPIN_SIGNS = np.array([1.0, 1.0, -1.0, -1.0])

# Named arm configurations (rotor order 1..4 as above; rotors 1 and 3 are the front arms)
PRESETS = {
    "X": (np.pi / 4, np.pi / 4, np.pi / 4, np.pi / 4),
    "H": (0.0, 0.0, 0.0, 0.0),
    "T": (HALF_PI, 0.0, HALF_PI, 0.0),
    "Y": (np.pi / 4, 0.0, np.pi / 4, 0.0),
}


@dataclass(frozen=True)
class GeometryParams:
    """
    Airframe description.

    hinge_span and arm_span are the letters a and l of the extent formula:
    the hinges sit on a square of side a and each arm carries its rotor l/2
    away from the hinge. Masses are in kg, lengths in m. thrust_coeff and
    torque_coeff both multiply the squared rotor speed, so their ratio is the
    yaw moment arm (m) used by the allocation matrix.
    """
    hinge_span: float = 0.38
    arm_span: float = 0.311
    body_mass: float = 0.9
    arm_mass: float = 0.075
    motor_mass: float = 0.05
    body_half_height: float = 0.05
    thrust_coeff: float = 1.2e-5
    torque_coeff: float = 1.92e-7
    max_rotor_thrust: float = 8.0
    motor_height: float = 0.0
    hinge_offsets: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        for name in ("hinge_span", "arm_span", "body_mass", "body_half_height",
                     "thrust_coeff", "max_rotor_thrust"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")
        if self.arm_mass < 0.0:
            raise ValueError(f"arm_mass must be non-negative, got {self.arm_mass}")
        if not 0.0 <= self.motor_mass <= self.arm_mass:
            raise ValueError("motor_mass must lie between 0 and arm_mass")
        if self.torque_coeff < 0.0:
            raise ValueError("torque_coeff must be non-negative")
        if self.hinge_offsets is not None and len(self.hinge_offsets) != 4:
            raise ValueError("hinge_offsets needs one (x, y) pair per arm")

    @property
    def a(self) -> float:
        return self.hinge_span

    @property
    def l(self) -> float:
        return self.arm_span

    @property
    def total_mass(self) -> float:
        return self.body_mass + 4.0 * self.arm_mass

    @property
    def yaw_moment_ratio(self) -> float:
        return self.torque_coeff / self.thrust_coeff

    def hinges(self) -> np.ndarray:
        """(4, 3) hinge positions in the body frame."""
        if self.hinge_offsets is not None:
            xy = np.asarray(self.hinge_offsets, dtype=float)
        else:
            xy = ROTOR_SIGNS * (0.5 * self.hinge_span)
        z = np.full((4, 1), self.motor_height)
        return np.hstack([xy, z])


@dataclass(frozen=True)
class MorphState:
    """Arm angles (rad) and their rates (rad/s); angles are clamped to [0, pi/2]."""
    alpha: np.ndarray = field(default_factory=lambda: np.array(PRESETS["X"]))
    alpha_dot: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        alpha = np.clip(np.asarray(self.alpha, dtype=float).reshape(4), 0.0, HALF_PI)
        alpha_dot = np.asarray(self.alpha_dot, dtype=float).reshape(4)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "alpha_dot", alpha_dot)

    @classmethod
    def preset(cls, name: str) -> "MorphState":
        try:
            return cls(np.array(PRESETS[name.upper()]))
        except KeyError:
            raise ValueError(f"Unknown preset {name!r}; choose from {sorted(PRESETS)}") from None

    @classmethod
    def uniform(cls, alpha: float, alpha_dot: float = 0.0) -> "MorphState":
        return cls(np.full(4, alpha), np.full(4, alpha_dot))


@dataclass(frozen=True)
class InertialProps:
    """Inertia about the CoG (kg m^2), CoG offset and rotor positions (body frame, m)."""
    inertia: np.ndarray
    cog_offset: np.ndarray
    motor_positions: np.ndarray

    @property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.inertia)


def _arm_directions(alpha: np.ndarray) -> np.ndarray:
    return np.stack([
        ROTOR_SIGNS[:, 0] * np.sin(alpha),
        ROTOR_SIGNS[:, 1] * np.cos(alpha),
        np.zeros(4),
    ], axis=1)


def motor_positions(geom: GeometryParams, morph: MorphState) -> np.ndarray:
    """(4, 3) rotor positions in the body frame."""
    return geom.hinges() + 0.5 * geom.arm_span * _arm_directions(morph.alpha)


def _point_inertia(mass: float, r: np.ndarray) -> np.ndarray:
    return mass * (np.dot(r, r) * np.eye(3) - np.outer(r, r))


def inertial_props(geom: GeometryParams, morph: MorphState) -> InertialProps:
    """
    Inertia and CoG of the current shape.

    The central frame is a uniform cuboid (a x a x 2h) centred on the
    geometric centre. Each arm is a rod lumped at mid-span plus the motor as a
    point mass at the tip; everything is summed about the geometric centre and
    moved to the CoG with the parallel-axis theorem.
    """
    a, h = geom.hinge_span, geom.body_half_height
    dx, dy, dz = a, a, 2.0 * h
    J = geom.body_mass / 12.0 * np.diag([dy**2 + dz**2, dx**2 + dz**2, dx**2 + dy**2])

    hinges = geom.hinges()
    directions = _arm_directions(morph.alpha)
    tips = hinges + 0.5 * geom.arm_span * directions
    mids = hinges + 0.25 * geom.arm_span * directions
    rod_mass = geom.arm_mass - geom.motor_mass

    first_moment = np.zeros(3)
    for i in range(4):
        J = J + _point_inertia(rod_mass, mids[i]) + _point_inertia(geom.motor_mass, tips[i])
        first_moment += rod_mass * mids[i] + geom.motor_mass * tips[i]

    cog = first_moment / geom.total_mass
    J = J - _point_inertia(geom.total_mass, cog)
    J = 0.5 * (J + J.T)
    return InertialProps(inertia=J, cog_offset=cog, motor_positions=tips)


def half_extents_for_angle(geom: GeometryParams, alpha) -> Tuple[np.ndarray, np.ndarray]:
    """Half extents (r, w) for a common arm angle; broadcasts over arrays."""
    alpha = np.asarray(alpha, dtype=float)
    r = 0.5 * (geom.hinge_span + geom.arm_span * np.sin(alpha))
    w = 0.5 * (geom.hinge_span + geom.arm_span * np.cos(alpha))
    return r, w


def bounding_half_extents(geom: GeometryParams, morph: MorphState) -> Tuple[float, float, float]:
    """Conservative (r, w, h): per-axis maximum of the half extents over the four arms."""
    r, w = half_extents_for_angle(geom, morph.alpha)
    return float(np.max(r)), float(np.max(w)), geom.body_half_height


def box_vertices(r: float, w: float, h: float) -> np.ndarray:
    """(8, 3) corners [±r, ±w, ±h]."""
    signs = np.array(list(product((1.0, -1.0), repeat=3)))
    return signs * np.array([r, w, h])


def body_vertices(geom: GeometryParams, morph: MorphState) -> np.ndarray:
    return box_vertices(*bounding_half_extents(geom, morph))


def solve_arm_angle(geom: GeometryParams, half_extent: float, axis: str = "w") -> float:
    """Common arm angle whose half extent along ``axis`` ('r' or 'w') equals half_extent."""
    index = {"r": 0, "w": 1}[axis]

    def residual(alpha):
        return half_extents_for_angle(geom, alpha)[index] - half_extent

    lo, hi = residual(0.0), residual(HALF_PI)
    if min(lo, hi) > 1e-12 or max(lo, hi) < -1e-12:
        raise ValueError(f"half extent {half_extent:.4f} m is not reachable along {axis}")
    if abs(lo) <= 1e-12:
        return 0.0
    if abs(hi) <= 1e-12:
        return HALF_PI
    return float(brentq(residual, 0.0, HALF_PI, xtol=1e-14))


def allocation_matrix(geom: GeometryParams, props: InertialProps, tolerance: float = 1e-12) -> np.ndarray:
    """
    Map from rotor thrusts U to [f, tau_x, tau_y, tau_z].

    Roll and pitch rows are the moment arms of each rotor about the CoG
    ((l_i - p_C) x U_i z_B), the yaw row carries the spin-direction sign.
    """
    arms = props.motor_positions - props.cog_offset
    M = np.vstack([
        np.ones(4),
        arms[:, 1],
        -arms[:, 0],
        SPIN_SIGNS * geom.yaw_moment_ratio,
    ])
    if abs(np.linalg.det(M)) < tolerance:
        raise SingularAllocation(f"|det M_C| = {abs(np.linalg.det(M)):.3e} below {tolerance:.1e}")
    return M
