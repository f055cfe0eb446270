"""
Reference controllers for the continuous-morphing benchmark.

Both are deliberately simple: a linear PID cascade that ignores the shape
change entirely, and an LQR about hover whose gain is refreshed when the
inertia of the current shape drifts away from the one it was designed for.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_continuous_are

from .controller import BaseController, ControlCommand, NonlinearController, TrackingReference
from .dynamics import RigidState
from .morphology import MorphState, allocation_matrix, inertial_props
from .rotations import euler_zyx


@dataclass(frozen=True)
class PidGains:
    kp_pos: np.ndarray = field(default_factory=lambda: np.array([4.0, 4.0, 6.0]))
    kd_pos: np.ndarray = field(default_factory=lambda: np.array([3.0, 3.0, 4.0]))
    ki_pos: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5, 1.0]))
    int_limit: float = 1.0
    kp_att: np.ndarray = field(default_factory=lambda: np.array([80.0, 80.0, 20.0]))
    kd_att: np.ndarray = field(default_factory=lambda: np.array([14.0, 14.0, 6.0]))
    max_tilt: float = 0.5


@dataclass(frozen=True)
class LqrWeights:
    Q: np.ndarray = field(default_factory=lambda: np.diag([60, 60, 60, 10, 10, 10, 8, 8, 2, 0.5, 0.5, 0.2]))
    R: np.ndarray = field(default_factory=lambda: np.diag([1.0, 80.0, 80.0, 40.0]))
    refresh_tolerance: float = 0.01


def _tilt_targets(a: np.ndarray, psi: float, g: float, max_tilt: float):
    c, s = np.cos(psi), np.sin(psi)
    roll = (a[0] * s - a[1] * c) / g
    pitch = (a[0] * c + a[1] * s) / g
    return float(np.clip(roll, -max_tilt, max_tilt)), float(np.clip(pitch, -max_tilt, max_tilt))


class PidController(BaseController):
    """Small-angle PID cascade with a fixed X-configuration model and no feedforward."""

    name = "pid"

    def __init__(self, geom, drag=None, gains=None, g=9.81, pid_gains: Optional[PidGains] = None):
        self.pid = pid_gains if pid_gains is not None else PidGains()
        super().__init__(geom, drag, gains, g)
        nominal = inertial_props(geom, MorphState.preset("X"))
        self.nominal_inertia = nominal.inertia
        self.nominal_allocation = allocation_matrix(geom, nominal)

    def reset(self):
        self.pos_integral = np.zeros(3)

    def compute(self, t, state: RigidState, morph: MorphState, props, reference: TrackingReference,
                dt, accel_z=None) -> ControlCommand:
        k = self.pid
        flat = reference.flat
        e_p = state.p - flat.p
        e_v = state.v - flat.v
        self.pos_integral = np.clip(self.pos_integral + e_p * dt, -k.int_limit, k.int_limit)
        a = -k.kp_pos * e_p - k.kd_pos * e_v - k.ki_pos * self.pos_integral

        roll, pitch, yaw = euler_zyx(state.q)
        roll_d, pitch_d = _tilt_targets(a, flat.psi, self.g, k.max_tilt)
        yaw_err = np.arctan2(np.sin(flat.psi - yaw), np.cos(flat.psi - yaw))
        att_err = np.array([roll_d - roll, pitch_d - pitch, yaw_err])
        tau = self.nominal_inertia @ (k.kp_att * att_err - k.kd_att * state.omega)

        f = self.mass * (self.g + a[2]) / max(np.cos(roll) * np.cos(pitch), 0.5)
        return self._finish(f, tau, self.nominal_allocation, reference, morph, a)


def hover_model(inertia: np.ndarray, g: float):
    """
    Linear hover model, state [p, v, roll/pitch/yaw, omega], input [dT/m, tau].
    """
    A = np.zeros((12, 12))
    A[0:3, 3:6] = np.eye(3)
    A[3, 7] = g
    A[4, 6] = -g
    A[6:9, 9:12] = np.eye(3)
    B = np.zeros((12, 4))
    B[5, 0] = 1.0
    B[9:12, 1:4] = np.linalg.inv(inertia)
    return A, B


def lqr_gain(inertia: np.ndarray, weights: LqrWeights, g: float) -> np.ndarray:
    A, B = hover_model(inertia, g)
    P = solve_continuous_are(A, B, weights.Q, weights.R)
    return np.linalg.solve(weights.R, B.T @ P)


class LqrController(BaseController):
    """Hover LQR with acceleration feedforward; the gain follows the current inertia."""

    name = "lqr"

    def __init__(self, geom, drag=None, gains=None, g=9.81, weights: Optional[LqrWeights] = None):
        self.weights = weights if weights is not None else LqrWeights()
        super().__init__(geom, drag, gains, g)

    def reset(self):
        self.design_inertia: Optional[np.ndarray] = None
        self.K: Optional[np.ndarray] = None

    def _gain(self, inertia: np.ndarray) -> np.ndarray:
        stale = self.design_inertia is None or (
            np.linalg.norm(inertia - self.design_inertia) > self.weights.refresh_tolerance
            * np.linalg.norm(self.design_inertia))
        if stale:
            self.K = lqr_gain(inertia, self.weights, self.g)
            self.design_inertia = inertia.copy()
        return self.K

    def compute(self, t, state: RigidState, morph: MorphState, props, reference: TrackingReference,
                dt, accel_z=None) -> ControlCommand:
        flat = reference.flat
        K = self._gain(props.inertia)
        roll, pitch, yaw = euler_zyx(state.q)
        roll_d, pitch_d = _tilt_targets(flat.a, flat.psi, self.g, 0.6)
        yaw_err = np.arctan2(np.sin(yaw - flat.psi), np.cos(yaw - flat.psi))
        x = np.concatenate([
            state.p - flat.p,
            state.v - flat.v,
            [roll - roll_d, pitch - pitch_d, yaw_err],
            state.omega,
        ])
        u = -K @ x
        f = self.mass * (self.g + flat.a[2] + u[0]) / max(np.cos(roll) * np.cos(pitch), 0.5)
        M = allocation_matrix(self.geom, props)
        return self._finish(f, u[1:], M, reference, morph, flat.a)


CONTROLLERS = {
    "proposed": NonlinearController,
    "pid": PidController,
    "lqr": LqrController,
}
