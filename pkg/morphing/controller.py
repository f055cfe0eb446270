"""
Cascaded tracking controller for the morphing quadrotor.

    position loop   a_cmd = K_a a_d + R D R^T v_d - a_fb + g e_3
    attitude loop   omega_cmd = K_A sgn(q_e0) q_e,1:3 + omega_ff,  q_e = q^-1 q_d
    rate loop       omega_dot_cmd = PID(omega_cmd - omega)
    torque law      tau = J (omega_dot_ff + omega_dot_cmd) + omega_cmd x J omega_cmd
                          + A R_d^T v + B omega_cmd
    thrust          f = m (a_cmd . z_B) / H   with H estimated online by RLS
    servos          PD on the arm-angle error, rate limited

Inertia, CoG and the allocation matrix are recomputed from the current arm
angles on every call.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .dynamics import GRAVITY, DragParams, RigidState
from .errors import SingularAllocation
from .flatness import FlatOutputs, FlatReference, flat_to_reference, thrust_frame
from .morphology import GeometryParams, InertialProps, MorphState, allocation_matrix
from .rotations import matrix_to_quat, quat_conjugate, quat_multiply


def _diag3(value) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return np.eye(3) * float(value)
    if value.shape == (3,):
        return np.diag(value)
    return value.reshape(3, 3)


@dataclass(frozen=True)
class ControllerGains:
    K_a: np.ndarray = field(default_factory=lambda: np.eye(3))
    kp_pos: np.ndarray = field(default_factory=lambda: np.diag([16.0, 16.0, 16.0]))
    kv_pos: np.ndarray = field(default_factory=lambda: np.diag([8.0, 8.0, 8.0]))
    ki_vel: np.ndarray = field(default_factory=lambda: np.diag([0.5, 0.5, 0.5]))
    vel_int_limit: float = 1.0
    K_A: np.ndarray = field(default_factory=lambda: np.diag([30.0, 30.0, 12.0]))
    rate_kp: np.ndarray = field(default_factory=lambda: np.diag([40.0, 40.0, 20.0]))
    rate_ki: np.ndarray = field(default_factory=lambda: np.diag([2.0, 2.0, 1.0]))
    rate_kd: np.ndarray = field(default_factory=lambda: np.diag([0.02, 0.02, 0.0]))
    rate_int_limit: float = 0.5
    servo_kp: float = 5.0
    servo_kd: float = 0.3
    servo_slew: float = 3.0
    rls_rho: float = 0.995
    rls_p0: float = 100.0
    rls_h0: float = 1.0
    rls_enabled: bool = True

    def __post_init__(self):
        for name in ("K_a", "kp_pos", "kv_pos", "ki_vel", "K_A", "rate_kp", "rate_ki", "rate_kd"):
            matrix = _diag3(getattr(self, name))
            if np.any(np.diag(matrix) < 0.0):
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, matrix)
        if self.vel_int_limit <= 0.0 or self.rate_int_limit <= 0.0:
            raise ValueError("integrator limits must be positive")
        if min(self.servo_kp, self.servo_kd) < 0.0 or self.servo_slew <= 0.0:
            raise ValueError("servo gains must be non-negative and slew positive")
        if not 0.9 < self.rls_rho <= 1.0:
            raise ValueError("RLS forgetting factor must lie in (0.9, 1]")
        if self.rls_p0 <= 0.0 or self.rls_h0 <= 0.0:
            raise ValueError("RLS P0 and H0 must be positive")


@dataclass(frozen=True)
class RlsState:
    H: float = 1.0
    P: float = 100.0
    rho: float = 0.995
    K: float = 0.0
    c: float = 0.0


@dataclass(frozen=True)
class ControlCommand:
    f_cmd: float
    tau_cmd: np.ndarray
    rotor_thrusts: np.ndarray
    alpha_cmd: np.ndarray
    a_cmd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    H: float = 1.0


@dataclass(frozen=True)
class TrackingReference:
    flat: FlatOutputs
    ref: FlatReference
    alpha: float
    alpha_dot: float = 0.0


# ----------------------------------------------------------------------
# Pure loop pieces
# ----------------------------------------------------------------------

def position_loop(state: RigidState, flat: FlatOutputs, gains: ControllerGains,
                  drag: Optional[DragParams] = None, vel_integral: Optional[np.ndarray] = None,
                  g: float = GRAVITY) -> np.ndarray:
    """Commanded acceleration; the feedback term is built from measured minus desired errors."""
    integral = np.zeros(3) if vel_integral is None else vel_integral
    R = state.rotation
    a_ff = np.zeros(3) if drag is None else R @ drag.D @ R.T @ flat.v
    a_fb = gains.kp_pos @ (state.p - flat.p) + gains.kv_pos @ (state.v - flat.v) + gains.ki_vel @ integral
    return gains.K_a @ flat.a + a_ff - a_fb + np.array([0.0, 0.0, g])


def desired_attitude(a_cmd: np.ndarray, psi_d: float) -> np.ndarray:
    R, _, _, _, _ = thrust_frame(np.atleast_2d(a_cmd), np.atleast_1d(float(psi_d)), strict=True)
    return R[0]


def attitude_loop(a_cmd: np.ndarray, psi_d: float, state: RigidState, gains: ControllerGains,
                  omega_ff: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Desired quaternion and body-rate command from the quaternion error q^-1 q_d."""
    q_d = matrix_to_quat(desired_attitude(a_cmd, psi_d))
    q_e = quat_multiply(quat_conjugate(state.q), q_d)
    sign = 1.0 if q_e[0] >= 0.0 else -1.0
    omega_cmd = gains.K_A @ (sign * q_e[1:])
    if omega_ff is not None:
        omega_cmd = omega_cmd + omega_ff
    return q_d, omega_cmd


def torque_loop(omega_cmd: np.ndarray, omega_dot_cmd: np.ndarray, omega_dot_ff: np.ndarray,
                state: RigidState, props: InertialProps, drag: Optional[DragParams] = None,
                R_d: Optional[np.ndarray] = None) -> np.ndarray:
    J = props.inertia
    tau = J @ (omega_dot_ff + omega_dot_cmd) + np.cross(omega_cmd, J @ omega_cmd)
    if drag is not None:
        R_d = state.rotation if R_d is None else R_d
        tau = tau + drag.A @ (R_d.T @ state.v) + drag.B @ omega_cmd
    return tau


def rls_update(rls: RlsState, a_cmd_z: float, a_meas_z: float) -> RlsState:
    """
    One forgetting-factor least-squares step on the thrust slope H.

    The regressor is the normalized thrust c = a_cmd_z / H_{n-1} that was
    actually commanded, and a_meas_z the thrust acceleration it produced.
    """
    c = a_cmd_z / rls.H
    gain = rls.P * c / (rls.rho + c * rls.P * c)
    P = (1.0 - gain * c) * rls.P / rls.rho
    H = max(rls.H + gain * (a_meas_z - c * rls.H), 1e-3)
    return RlsState(H=H, P=max(P, 1e-12), rho=rls.rho, K=gain, c=a_cmd_z / H)


def _interval(base: np.ndarray, direction: np.ndarray, lo: float, hi: float) -> Tuple[float, float]:
    """Scalars s with lo <= base + s * direction <= hi for every entry."""
    s_min, s_max = -np.inf, np.inf
    for b, d in zip(base, direction):
        if abs(d) < 1e-15:
            if b < lo - 1e-12 or b > hi + 1e-12:
                return np.inf, -np.inf
            continue
        a1, a2 = (lo - b) / d, (hi - b) / d
        s_min, s_max = max(s_min, min(a1, a2)), min(s_max, max(a1, a2))
    return s_min, s_max


def allocate(f_cmd: float, tau_cmd: np.ndarray, M: np.ndarray, u_max: float) -> np.ndarray:
    """
    Rotor thrusts for a wrench command.

    When the exact inverse saturates, roll and pitch torque are kept, the yaw
    torque is scaled down, then the collective thrust is moved into the
    feasible band, and finally every rotor is clipped to [0, u_max].
    """
    try:
        M_inv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularAllocation(str(exc)) from exc
    U = M_inv @ np.concatenate(([f_cmd], tau_cmd))
    if np.all(U >= -1e-12) and np.all(U <= u_max + 1e-12):
        return np.clip(U, 0.0, u_max)

    def yaw_scale(f):
        base = M_inv @ np.array([f, tau_cmd[0], tau_cmd[1], 0.0])
        lo, hi = _interval(base, M_inv[:, 3] * tau_cmd[2], 0.0, u_max)
        return float(np.clip(hi, 0.0, 1.0)) if lo <= min(hi, 1.0) else 0.0

    s = yaw_scale(f_cmd)
    rest = M_inv @ np.array([0.0, tau_cmd[0], tau_cmd[1], s * tau_cmd[2]])
    f_lo, f_hi = _interval(rest, M_inv[:, 0], 0.0, u_max)
    f = float(np.clip(f_cmd, f_lo, f_hi)) if f_lo <= f_hi else f_cmd
    s = yaw_scale(f)
    U = M_inv @ np.array([f, tau_cmd[0], tau_cmd[1], s * tau_cmd[2]])
    return np.clip(U, 0.0, u_max)


def servo_loop(alpha_d, alpha_hat, alpha_hat_dot, gains: ControllerGains, alpha_dot_d=0.0) -> np.ndarray:
    """Servo rate command K_p e + K_d e_dot, clipped to the slew limit."""
    error = np.asarray(alpha_d, dtype=float) - np.asarray(alpha_hat, dtype=float)
    error_dot = np.asarray(alpha_dot_d, dtype=float) - np.asarray(alpha_hat_dot, dtype=float)
    command = np.asarray(alpha_dot_d, dtype=float) + gains.servo_kp * error + gains.servo_kd * error_dot
    return np.clip(command, -gains.servo_slew, gains.servo_slew)


# ----------------------------------------------------------------------
# Controllers
# ----------------------------------------------------------------------

class BaseController(ABC):
    """Common interface of the tracking controllers driven by the simulator."""

    name = "base"

    def __init__(self, geom: GeometryParams, drag: Optional[DragParams] = None,
                 gains: Optional[ControllerGains] = None, g: float = GRAVITY):
        self.geom = geom
        self.drag = drag if drag is not None else DragParams()
        self.gains = gains if gains is not None else ControllerGains()
        self.mass = geom.total_mass
        self.g = g
        self.reset()

    @abstractmethod
    def reset(self):
        """Clear integrators and estimator state."""

    @abstractmethod
    def compute(self, t: float, state: RigidState, morph: MorphState, props: InertialProps,
                reference: TrackingReference, dt: float, accel_z: Optional[float] = None) -> ControlCommand:
        """One control update."""

    def servo_command(self, reference: TrackingReference, morph: MorphState) -> np.ndarray:
        return servo_loop(np.full(4, reference.alpha), morph.alpha, morph.alpha_dot, self.gains,
                          np.full(4, reference.alpha_dot))

    def _finish(self, f: float, tau: np.ndarray, M: np.ndarray, reference: TrackingReference,
                morph: MorphState, a_cmd: np.ndarray, H: float = 1.0) -> ControlCommand:
        f = max(f, 0.0)
        U = allocate(f, tau, M, self.geom.max_rotor_thrust)
        return ControlCommand(f_cmd=f, tau_cmd=tau, rotor_thrusts=U,
                              alpha_cmd=self.servo_command(reference, morph), a_cmd=a_cmd, H=H)


class NonlinearController(BaseController):
    """Drag-aware cascade with online thrust-slope estimation."""

    name = "proposed"

    def reset(self):
        self.vel_integral = np.zeros(3)
        self.rate_integral = np.zeros(3)
        self.prev_omega: Optional[np.ndarray] = None
        self.prev_a_cmd_z: Optional[float] = None
        g = self.gains
        self.rls = RlsState(H=g.rls_h0, P=g.rls_p0, rho=g.rls_rho)

    def rate_pid(self, omega_cmd: np.ndarray, omega: np.ndarray, dt: float) -> np.ndarray:
        g = self.gains
        error = omega_cmd - omega
        self.rate_integral = np.clip(self.rate_integral + error * dt, -g.rate_int_limit, g.rate_int_limit)
        derivative = np.zeros(3) if self.prev_omega is None else (omega - self.prev_omega) / dt
        self.prev_omega = omega.copy()
        return g.rate_kp @ error + g.rate_ki @ self.rate_integral - g.rate_kd @ derivative

    def compute(self, t, state, morph, props, reference, dt, accel_z=None):
        g = self.gains
        if g.rls_enabled and accel_z is not None and self.prev_a_cmd_z is not None \
                and abs(self.prev_a_cmd_z) > 1e-6:
            self.rls = rls_update(self.rls, self.prev_a_cmd_z, accel_z)

        flat = reference.flat
        self.vel_integral = np.clip(self.vel_integral + (state.v - flat.v) * dt,
                                    -g.vel_int_limit, g.vel_int_limit)
        a_cmd = position_loop(state, flat, g, self.drag, self.vel_integral, self.g)
        q_d, omega_cmd = attitude_loop(a_cmd, flat.psi, state, g, reference.ref.omega_ff)
        omega_dot_cmd = self.rate_pid(omega_cmd, state.omega, dt)
        R_d = desired_attitude(a_cmd, flat.psi)
        tau = torque_loop(omega_cmd, omega_dot_cmd, reference.ref.omega_dot_ff, state, props, self.drag, R_d)

        a_cmd_z = float(a_cmd @ state.rotation[:, 2])
        self.prev_a_cmd_z = a_cmd_z
        H = self.rls.H if g.rls_enabled else 1.0
        f = self.mass * a_cmd_z / H
        M = allocation_matrix(self.geom, props)
        return self._finish(f, tau, M, reference, morph, a_cmd, H)


# ----------------------------------------------------------------------
# Reference sources
# ----------------------------------------------------------------------

class ReferenceSource(ABC):
    """Time-indexed flat outputs and arm-angle targets."""

    duration: float = 0.0

    @abstractmethod
    def flat_at(self, t: float) -> FlatOutputs:
        ...

    def alpha_at(self, t: float) -> Tuple[float, float]:
        return float(np.pi / 4), 0.0

    def sample(self, t: float, mass: float, drag: Optional[DragParams] = None,
               g: float = GRAVITY) -> TrackingReference:
        flat = self.flat_at(t)
        alpha, alpha_dot = self.alpha_at(t)
        return TrackingReference(flat, flat_to_reference(flat, mass, drag, g), alpha, alpha_dot)


class HoverReference(ReferenceSource):
    def __init__(self, position, psi: float = 0.0, duration: float = 5.0,
                 alpha: Optional[Callable[[float], Tuple[float, float]]] = None):
        self.position = np.asarray(position, dtype=float)
        self.psi = psi
        self.duration = duration
        self._alpha = alpha

    def flat_at(self, t):
        return FlatOutputs.hover(self.position, self.psi)

    def alpha_at(self, t):
        return self._alpha(t) if self._alpha is not None else super().alpha_at(t)


class TrajectoryReference(ReferenceSource):
    """Planned trajectory and morph profile; holds the goal after the end."""

    def __init__(self, trajectory, profile, psi: float = 0.0, hold: float = 0.0):
        self.trajectory = trajectory
        self.profile = profile
        self.psi = psi
        self.duration = trajectory.total_duration + hold

    def flat_at(self, t):
        tc = float(np.clip(t, 0.0, self.trajectory.total_duration))
        if t > self.trajectory.total_duration:
            return FlatOutputs.hover(self.trajectory.evaluate(tc, 0), self.psi)
        d = [self.trajectory.evaluate(tc, k) for k in range(5)]
        return FlatOutputs(d[0], d[1], d[2], d[3], self.psi, 0.0, d[4])

    def alpha_at(self, t):
        tc = float(np.clip(t, 0.0, self.trajectory.total_duration))
        return float(self.profile.alpha_at(tc)), float(self.profile.rate_at(tc))


class CircleReference(ReferenceSource):
    """Constant-speed horizontal circle with a continuously oscillating arm angle."""

    def __init__(self, center, radius: float = 1.0, speed: float = 1.0, duration: float = 10.0,
                 psi: float = 0.0, morph_period: float = 4.0, morph_amplitude: float = np.pi / 8):
        self.center = np.asarray(center, dtype=float)
        self.radius = radius
        self.speed = speed
        self.duration = duration
        self.psi = psi
        self.morph_period = morph_period
        self.morph_amplitude = morph_amplitude

    def flat_at(self, t):
        w = self.speed / self.radius
        c, s = np.cos(w * t), np.sin(w * t)
        r = self.radius
        p = self.center + r * np.array([c, s, 0.0])
        v = r * w * np.array([-s, c, 0.0])
        a = -r * w**2 * np.array([c, s, 0.0])
        j = r * w**3 * np.array([s, -c, 0.0])
        snap = r * w**4 * np.array([c, s, 0.0])
        return FlatOutputs(p, v, a, j, self.psi, 0.0, snap)

    def alpha_at(self, t):
        phase = 2.0 * np.pi * t / self.morph_period
        alpha = self.morph_amplitude * (1.0 + np.cos(phase))
        alpha_dot = -self.morph_amplitude * 2.0 * np.pi / self.morph_period * np.sin(phase)
        return float(alpha), float(alpha_dot)
