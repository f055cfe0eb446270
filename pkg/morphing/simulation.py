"""
Closed-loop simulation: controller, servo plant and rigid-body dynamics.

Physics and control both run at 1/dt. Each step the inertia, CoG and
allocation matrix are rebuilt from the measured arm angles, the controller's
rotor thrusts are scaled by the folding thrust efficiency and integrated with
RK4 while the servos follow their rate commands through a first-order lag.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .controller import BaseController, ReferenceSource
from .dynamics import GRAVITY, DragParams, RigidState, WrenchInput, rk4_step
from .morphology import GeometryParams, MorphState, allocation_matrix, inertial_props

TELEMETRY_COLUMNS: List[str] = (
    ["t", "p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "q_w", "q_x", "q_y", "q_z",
     "omega_x", "omega_y", "omega_z", "alpha_1", "alpha_2", "alpha_3", "alpha_4",
     "f", "tau_x", "tau_y", "tau_z", "U_1", "U_2", "U_3", "U_4", "H_n",
     "ref_p_x", "ref_p_y", "ref_p_z", "err_norm"]
)
COLUMN = {name: i for i, name in enumerate(TELEMETRY_COLUMNS)}


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 0.001
    duration: Optional[float] = None
    thrust_loss: float = 0.0
    servo_tau: float = 0.08
    noise_std: float = 0.0
    seed: int = 0
    g: float = GRAVITY

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.01:
            raise ValueError("simulation dt must lie in (0, 0.01] s")
        if self.duration is not None and self.duration < 0.0:
            raise ValueError("duration must be non-negative")
        if not 0.0 <= self.thrust_loss < 1.0:
            raise ValueError("thrust_loss must lie in [0, 1)")
        if self.servo_tau <= 0.0 or self.noise_std < 0.0:
            raise ValueError("servo_tau must be positive and noise_std non-negative")


@dataclass
class SimulationLog:
    rows: np.ndarray
    energy: float

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, COLUMN[name]]

    @property
    def errors(self) -> np.ndarray:
        return self.column("err_norm")


def thrust_efficiency(alpha: np.ndarray, thrust_loss: float) -> float:
    """1 at the X shape, 1 - thrust_loss when every arm is folded to H (or fully out)."""
    return float(1.0 - thrust_loss * np.mean(1.0 - np.sin(2.0 * np.asarray(alpha))))


def servo_step(morph: MorphState, rate_cmd: np.ndarray, servo_tau: float, dt: float) -> MorphState:
    rate = morph.alpha_dot + (np.asarray(rate_cmd) - morph.alpha_dot) * (dt / servo_tau)
    alpha = np.clip(morph.alpha + rate * dt, 0.0, 0.5 * np.pi)
    return MorphState(alpha, rate)


def _measure(state: RigidState, rng: np.random.Generator, std: float) -> RigidState:
    if std <= 0.0:
        return state
    return RigidState(
        p=state.p + rng.normal(0.0, std, 3),
        v=state.v + rng.normal(0.0, std, 3),
        q=state.q,
        omega=state.omega + rng.normal(0.0, std, 3),
    )


def simulate(controller: BaseController, reference: ReferenceSource, geom: GeometryParams,
             drag: Optional[DragParams] = None, config: SimulationConfig = SimulationConfig(),
             initial_state: Optional[RigidState] = None,
             initial_morph: Optional[MorphState] = None) -> SimulationLog:
    drag = drag if drag is not None else DragParams()
    mass = geom.total_mass
    duration = reference.duration if config.duration is None else config.duration
    steps = int(round(duration / config.dt))
    rng = np.random.default_rng(config.seed)

    state = initial_state if initial_state is not None else RigidState(p=reference.flat_at(0.0).p)
    morph = initial_morph if initial_morph is not None else MorphState.uniform(reference.alpha_at(0.0)[0])
    controller.reset()

    rows = np.zeros((steps + 1, len(TELEMETRY_COLUMNS)))
    energy = 0.0
    accel_z: Optional[float] = None
    for n in range(steps + 1):
        t = n * config.dt
        props = inertial_props(geom, morph)
        ref = reference.sample(t, mass, controller.drag, config.g)
        cmd = controller.compute(t, _measure(state, rng, config.noise_std), morph, props, ref,
                                 config.dt, accel_z)
        eta = thrust_efficiency(morph.alpha, config.thrust_loss)
        wrench = allocation_matrix(geom, props) @ (eta * cmd.rotor_thrusts)
        f, tau = max(float(wrench[0]), 0.0), wrench[1:]

        error = float(np.linalg.norm(state.p - ref.flat.p))
        rows[n] = np.concatenate([
            [t], state.p, state.v, state.q, state.omega, morph.alpha,
            [f], tau, cmd.rotor_thrusts, [cmd.H], ref.flat.p, [error],
        ])
        if n == steps:
            break
        energy += f * f * config.dt
        state = rk4_step(state, WrenchInput(f, tau), props, drag, mass, config.dt, config.g)
        accel_z = f / mass
        morph = servo_step(morph, cmd.alpha_cmd, config.servo_tau, config.dt)
    return SimulationLog(rows=rows, energy=energy)
