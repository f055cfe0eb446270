"""
Spatial-temporal trajectory optimization over the minimum-jerk class.

The decision vector is x = [q (K-1 waypoints), tau (K log-durations)] with
T = exp(tau). The objective is

    J = sum_k jerk_k + rho_T * sum_k T_k
        + trapezoidal quadrature of cubic penalties max(G, 0)^3 on
          speed, body rate and full-body corridor violation

and is minimized with L-BFGS. Arm angles are fixed before the continuous
solve: every polytope gets the widest configuration between H and X whose
body box fits its cross-section, segments next to a narrower neighbour are
planned with the conservative extents of both, and a smooth morph profile is
scheduled on the final timing.
"""

import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize

from .corridor import Corridor, Polytope, point_violation
from .dynamics import GRAVITY, DragParams
from .errors import DidNotConverge, InfeasibleStart, MorphInfeasible
from .flatness import attitude_and_rates
from .morphology import GeometryParams, MorphState, box_vertices, half_extents_for_angle
from .trajectory import BoundaryState, MincoTrajectory, basis, solve_coefficients

X_ALPHA = np.pi / 4
H_ALPHA = 0.0
SMOOTHSTEP_PEAK = 1.875
FD_STEP = 1e-6
LOG_T_BOUNDS = (np.log(1e-3), np.log(1e3))
_VERTEX_SIGNS = box_vertices(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class OptimizerWeights:
    rho_T: float = 20.0
    rho_v: float = 1e4
    rho_w: float = 1e4
    rho_c: float = 1e4
    v_max: float = 2.0
    omega_max: float = 3.0
    samples: int = 16
    chi: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    memory: int = 16
    max_iter: int = 3000
    tolerance: float = 1e-5

    def __post_init__(self):
        for name in ("rho_T", "rho_v", "rho_w", "rho_c"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        if self.samples < 8:
            raise ValueError("at least 8 quadrature intervals per piece are required")
        if not (self.v_max > 0.0 and self.omega_max > 0.0):
            raise ValueError("v_max and omega_max must be positive")
        if len(self.chi) != 3 or min(self.chi) < 0.0:
            raise ValueError("chi needs three non-negative entries")
        object.__setattr__(self, "chi", tuple(float(c) for c in self.chi))


@dataclass(frozen=True)
class MorphPolicy:
    """How arm angles are chosen and scheduled."""
    enabled: bool = True
    clearance: float = 0.01
    duration: float = 0.5
    servo_rate: float = 3.0

    def __post_init__(self):
        if self.clearance < 0.0 or self.duration <= 0.0 or self.servo_rate <= 0.0:
            raise ValueError("morph clearance must be >= 0, duration and servo rate > 0")


@dataclass(frozen=True)
class MorphRamp:
    start: float
    duration: float
    delta: float


@dataclass(frozen=True)
class MorphProfile:
    """Common arm angle over time: a start value plus quintic smoothstep ramps."""
    alpha0: float
    ramps: Tuple[MorphRamp, ...] = ()

    @classmethod
    def constant(cls, alpha: float) -> "MorphProfile":
        return cls(float(alpha), ())

    def alpha_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        alpha = np.full(t.shape, self.alpha0)
        for ramp in self.ramps:
            s = np.clip((t - ramp.start) / ramp.duration, 0.0, 1.0)
            alpha = alpha + ramp.delta * s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
        return np.clip(alpha, 0.0, 0.5 * np.pi)

    def rate_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        rate = np.zeros(t.shape)
        for ramp in self.ramps:
            s = np.clip((t - ramp.start) / ramp.duration, 0.0, 1.0)
            rate = rate + ramp.delta / ramp.duration * 30.0 * s**2 * (1.0 - s) ** 2
        return rate

    def evaluate(self, t: float) -> MorphState:
        return MorphState.uniform(float(self.alpha_at(t)), float(self.rate_at(t)))

    @property
    def min_alpha(self) -> float:
        values = [self.alpha0]
        for ramp in self.ramps:
            values.append(values[-1] + ramp.delta)
        return float(min(values))


@dataclass(frozen=True)
class PlanResiduals:
    max_speed: float
    max_omega: float
    max_violation: float


@dataclass
class PlanResult:
    trajectory: MincoTrajectory
    morph_profile: MorphProfile
    cost: float
    residuals: PlanResiduals
    iterations: int
    wall_time_ms: float
    success: bool
    segment_alpha: np.ndarray
    breakdown: Dict[str, float] = field(default_factory=dict)
    message: str = ""


# ----------------------------------------------------------------------
# Arm-angle selection
# ----------------------------------------------------------------------

def _yawed_extents(geom: GeometryParams, alpha, yaw: float):
    r, w = half_extents_for_angle(geom, alpha)
    c, s = abs(np.cos(yaw)), abs(np.sin(yaw))
    return c * r + s * w, s * r + c * w


def polytope_clearance(polytope: Polytope, geom: GeometryParams, alpha: float, yaw: float = 0.0) -> float:
    """Smallest margin between the level body box and the polytope's axis-aligned size."""
    lower, upper = polytope.bounds()
    half = 0.5 * (upper - lower)
    ex, ey = _yawed_extents(geom, alpha, yaw)
    return float(min(half[0] - ex, half[1] - ey, half[2] - geom.body_half_height))


def required_alpha(polytope: Polytope, geom: GeometryParams, yaw: float = 0.0,
                   clearance: float = 0.01, morph_enabled: bool = True, index: int = 0) -> float:
    """Widest common arm angle in [H, X] that keeps `clearance` inside the polytope."""
    def margin(alpha):
        return polytope_clearance(polytope, geom, alpha, yaw) - clearance

    if margin(X_ALPHA) >= -1e-12:
        return X_ALPHA
    if not morph_enabled:
        raise MorphInfeasible(index, "X configuration does not fit and morphing is disabled")

    grid = np.linspace(X_ALPHA, H_ALPHA, 33)
    for previous, alpha in zip(grid[:-1], grid[1:]):
        if margin(alpha) >= -1e-12:
            if abs(margin(alpha)) <= 1e-12:
                return float(alpha)
            return float(brentq(margin, alpha, previous, xtol=1e-10)) - 1e-9
    raise MorphInfeasible(index, f"clearance at H is {margin(H_ALPHA) + clearance:.4f} m")


def corridor_alphas(corridor: Corridor, geom: GeometryParams, policy: MorphPolicy,
                    yaw: float = 0.0) -> np.ndarray:
    """Required common arm angle for every corridor polytope."""
    return np.array([
        required_alpha(poly, geom, yaw, policy.clearance, policy.enabled, index=k)
        for k, poly in enumerate(corridor.polytopes)
    ])


def segment_extents(geom: GeometryParams, segment_alpha: np.ndarray) -> np.ndarray:
    """
    (K, 3) half extents used while planning each piece.

    A piece uses its own angle plus any narrower neighbour angle, so the
    morph ramp that happens inside it stays covered.
    """
    K = len(segment_alpha)
    extents = np.zeros((K, 3))
    for k in range(K):
        candidates = [segment_alpha[k]]
        for n in (k - 1, k + 1):
            if 0 <= n < K and segment_alpha[n] < segment_alpha[k]:
                candidates.append(segment_alpha[n])
        r, w = half_extents_for_angle(geom, np.array(candidates))
        extents[k] = (np.max(r), np.max(w), geom.body_half_height)
    return extents


def schedule_morph(corridor: Corridor, trajectory: MincoTrajectory, geom: GeometryParams,
                   policy: MorphPolicy = MorphPolicy(), yaw: float = 0.0,
                   segment_alpha: Optional[np.ndarray] = None) -> MorphProfile:
    """
    Arm-angle profile along a solved trajectory.

    A narrowing change finishes at the junction where the narrower polytope
    starts; a widening change starts at the junction where it ends. Each ramp
    lasts long enough for the smoothstep peak rate to respect the servo rate.
    """
    if segment_alpha is None:
        poly_alpha = corridor_alphas(corridor, geom, policy, yaw)
        segment_alpha = poly_alpha[np.asarray(corridor.assignment)]
    junctions = trajectory.junction_times
    ramps: List[MorphRamp] = []
    for i in range(1, len(segment_alpha)):
        delta = float(segment_alpha[i] - segment_alpha[i - 1])
        if abs(delta) < 1e-12:
            continue
        duration = max(policy.duration, SMOOTHSTEP_PEAK * abs(delta) / policy.servo_rate)
        start = junctions[i] - duration if delta < 0.0 else junctions[i]
        ramps.append(MorphRamp(start, duration, delta))
    return MorphProfile(float(segment_alpha[0]), tuple(ramps))


# ----------------------------------------------------------------------
# Problem definition
# ----------------------------------------------------------------------

def trapezoid_times(arc: np.ndarray, cruise: float, accel: float) -> np.ndarray:
    """
    Time at which a rest-to-rest trapezoidal speed profile reaches each arc length.

    Short paths never reach `cruise` and follow the triangular profile, so
    pieces near either end get the time needed to speed up or slow down.
    """
    arc = np.asarray(arc, dtype=float)
    total = float(arc[-1])
    ramp = min(0.5 * cruise**2 / accel, 0.5 * total)
    peak = np.sqrt(2.0 * accel * ramp)
    t_ramp = peak / accel
    duration = 2.0 * t_ramp + (total - 2.0 * ramp) / cruise if total > 2.0 * ramp else 2.0 * t_ramp
    head = np.sqrt(2.0 * np.clip(arc, 0.0, None) / accel)
    middle = t_ramp + (arc - ramp) / cruise
    tail = duration - np.sqrt(2.0 * np.clip(total - arc, 0.0, None) / accel)
    return np.where(arc <= ramp, head, np.where(arc >= total - ramp, tail, middle))


@dataclass
class PlanProblem:
    corridor: Corridor
    boundary: BoundaryState
    geom: GeometryParams
    weights: OptimizerWeights
    q0: np.ndarray
    T0: np.ndarray
    segment_alpha: np.ndarray
    drag: DragParams = field(default_factory=DragParams)
    policy: MorphPolicy = field(default_factory=MorphPolicy)
    yaw: float = 0.0
    g: float = GRAVITY

    def __post_init__(self):
        K = len(self.corridor.assignment)
        self.q0 = np.asarray(self.q0, dtype=float).reshape(-1, 3)
        self.T0 = np.asarray(self.T0, dtype=float).reshape(-1)
        if self.T0.size != K or self.q0.shape[0] != K - 1:
            raise ValueError("initial guess does not match the corridor assignment")
        first = self.corridor.polytope_for_segment(0)
        last = self.corridor.polytope_for_segment(K - 1)
        if point_violation(first, self.boundary.d0[0]) > 1e-9:
            raise InfeasibleStart("start state lies outside the first polytope")
        if point_violation(last, self.boundary.dg[0]) > 1e-9:
            raise InfeasibleStart("goal state lies outside the last polytope")

        extents = segment_extents(self.geom, np.asarray(self.segment_alpha))
        self.vertices = _VERTEX_SIGNS[None, :, :] * extents[:, None, :]
        polys = [self.corridor.polytope_for_segment(k) for k in range(K)]
        m = max(len(p.faces) for p in polys)
        self.face_A = np.zeros((K, m, 3))
        self.face_b = np.full((K, m), 1e9)
        for k, poly in enumerate(polys):
            self.face_A[k, :len(poly.faces)] = poly.A
            self.face_b[k, :len(poly.faces)] = poly.b

    @property
    def n_pieces(self) -> int:
        return self.T0.size

    @classmethod
    def from_path(cls, waypoints: np.ndarray, corridor: Corridor, geom: GeometryParams,
                  weights: OptimizerWeights = OptimizerWeights(), drag: Optional[DragParams] = None,
                  policy: MorphPolicy = MorphPolicy(), yaw: float = 0.0,
                  boundary: Optional[BoundaryState] = None, accel: float = 2.0) -> "PlanProblem":
        """Initial waypoints from the path and a trapezoidal time allocation at v_max / 2."""
        waypoints = np.asarray(waypoints, dtype=float)
        if boundary is None:
            boundary = BoundaryState.rest(waypoints[0], waypoints[-1])
        pts = waypoints.copy()
        pts[0], pts[-1] = boundary.d0[0], boundary.dg[0]

        lengths = np.maximum(np.linalg.norm(np.diff(pts, axis=0), axis=1), 1e-3)
        arc = np.concatenate(([0.0], np.cumsum(lengths)))
        T0 = np.maximum(np.diff(trapezoid_times(arc, 0.5 * weights.v_max, accel)), 0.05)

        poly_alpha = corridor_alphas(corridor, geom, policy, yaw)
        segment_alpha = poly_alpha[np.asarray(corridor.assignment)]
        return cls(corridor=corridor, boundary=boundary, geom=geom, weights=weights,
                   q0=pts[1:-1], T0=T0, segment_alpha=segment_alpha,
                   drag=drag if drag is not None else DragParams(), policy=policy, yaw=yaw)


# ----------------------------------------------------------------------
# Objective
# ----------------------------------------------------------------------

def _rate_penalty(problem: PlanProblem, omega: np.ndarray) -> np.ndarray:
    w = problem.weights
    violation = np.maximum(np.sum(omega * omega, axis=-1) - w.omega_max**2, 0.0)
    return w.rho_w * w.chi[1] * violation**3


def _collision_terms(problem: PlanProblem, pos: np.ndarray, R: np.ndarray, seg: np.ndarray):
    """Cubic corridor penalty over the 8 body vertices and its gradient w.r.t. position."""
    w = problem.weights
    A, b = problem.face_A[seg], problem.face_b[seg]
    world = pos[:, None, :] + np.einsum("nij,nvj->nvi", R, problem.vertices[seg])
    G = np.einsum("nmi,nvi->nvm", A, world) - b[:, None, :]
    active = np.maximum(G, 0.0)
    scale = w.rho_c * w.chi[2]
    value = scale * np.sum(active**3, axis=(1, 2))
    grad_p = scale * np.einsum("nvm,nmi->ni", 3.0 * active**2, A)
    return value, grad_p


def _sample_penalties(problem: PlanProblem, pos, vel, acc, jerk, seg):
    """Penalty value per sample and its gradient w.r.t. (pos, vel, acc, jerk)."""
    w = problem.weights
    n = pos.shape[0]
    grads = [np.zeros((n, 3)) for _ in range(4)]
    D = problem.drag.D

    speed_violation = np.maximum(np.sum(vel * vel, axis=-1) - w.v_max**2, 0.0)
    value = w.rho_v * w.chi[0] * speed_violation**3
    grads[1] += (w.rho_v * w.chi[0] * 6.0 * speed_violation**2)[:, None] * vel

    R, omega, _ = attitude_and_rates(vel, acc, jerk, problem.yaw, 0.0, D, problem.g, strict=False)
    rate_value = _rate_penalty(problem, omega)
    coll_value, coll_grad_p = _collision_terms(problem, pos, R, seg)
    value = value + rate_value + coll_value
    grads[0] += coll_grad_p

    idx = np.flatnonzero((rate_value > 0.0) | (coll_value > 0.0))
    if idx.size:
        # all 18 one-sided shifts of (vel, acc, jerk) go through the flatness map in one batch
        m = idx.size
        shifted = np.repeat(np.stack([vel[idx], acc[idx], jerk[idx]])[None], 18, axis=0)
        combo = np.arange(18)
        shifted[combo, combo // 6, :, (combo // 2) % 3] += np.where(combo % 2 == 0, FD_STEP, -FD_STEP)[:, None]
        flat = shifted.reshape(18, 3, m, 3).transpose(1, 0, 2, 3).reshape(3, 18 * m, 3)
        R_s, omega_s, _ = attitude_and_rates(*flat, problem.yaw, 0.0, D, problem.g, strict=False)
        c_s, _ = _collision_terms(problem, np.tile(pos[idx], (18, 1)), R_s, np.tile(seg[idx], 18))
        shifted_value = (_rate_penalty(problem, omega_s) + c_s).reshape(9, 2, m)
        diff = ((shifted_value[:, 0] - shifted_value[:, 1]) / (2.0 * FD_STEP)).reshape(3, 3, m)
        for slot in range(3):
            grads[slot + 1][idx] += diff[slot].T
    return value, grads


def _objective(problem: PlanProblem, q: np.ndarray, tau: np.ndarray, breakdown: bool = False):
    w = problem.weights
    T = np.exp(tau)
    traj = solve_coefficients(q, T, problem.boundary)
    K, L = traj.n_pieces, w.samples

    jerk = traj.jerk_cost()
    grad_c, grad_T = traj.jerk_gradient()
    time_cost = w.rho_T * float(T.sum())
    grad_T = grad_T + w.rho_T

    frac = np.arange(L + 1) / L
    trap = np.ones(L + 1)
    trap[0] = trap[-1] = 0.5
    local = (T[:, None] * frac[None, :]).ravel()
    B = [basis(local, d).reshape(K, L + 1, 6) for d in range(5)]
    X = [np.einsum("kln,knj->klj", B[d], traj.coeffs) for d in range(5)]
    seg = np.repeat(np.arange(K), L + 1)
    flat = [X[d].reshape(-1, 3) for d in range(4)]
    values, grads = _sample_penalties(problem, *flat, seg)

    values = values.reshape(K, L + 1)
    step = trap[None, :] * (T[:, None] / L)
    penalty = float(np.sum(step * values))
    grad_T = grad_T + np.sum(trap[None, :] * values, axis=1) / L
    for d in range(4):
        g = grads[d].reshape(K, L + 1, 3) * step[..., None]
        grad_c = grad_c + np.einsum("kln,klj->knj", B[d], g)
        grad_T = grad_T + np.einsum("klj,klj,l->k", g, X[d + 1], frac)

    grad_q, grad_T = traj.propagate_gradient(grad_c, grad_T)
    total = jerk + time_cost + penalty
    if breakdown:
        return total, grad_q, grad_T * T, {"jerk": jerk, "time": time_cost, "penalty": penalty}
    return total, grad_q, grad_T * T


def cost_and_gradient(problem: PlanProblem, q: np.ndarray, tau: np.ndarray):
    """J and its gradients w.r.t. the intermediate waypoints and the log-durations."""
    return _objective(problem, np.asarray(q, dtype=float).reshape(-1, 3), np.asarray(tau, dtype=float))


def pack(q: np.ndarray, tau: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(q, dtype=float).ravel(), np.asarray(tau, dtype=float)])


def unpack(x: np.ndarray, n_pieces: int) -> Tuple[np.ndarray, np.ndarray]:
    split = 3 * (n_pieces - 1)
    return x[:split].reshape(-1, 3), x[split:]


# ----------------------------------------------------------------------
# Post-hoc checks
# ----------------------------------------------------------------------

def dense_times(trajectory: MincoTrajectory, per_piece: int) -> Tuple[np.ndarray, np.ndarray]:
    starts = trajectory.junction_times[:-1]
    frac = np.arange(per_piece + 1) / per_piece
    ts = (starts[:, None] + trajectory.T[:, None] * frac[None, :]).ravel()
    seg = np.repeat(np.arange(trajectory.n_pieces), per_piece + 1)
    return ts, seg


def full_body_violation(problem: PlanProblem, trajectory: MincoTrajectory, profile: MorphProfile,
                        ts: np.ndarray, seg: np.ndarray) -> np.ndarray:
    """Worst face violation of the 8 morph-dependent body vertices at each sample."""
    p = trajectory.sample(ts, 0)
    R, _, _ = attitude_and_rates(trajectory.sample(ts, 1), trajectory.sample(ts, 2),
                                 trajectory.sample(ts, 3), problem.yaw, 0.0,
                                 problem.drag.D, problem.g, strict=False)
    r, w = half_extents_for_angle(problem.geom, profile.alpha_at(ts))
    extents = np.stack([r, w, np.full_like(r, problem.geom.body_half_height)], axis=-1)
    local = _VERTEX_SIGNS[None, :, :] * extents[:, None, :]
    world = p[:, None, :] + np.einsum("nij,nvj->nvi", R, local)
    G = np.einsum("nmi,nvi->nvm", problem.face_A[seg], world) - problem.face_b[seg][:, None, :]
    return G.max(axis=(1, 2))


def evaluate_residuals(problem: PlanProblem, trajectory: MincoTrajectory, profile: MorphProfile,
                       per_piece: Optional[int] = None) -> PlanResiduals:
    per_piece = per_piece or 4 * problem.weights.samples
    ts, seg = dense_times(trajectory, per_piece)
    v = trajectory.sample(ts, 1)
    _, omega, _ = attitude_and_rates(v, trajectory.sample(ts, 2), trajectory.sample(ts, 3),
                                     problem.yaw, 0.0, problem.drag.D, problem.g, strict=False)
    violation = full_body_violation(problem, trajectory, profile, ts, seg)
    return PlanResiduals(
        max_speed=float(np.max(np.linalg.norm(v, axis=1))),
        max_omega=float(np.max(np.linalg.norm(omega, axis=1))),
        max_violation=float(max(violation.max(), 0.0)),
    )


def residuals_acceptable(residuals: PlanResiduals, weights: OptimizerWeights,
                         violation_tol: float = 0.01) -> bool:
    return (residuals.max_speed <= 1.02 * weights.v_max
            and residuals.max_omega <= 1.02 * weights.omega_max
            and residuals.max_violation <= violation_tol)


# ----------------------------------------------------------------------
# Solver
# ----------------------------------------------------------------------

def projected_gradient_norm(x: np.ndarray, g: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> float:
    """Norm of the gradient step projected onto the box bounds; zero at a bound-constrained stationary point."""
    return float(np.linalg.norm(np.clip(x - g, lower, upper) - x))


def plan(problem: PlanProblem, weights: Optional[OptimizerWeights] = None) -> PlanResult:
    """
    Minimize the penalized objective with L-BFGS and schedule the morph profile.

    Raises DidNotConverge (carrying the best iterate) when the quasi-Newton
    loop fails and the post-hoc checks fail too.
    """
    if weights is not None:
        problem = replace(problem, weights=weights)
    w = problem.weights
    K = problem.n_pieces
    started = time.perf_counter()

    last = {}

    def fun(x):
        q, tau = unpack(x, K)
        J, gq, gtau = _objective(problem, q, tau)
        g = pack(gq, gtau)
        last.update(x=x.copy(), J=J, g=g)
        return J, g

    bounds = [(None, None)] * (3 * (K - 1)) + [LOG_T_BOUNDS] * K
    lower = np.array([-np.inf if lo is None else lo for lo, _ in bounds])
    upper = np.array([np.inf if hi is None else hi for _, hi in bounds])
    converged = False

    def stop_when_stationary(intermediate_result):
        nonlocal converged
        x = intermediate_result.x
        if "x" in last and np.array_equal(last["x"], x):
            J, g = last["J"], last["g"]
        else:
            J, g = fun(x)
        if projected_gradient_norm(x, g, lower, upper) < w.tolerance * max(1.0, abs(J)):
            converged = True
            raise StopIteration

    x0 = pack(problem.q0, np.log(problem.T0))
    result = minimize(fun, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                      callback=stop_when_stationary, options={
                          "maxcor": w.memory,
                          "maxiter": w.max_iter,
                          "gtol": 1e-10,
                          "ftol": 1e-15,
                      })
    converged = converged or bool(result.success)
    q, tau = unpack(result.x, K)
    cost, _, _, breakdown = _objective(problem, q, tau, breakdown=True)
    trajectory = solve_coefficients(q, np.exp(tau), problem.boundary)
    profile = schedule_morph(problem.corridor, trajectory, problem.geom, problem.policy,
                             problem.yaw, problem.segment_alpha)
    residuals = evaluate_residuals(problem, trajectory, profile)
    wall_ms = 1e3 * (time.perf_counter() - started)

    plan_result = PlanResult(
        trajectory=trajectory,
        morph_profile=profile,
        cost=float(cost),
        residuals=residuals,
        iterations=int(result.nit),
        wall_time_ms=wall_ms,
        success=residuals_acceptable(residuals, w),
        segment_alpha=np.asarray(problem.segment_alpha, dtype=float),
        breakdown=breakdown,
        message=str(result.message),
    )
    if not converged and not plan_result.success:
        raise DidNotConverge(f"L-BFGS stopped after {result.nit} iterations: {result.message}", plan_result)
    return plan_result
