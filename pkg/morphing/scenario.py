"""
Scenario files and the end-to-end pipeline runner.

A scenario is a dotenv-style KEY=VALUE file (see SCENARIO_FORMAT.md). The
runner builds the voxel map, searches a path, grows the corridor, plans the
trajectory with its morph profile and flies it in closed loop, printing the
same step-by-step progress as the command line tools.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values
from scipy.spatial.transform import Rotation

import config
from .baselines import CONTROLLERS
from .controller import (CircleReference, ControllerGains, HoverReference, ReferenceSource,
                         TrajectoryReference)
from .corridor import Corridor, build_corridor
from .dynamics import DragParams, RigidState
from .errors import DidNotConverge, MorphingError, ScenarioError
from .flatness import flat_to_reference
from .gridworld import GridPath, VoxelGrid, load_xyz, simplify_path, weighted_astar
from .morphology import PRESETS, GeometryParams, MorphState, half_extents_for_angle
from .optimizer import (MorphPolicy, MorphProfile, MorphRamp, OptimizerWeights, PlanProblem,
                        PlanResult, plan)
from .simulation import COLUMN, TELEMETRY_COLUMNS, SimulationConfig, SimulationLog, simulate
from .trajectory import BoundaryState

KINDS = ("plan", "hover", "circle")
UNIFORM_PRESETS = ("X", "H")
_HOLE_TOL = 1e-9


# ----------------------------------------------------------------------
# Procedural obstacles
# ----------------------------------------------------------------------

def _axes(axis: str) -> Tuple[int, int, int]:
    k = "xyz".index(axis)
    u, v = [i for i in range(3) if i != k]
    return k, u, v


@dataclass(frozen=True)
class Obstacle:
    """
    Solid region tested at voxel centres.

    kind is one of wall, ring, pipe, box. Walls, rings and pipes are slabs
    normal to `axis`; `span` bounds the slab in the two remaining axes (in
    x, y, z order) and the opening is cut from it.
    """
    kind: str
    axis: str = "y"
    at: float = 0.0
    thickness: float = 0.1
    span: Tuple[float, float, float, float] = (-1.0, 1.0, 0.0, 2.0)
    hole: Optional[Tuple[float, float, float, float]] = None
    center: Tuple[float, float] = (0.0, 1.0)
    diameter: float = 0.0
    length: float = 0.0
    lower: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    upper: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def occupied(self, points: np.ndarray) -> np.ndarray:
        if self.kind == "box":
            lo, hi = np.asarray(self.lower), np.asarray(self.upper)
            return np.all((points >= lo) & (points <= hi), axis=-1)

        k, u, v = _axes(self.axis)
        pu, pv, pk = points[..., u], points[..., v], points[..., k]
        u0, u1, v0, v1 = self.span
        in_span = (pu >= u0) & (pu <= u1) & (pv >= v0) & (pv <= v1)
        if self.kind == "pipe":
            along = (pk >= self.at) & (pk <= self.at + self.length)
        else:
            along = np.abs(pk - self.at) <= 0.5 * self.thickness + _HOLE_TOL
        solid = in_span & along

        if self.kind == "wall" and self.hole is not None:
            h0, h1, g0, g1 = self.hole
            opening = (pu >= h0 - _HOLE_TOL) & (pu <= h1 + _HOLE_TOL) & (pv >= g0 - _HOLE_TOL) & (pv <= g1 + _HOLE_TOL)
        elif self.kind in ("ring", "pipe") and self.diameter > 0.0:
            opening = np.hypot(pu - self.center[0], pv - self.center[1]) <= 0.5 * self.diameter + _HOLE_TOL
        else:
            opening = np.zeros_like(solid)
        return solid & ~opening

    def closed(self) -> "Obstacle":
        """The same obstacle without its opening."""
        return replace(self, hole=None, diameter=0.0)


def _floats(text: str, count: Optional[int] = None) -> Tuple[float, ...]:
    values = tuple(float(v) for v in text.split(","))
    if count is not None and len(values) != count:
        raise ValueError(f"expected {count} comma-separated numbers, got {text!r}")
    return values


def parse_obstacle(text: str) -> Obstacle:
    """Parse 'kind key=value ...', e.g. 'wall axis=y at=2 thickness=0.1 span=-2,2,0,2 hole=-0.25,0.25,0.75,1.25'."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty obstacle description")
    kind = tokens[0].lower()
    if kind not in ("wall", "ring", "pipe", "box"):
        raise ValueError(f"unknown obstacle kind {kind!r}")
    fields_: Dict[str, object] = {"kind": kind}
    for token in tokens[1:]:
        if "=" not in token:
            raise ValueError(f"expected key=value, got {token!r}")
        key, value = token.split("=", 1)
        if key == "axis":
            if value not in ("x", "y", "z"):
                raise ValueError(f"axis must be x, y or z, got {value!r}")
            fields_["axis"] = value
        elif key in ("at", "start", "thickness", "diameter", "inner", "length"):
            name = {"start": "at", "inner": "diameter"}.get(key, key)
            fields_[name] = float(value)
        elif key in ("span", "hole"):
            fields_[key] = _floats(value, 4)
        elif key == "center":
            fields_[key] = _floats(value, 2)
        elif key in ("min", "max"):
            fields_["lower" if key == "min" else "upper"] = _floats(value, 3)
        else:
            raise ValueError(f"unknown obstacle key {key!r}")
    return Obstacle(**fields_)


# ----------------------------------------------------------------------
# Scenario
# ----------------------------------------------------------------------

@dataclass
class Scenario:
    name: str = "scenario"
    kind: str = "plan"
    map_min: np.ndarray = field(default_factory=lambda: np.array([-2.0, -1.0, 0.0]))
    map_max: np.ndarray = field(default_factory=lambda: np.array([2.0, 5.0, 3.0]))
    resolution: float = 0.05
    inflation: float = 0.1
    obstacles: List[Obstacle] = field(default_factory=list)
    point_cloud: Optional[Path] = None
    start: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    goal: np.ndarray = field(default_factory=lambda: np.array([0.0, 2.0, 1.0]))
    yaw: float = 0.0
    epsilon: float = config.ASTAR_EPSILON
    max_segment_length: float = config.MAX_SEGMENT_LENGTH
    max_box_size: float = config.MAX_BOX_SIZE
    max_faces: int = config.MAX_FACES
    weights: OptimizerWeights = field(default_factory=OptimizerWeights)
    policy: MorphPolicy = field(default_factory=MorphPolicy)
    geom: GeometryParams = field(default_factory=GeometryParams)
    drag: DragParams = field(default_factory=DragParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    sim: SimulationConfig = field(default_factory=SimulationConfig)
    hold_time: float = config.HOLD_TIME
    goal_tolerance: float = config.GOAL_TOLERANCE
    violation_tolerance: float = config.EXECUTED_VIOLATION_TOLERANCE
    tracking_tolerance: float = config.TRACKING_TOLERANCE
    circle_center: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    circle_radius: float = 1.0
    circle_duration: float = 8.0
    morph_period: float = 4.0
    hover_duration: float = 6.0
    morph_target: str = "H"
    morph_at: float = 1.0
    source: Optional[Path] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        for name in ("resolution", "circle_radius", "hover_duration", "goal_tolerance"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.inflation < 0.0 or self.max_segment_length <= 0.0 or self.max_box_size <= 0.0:
            raise ValueError("inflation must be >= 0 and segment/box sizes positive")
        if np.any(np.asarray(self.map_max) <= np.asarray(self.map_min)):
            raise ValueError("map_max must exceed map_min on every axis")

    def without_openings(self) -> "Scenario":
        return replace(self, name=f"{self.name}_flyover", obstacles=[o.closed() for o in self.obstacles])


def _line_of(path: Path, key: str) -> Optional[int]:
    try:
        lines = path.read_text().splitlines()
    except OSError:
        return None
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("export "):
            stripped = stripped[len("export "):].lstrip()
        if stripped.startswith(f"{key}=") or stripped.startswith(f"{key} ="):
            return number
    return None


def _to_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _vec(text: str, n: int = 3) -> np.ndarray:
    return np.array(_floats(text, n))


_GEOMETRY_KEYS = {
    "HINGE_SPAN": "hinge_span", "ARM_SPAN": "arm_span", "BODY_MASS": "body_mass",
    "ARM_MASS": "arm_mass", "MOTOR_MASS": "motor_mass", "BODY_HALF_HEIGHT": "body_half_height",
    "THRUST_COEFF": "thrust_coeff", "TORQUE_COEFF": "torque_coeff", "MAX_ROTOR_THRUST": "max_rotor_thrust",
}
_WEIGHT_KEYS = {
    "RHO_T": ("rho_T", float), "RHO_V": ("rho_v", float), "RHO_W": ("rho_w", float),
    "RHO_C": ("rho_c", float), "V_MAX": ("v_max", float), "OMEGA_MAX": ("omega_max", float),
    "SAMPLES": ("samples", int), "LBFGS_MEMORY": ("memory", int), "MAX_ITER": ("max_iter", int),
}
_POLICY_KEYS = {
    "MORPH_ENABLED": ("enabled", _to_bool), "MORPH_CLEARANCE": ("clearance", float),
    "MORPH_DURATION": ("duration", float), "SERVO_RATE": ("servo_rate", float),
}
_GAIN_KEYS = {
    "KP_POS": ("kp_pos", _vec), "KV_POS": ("kv_pos", _vec), "KI_VEL": ("ki_vel", _vec),
    "K_ATT": ("K_A", _vec), "RATE_KP": ("rate_kp", _vec), "SERVO_KP": ("servo_kp", float),
    "SERVO_KD": ("servo_kd", float), "RLS_RHO": ("rls_rho", float), "RLS_ENABLED": ("rls_enabled", _to_bool),
}
_SIM_KEYS = {
    "SIM_DT": ("dt", float), "THRUST_LOSS": ("thrust_loss", float), "SERVO_TAU": ("servo_tau", float),
    "NOISE_STD": ("noise_std", float), "SEED": ("seed", int),
}
_SCENARIO_KEYS = {
    "NAME": ("name", str), "KIND": ("kind", str), "MAP_MIN": ("map_min", _vec), "MAP_MAX": ("map_max", _vec),
    "MAP_RESOLUTION": ("resolution", float), "INFLATION_RADIUS": ("inflation", float),
    "START": ("start", _vec), "GOAL": ("goal", _vec), "YAW": ("yaw", float),
    "ASTAR_EPSILON": ("epsilon", float), "MAX_SEGMENT_LENGTH": ("max_segment_length", float),
    "MAX_BOX_SIZE": ("max_box_size", float), "MAX_FACES": ("max_faces", int),
    "HOLD_TIME": ("hold_time", float), "GOAL_TOLERANCE": ("goal_tolerance", float),
    "VIOLATION_TOLERANCE": ("violation_tolerance", float), "TRACKING_TOLERANCE": ("tracking_tolerance", float),
    "CIRCLE_CENTER": ("circle_center", _vec), "CIRCLE_RADIUS": ("circle_radius", float),
    "CIRCLE_DURATION": ("circle_duration", float), "MORPH_PERIOD": ("morph_period", float),
    "HOVER_DURATION": ("hover_duration", float), "MORPH_TARGET": ("morph_target", str),
    "MORPH_AT": ("morph_at", float),
}


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file; errors carry the file path and line number."""
    path = Path(path)
    if not path.is_file():
        raise ScenarioError("scenario file not found", path)
    values = dotenv_values(path)

    def fail(key: str, exc: Exception):
        raise ScenarioError(f"{key}: {exc}", path, _line_of(path, key)) from exc

    groups = {"scenario": {}, "geom": {}, "weights": {}, "policy": {}, "gains": {}, "sim": {}}
    tables = (("scenario", _SCENARIO_KEYS), ("weights", _WEIGHT_KEYS), ("policy", _POLICY_KEYS),
              ("gains", _GAIN_KEYS), ("sim", _SIM_KEYS))
    obstacles: List[Tuple[str, Obstacle]] = []
    drag_kwargs: Dict[str, np.ndarray] = {}
    point_cloud = None

    for key, raw in values.items():
        if raw is None:
            fail(key, ValueError("missing value"))
        try:
            if key.startswith("OBSTACLE"):
                obstacles.append((key, parse_obstacle(raw)))
                continue
            if key == "POINT_CLOUD":
                point_cloud = (path.parent / raw).resolve()
                continue
            if key in ("DRAG_D", "DRAG_A", "DRAG_B"):
                data = _floats(raw)
                drag_kwargs[key[-1]] = np.array(data) if len(data) == 3 else np.array(data).reshape(3, 3)
                continue
            if key in _GEOMETRY_KEYS:
                groups["geom"][_GEOMETRY_KEYS[key]] = float(raw)
                continue
            for group, table in tables:
                if key in table:
                    name, convert = table[key]
                    groups[group][name] = convert(raw)
                    break
            else:
                raise ValueError("unknown key")
        except (ValueError, TypeError) as exc:
            fail(key, exc)

    def build(label: str, factory: Callable, kwargs: dict, key_hint: Optional[str] = None):
        try:
            return factory(**kwargs)
        except (ValueError, TypeError) as exc:
            hint = key_hint or (next(iter(kwargs), label) if kwargs else label)
            raise ScenarioError(f"invalid {label}: {exc}", path, _line_of(path, _upper_key(hint))) from exc

    scenario = build("scenario", Scenario, dict(
        groups["scenario"],
        obstacles=[o for _, o in sorted(obstacles, key=lambda item: item[0])],
        point_cloud=point_cloud,
        geom=build("geometry", GeometryParams, groups["geom"]),
        drag=build("drag", DragParams, drag_kwargs, "DRAG_D"),
        weights=build("optimizer weights", OptimizerWeights, groups["weights"]),
        policy=build("morph policy", MorphPolicy, groups["policy"]),
        gains=build("controller gains", ControllerGains, groups["gains"]),
        sim=build("simulation", SimulationConfig, groups["sim"]),
        source=path,
    ))
    if scenario.point_cloud is not None and not scenario.point_cloud.is_file():
        raise ScenarioError(f"point cloud {scenario.point_cloud} not found", path, _line_of(path, "POINT_CLOUD"))
    if scenario.morph_target.upper() not in UNIFORM_PRESETS:
        raise ScenarioError(f"hover morph target must be one of {UNIFORM_PRESETS}, got {scenario.morph_target!r}",
                            path, _line_of(path, "MORPH_TARGET"))
    return scenario


def _upper_key(name: str) -> str:
    for table in (_SCENARIO_KEYS, _WEIGHT_KEYS, _POLICY_KEYS, _GAIN_KEYS, _SIM_KEYS):
        for key, (attr, _) in table.items():
            if attr == name:
                return key
    for key, attr in _GEOMETRY_KEYS.items():
        if attr == name:
            return key
    return name.upper()


# ----------------------------------------------------------------------
# Map
# ----------------------------------------------------------------------

def build_grid(scenario: Scenario) -> VoxelGrid:
    """
    Voxelize the procedural obstacles (and optional point cloud).

    The origin is shifted so the start point sits on a voxel centre, which
    puts symmetric openings around the start on voxel boundaries.
    """
    res = scenario.resolution
    lo = np.asarray(scenario.map_min, dtype=float)
    hi = np.asarray(scenario.map_max, dtype=float)
    start = np.asarray(scenario.start, dtype=float)
    origin = start - (np.floor((start - lo) / res) + 0.5) * res
    dims = np.maximum(np.ceil((hi - origin) / res).astype(int), 1)

    blank = VoxelGrid.from_occupancy(np.zeros(tuple(dims), dtype=bool), origin, res, 0.0)
    centers = blank.centers()
    occupancy = np.zeros(tuple(dims), dtype=bool)
    for obstacle in scenario.obstacles:
        occupancy |= obstacle.occupied(centers)
    if scenario.point_cloud is not None:
        points = load_xyz(scenario.point_cloud)
        idx = np.floor((points - origin) / res).astype(int)
        inside = np.all((idx >= 0) & (idx < dims), axis=1)
        idx = idx[inside]
        occupancy[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return VoxelGrid.from_occupancy(occupancy, origin, res, scenario.inflation)


# ----------------------------------------------------------------------
# Reports
# ----------------------------------------------------------------------

@dataclass
class RunSummary:
    scenario: str
    controller: str = "proposed"
    success: bool = False
    avg_error: float = 0.0
    max_error: float = 0.0
    max_violation: float = 0.0
    plan_violation: float = 0.0
    plan_time_ms: float = 0.0
    plan_iterations: int = 0
    energy: float = 0.0
    goal_error: float = 0.0
    min_alpha: float = float(np.pi / 4)
    duration: float = 0.0
    failure: str = ""


@dataclass
class RunReport:
    summary: RunSummary
    telemetry: np.ndarray = field(default_factory=lambda: np.zeros((0, len(TELEMETRY_COLUMNS))))
    grid: Optional[VoxelGrid] = None
    path: Optional[GridPath] = None
    corridor: Optional[Corridor] = None
    plan: Optional[PlanResult] = None

    @property
    def success(self) -> bool:
        return self.summary.success


@dataclass(frozen=True)
class BenchmarkRow:
    controller: str
    v_max: float
    avg_error: float
    max_error: float


def executed_violation(telemetry: np.ndarray, plan_result: PlanResult, corridor: Corridor,
                       geom: GeometryParams) -> float:
    """Worst corridor violation of the flown body box, using the measured arm angles."""
    if telemetry.shape[0] == 0:
        return 0.0
    traj = plan_result.trajectory
    t = np.clip(telemetry[:, COLUMN["t"]], 0.0, traj.total_duration)
    seg, _ = traj.locate(t)
    p = telemetry[:, [COLUMN["p_x"], COLUMN["p_y"], COLUMN["p_z"]]]
    q = telemetry[:, [COLUMN["q_x"], COLUMN["q_y"], COLUMN["q_z"], COLUMN["q_w"]]]
    R = Rotation.from_quat(q).as_matrix()
    alpha = telemetry[:, [COLUMN[f"alpha_{i}"] for i in range(1, 5)]]
    r, w = half_extents_for_angle(geom, alpha)
    extents = np.stack([r.max(axis=1), w.max(axis=1), np.full(len(t), geom.body_half_height)], axis=-1)
    signs = np.array([[sx, sy, sz] for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)], dtype=float)
    world = p[:, None, :] + np.einsum("nij,nvj->nvi", R, signs[None] * extents[:, None, :])
    worst = np.full(len(t), -np.inf)
    for k, poly in enumerate(corridor.polytopes):
        mask = np.asarray(corridor.assignment)[seg] == k
        if not mask.any():
            continue
        G = np.einsum("mi,nvi->nvm", poly.A, world[mask]) - poly.b
        worst[mask] = G.max(axis=(1, 2))
    return float(max(worst.max(), 0.0))


def _summarize(scenario: Scenario, controller: str, log: SimulationLog, goal: Optional[np.ndarray]) -> RunSummary:
    errors = log.errors
    p_final = log.rows[-1, [COLUMN["p_x"], COLUMN["p_y"], COLUMN["p_z"]]]
    alphas = log.rows[:, [COLUMN[f"alpha_{i}"] for i in range(1, 5)]]
    return RunSummary(
        scenario=scenario.name,
        controller=controller,
        avg_error=float(errors.mean()),
        max_error=float(errors.max()),
        energy=float(log.energy),
        goal_error=float(np.linalg.norm(p_final - goal)) if goal is not None else float(errors[-1]),
        min_alpha=float(alphas.min()),
        duration=float(log.rows[-1, COLUMN["t"]]),
    )


# ----------------------------------------------------------------------
# Pipeline
# ----------------------------------------------------------------------

def make_controller(name: str, scenario: Scenario):
    try:
        factory = CONTROLLERS[name]
    except KeyError:
        raise ValueError(f"unknown controller {name!r}; choose from {sorted(CONTROLLERS)}") from None
    return factory(scenario.geom, scenario.drag, scenario.gains, scenario.sim.g)


def plan_scenario(scenario: Scenario, verbose: bool = False) -> RunReport:
    """Map, search, corridor and trajectory stages; failures are recorded, not raised."""
    report = RunReport(summary=RunSummary(scenario=scenario.name))
    say = print if verbose else (lambda *args, **kwargs: None)
    stage = "map"
    try:
        say("Step 1: Building voxel map...")
        report.grid = build_grid(scenario)
        say(f"  Grid: {report.grid.dims} voxels at {scenario.resolution:.3f} m, "
            f"{int(report.grid.occupancy.sum())} occupied")

        stage = "search"
        say("\nStep 2: Searching path (weighted A*)...")
        raw = weighted_astar(report.grid, scenario.start, scenario.goal, scenario.epsilon)
        report.path = simplify_path(report.grid, raw, scenario.max_segment_length)
        say(f"  [OK] {len(raw)} voxels, {raw.expansions} expansions, {len(report.path)} waypoints after shortcutting")

        stage = "corridor"
        say("\nStep 3: Growing safe flight corridor...")
        report.corridor = build_corridor(report.grid, report.path, scenario.max_faces, scenario.max_box_size)
        say(f"  [OK] {len(report.corridor)} polytopes for {len(report.corridor.assignment)} segments")

        stage = "plan"
        say("\nStep 4: Optimizing trajectory...")
        problem = PlanProblem.from_path(
            report.path.waypoints, report.corridor, scenario.geom, scenario.weights,
            scenario.drag, scenario.policy, scenario.yaw,
            boundary=BoundaryState.rest(scenario.start, scenario.goal),
        )
        say(f"  Arm angles per segment: {np.round(np.degrees(problem.segment_alpha), 1).tolist()} deg")
        try:
            report.plan = plan(problem)
        except DidNotConverge as exc:
            # keep the best iterate so it can still be exported
            report.plan = exc.result
            raise
        result = report.plan
        report.summary.plan_time_ms = result.wall_time_ms
        report.summary.plan_iterations = result.iterations
        report.summary.plan_violation = result.residuals.max_violation
        tag = "[OK]" if result.success else "[WARNING]"
        say(f"  {tag} {result.iterations} iterations in {result.wall_time_ms:.1f} ms, "
            f"duration {result.trajectory.total_duration:.2f} s")
        say(f"  Max speed {result.residuals.max_speed:.3f} m/s, max rate {result.residuals.max_omega:.3f} rad/s, "
            f"max violation {100 * result.residuals.max_violation:.2f} cm")
        if not result.success:
            report.summary.failure = "plan: post-hoc limits exceeded"
    except MorphingError as exc:
        report.summary.failure = f"{stage}: {type(exc).__name__}: {exc}"
        say(f"  [ERROR] {report.summary.failure}")
    return report


def hover_profile(scenario: Scenario) -> Callable[[float], Tuple[float, float]]:
    target = float(np.mean(PRESETS[scenario.morph_target.upper()]))
    delta = target - np.pi / 4
    duration = max(scenario.policy.duration, 1.875 * abs(delta) / scenario.policy.servo_rate)
    profile = MorphProfile(float(np.pi / 4), (MorphRamp(scenario.morph_at, duration, delta),))
    return lambda t: (float(profile.alpha_at(t)), float(profile.rate_at(t)))


def reference_for(scenario: Scenario, plan_result: Optional[PlanResult] = None,
                  speed: Optional[float] = None) -> ReferenceSource:
    if scenario.kind == "plan":
        return TrajectoryReference(plan_result.trajectory, plan_result.morph_profile, scenario.yaw,
                                   hold=scenario.hold_time)
    if scenario.kind == "hover":
        return HoverReference(scenario.start, scenario.yaw, scenario.hover_duration, hover_profile(scenario))
    return CircleReference(scenario.circle_center, scenario.circle_radius,
                           scenario.weights.v_max if speed is None else speed,
                           scenario.circle_duration, scenario.yaw, scenario.morph_period)


def initial_conditions(scenario: Scenario, reference: ReferenceSource) -> Tuple[RigidState, MorphState]:
    """Start exactly on the reference: position, velocity, attitude and arm angle."""
    flat = reference.flat_at(0.0)
    ref = flat_to_reference(flat, scenario.geom.total_mass, scenario.drag, scenario.sim.g)
    alpha, _ = reference.alpha_at(0.0)
    return RigidState(p=flat.p, v=flat.v, q=ref.q_d, omega=ref.omega_ff), MorphState.uniform(alpha)


def run_scenario(scenario: Scenario, controller: str = "proposed", out_dir: Optional[Path] = None,
                 verbose: bool = False, seed: Optional[int] = None) -> RunReport:
    """
    Run the full pipeline and the closed-loop flight.

    Planner exceptions never escape: the failing stage and message end up in
    the summary and the success flag is false.
    """
    if seed is not None:
        scenario = replace(scenario, sim=replace(scenario.sim, seed=int(seed)))
    say = print if verbose else (lambda *args, **kwargs: None)
    say(f"\n{'=' * 60}")
    say(f"Scenario: {scenario.name} ({scenario.kind}, controller {controller})")
    say(f"{'=' * 60}\n")

    if scenario.kind == "plan":
        report = plan_scenario(scenario, verbose)
        if report.plan is None:
            _finish(report, out_dir, verbose)
            return report
    else:
        report = RunReport(summary=RunSummary(scenario=scenario.name))

    say("\nStep 5: Simulating closed-loop flight...")
    try:
        reference = reference_for(scenario, report.plan)
        state0, morph0 = initial_conditions(scenario, reference)
        log = simulate(make_controller(controller, scenario), reference, scenario.geom, scenario.drag,
                       scenario.sim, state0, morph0)
    except MorphingError as exc:
        report.summary.failure = f"simulate: {type(exc).__name__}: {exc}"
        say(f"  [ERROR] {report.summary.failure}")
        _finish(report, out_dir, verbose)
        return report

    goal = np.asarray(scenario.goal) if scenario.kind == "plan" else None
    previous = report.summary
    summary = _summarize(scenario, controller, log, goal)
    summary.plan_time_ms = previous.plan_time_ms
    summary.plan_iterations = previous.plan_iterations
    summary.plan_violation = previous.plan_violation
    summary.failure = previous.failure
    report.summary = summary
    report.telemetry = log.rows
    say(f"  [OK] {log.rows.shape[0]} samples, avg error {summary.avg_error:.4f} m, max error {summary.max_error:.4f} m")

    if scenario.kind == "plan":
        summary.max_violation = executed_violation(log.rows, report.plan, report.corridor, scenario.geom)
        summary.success = (report.plan.success and summary.max_violation <= scenario.violation_tolerance
                           and summary.goal_error <= scenario.goal_tolerance)
        if not summary.success and not summary.failure:
            summary.failure = (f"simulate: violation {summary.max_violation:.3f} m, "
                               f"goal error {summary.goal_error:.3f} m")
    else:
        summary.success = bool(np.isfinite(summary.max_error)) and summary.max_error <= scenario.tracking_tolerance
        if not summary.success:
            summary.failure = f"simulate: tracking error {summary.max_error:.3f} m"
    _finish(report, out_dir, verbose)
    return report


def _finish(report: RunReport, out_dir: Optional[Path], verbose: bool):
    from .report import emit_report  # report imports RunReport from here

    if out_dir is not None:
        paths = emit_report(report, out_dir)
        if verbose:
            print("\nStep 6: Writing report...")
            for label, p in paths.items():
                print(f"  {label}: {p}")
    if verbose:
        tag = "[OK]" if report.success else "[ERROR]"
        detail = "run succeeded" if report.success else f"run failed: {report.summary.failure}"
        print(f"\n{'=' * 60}")
        print(f"{tag} {detail}")
        print(f"{'=' * 60}\n")


def benchmark_controllers(scenario: Scenario, controllers: Sequence[str] = ("pid", "lqr", "proposed"),
                          speeds: Sequence[float] = (0.6, 0.8, 1.0), verbose: bool = False) -> List[BenchmarkRow]:
    """Circle tracking with continuous morphing, one row per controller and speed."""
    circle = replace(scenario, kind="circle")
    rows: List[BenchmarkRow] = []
    for speed in speeds:
        reference = reference_for(circle, speed=float(speed))
        state0, morph0 = initial_conditions(circle, reference)
        for name in controllers:
            log = simulate(make_controller(name, circle), reference, circle.geom, circle.drag,
                           circle.sim, state0, morph0)
            row = BenchmarkRow(name, float(speed), float(log.errors.mean()), float(log.errors.max()))
            rows.append(row)
            if verbose:
                print(f"  {name:>9s} @ {speed:.2f} m/s: avg {row.avg_error:.4f} m, max {row.max_error:.4f} m")
    return rows


def compare_flyover(scenario: Scenario, verbose: bool = False) -> Tuple[RunReport, RunReport, float]:
    """Fly the scenario through its openings and over the closed obstacles; returns the energy ratio."""
    through = run_scenario(scenario, verbose=verbose)
    over = run_scenario(scenario.without_openings(), verbose=verbose)
    ratio = through.summary.energy / over.summary.energy if over.summary.energy > 0.0 else float("nan")
    return through, over, ratio
