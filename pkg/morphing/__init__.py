"""
Morphing quadrotor planning and control toolkit.

Pipeline: voxel map -> weighted A* path -> safe flight corridor ->
MINCO trajectory with full-body constraints and a morph schedule ->
closed-loop simulation with the drag-aware tracking controller.
"""

from .baselines import CONTROLLERS, LqrController, PidController
from .controller import (CircleReference, ControllerGains, HoverReference, NonlinearController,
                         TrajectoryReference, allocate, rls_update)
from .corridor import Corridor, Halfspace, Polytope, build_corridor, read_corridor, write_corridor
from .dynamics import DragParams, RigidState, WrenchInput, rk4_step, state_derivative
from .errors import (CorridorFailure, DegenerateThrust, DegenerateTime, DidNotConverge, EmptyCloud,
                     GoalOccupied, InfeasibleStart, MorphInfeasible, MorphingError, NoPath,
                     NonFiniteState, OutOfBounds, OutOfDomain, ScenarioError, SingularAllocation,
                     SingularYaw, StartOccupied)
from .flatness import FlatOutputs, FlatReference, flat_to_reference
from .gridworld import GridPath, VoxelGrid, from_point_cloud, simplify_path, weighted_astar
from .morphology import (PRESETS, GeometryParams, InertialProps, MorphState, allocation_matrix,
                         inertial_props)
from .optimizer import (MorphPolicy, MorphProfile, OptimizerWeights, PlanProblem, PlanResult,
                        cost_and_gradient, plan)
from .report import emit_report
from .scenario import (RunReport, Scenario, benchmark_controllers, compare_flyover, load_scenario,
                       run_scenario)
from .simulation import TELEMETRY_COLUMNS, SimulationConfig, simulate
from .trajectory import BoundaryState, MincoTrajectory, solve_coefficients

__all__ = [
    "CONTROLLERS", "LqrController", "PidController",
    "CircleReference", "ControllerGains", "HoverReference", "NonlinearController",
    "TrajectoryReference", "allocate", "rls_update",
    "Corridor", "Halfspace", "Polytope", "build_corridor", "read_corridor", "write_corridor",
    "DragParams", "RigidState", "WrenchInput", "rk4_step", "state_derivative",
    "CorridorFailure", "DegenerateThrust", "DegenerateTime", "DidNotConverge", "EmptyCloud",
    "GoalOccupied", "InfeasibleStart", "MorphInfeasible", "MorphingError", "NoPath",
    "NonFiniteState", "OutOfBounds", "OutOfDomain", "ScenarioError", "SingularAllocation",
    "SingularYaw", "StartOccupied",
    "FlatOutputs", "FlatReference", "flat_to_reference",
    "GridPath", "VoxelGrid", "from_point_cloud", "simplify_path", "weighted_astar",
    "PRESETS", "GeometryParams", "InertialProps", "MorphState", "allocation_matrix", "inertial_props",
    "MorphPolicy", "MorphProfile", "OptimizerWeights", "PlanProblem", "PlanResult",
    "cost_and_gradient", "plan",
    "emit_report",
    "RunReport", "Scenario", "benchmark_controllers", "compare_flyover", "load_scenario", "run_scenario",
    "TELEMETRY_COLUMNS", "SimulationConfig", "simulate",
    "BoundaryState", "MincoTrajectory", "solve_coefficients",
]
