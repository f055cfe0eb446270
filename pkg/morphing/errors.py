"""
Exception hierarchy for the morphing quadrotor planning and control stack.

Every failure a pipeline stage can report derives from MorphingError so the
scenario runner can catch one type and record the stage failure in its report.
"""

from pathlib import Path
from typing import Optional


class MorphingError(Exception):
    """Base class for all planner, controller and scenario failures."""


class SingularAllocation(MorphingError):
    """The control allocation matrix cannot be inverted."""


class NonFiniteState(MorphingError):
    """A state or state derivative contains NaN or infinite entries."""


class EmptyCloud(MorphingError):
    """A point cloud with no points was given to the voxel map builder."""


class OutOfBounds(MorphingError):
    """A query point lies outside the voxel grid."""


class StartOccupied(MorphingError):
    """The search start voxel is occupied in the inflated grid."""


class GoalOccupied(MorphingError):
    """The search goal voxel is occupied in the inflated grid."""


class NoPath(MorphingError):
    """The goal cannot be reached from the start."""


class CorridorFailure(MorphingError):
    """A path segment could not be covered by an obstacle-free polytope."""

    def __init__(self, segment: int, reason: str = ""):
        self.segment = segment
        message = f"cannot cover path segment {segment}"
        if reason:
            message += f": {reason}"
        super().__init__(message)


class DegenerateTime(MorphingError):
    """A trajectory piece was given a non-positive duration."""


class OutOfDomain(MorphingError):
    """A trajectory was evaluated outside [0, total duration]."""


class SingularYaw(MorphingError):
    """The heading vector is parallel to the thrust direction."""


class DegenerateThrust(MorphingError):
    """The commanded thrust acceleration is (nearly) zero."""


class InfeasibleStart(MorphingError):
    """The boundary states do not lie inside the first/last polytope."""


class MorphInfeasible(MorphingError):
    """No reachable arm configuration fits a corridor polytope."""

    def __init__(self, polytope: int, reason: str = ""):
        self.polytope = polytope
        message = f"no arm configuration fits polytope {polytope}"
        if reason:
            message += f": {reason}"
        super().__init__(message)


class DidNotConverge(MorphingError):
    """The quasi-Newton loop stopped without meeting the acceptance checks.

    The best iterate is kept on ``result`` (a PlanResult) so callers can still
    inspect or export it.
    """

    def __init__(self, message: str, result=None):
        self.result = result
        super().__init__(message)


class ScenarioError(MorphingError):
    """A scenario file could not be parsed or validated."""

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = str(path)
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
