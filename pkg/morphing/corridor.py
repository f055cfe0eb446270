"""
Safe flight corridor: overlapping convex polytopes covering a grid path.

Membership convention: a point x is inside a face when (x - r) . n <= 0, i.e.
n is the outward normal of the polytope even though the face is often called
"inward facing" in the planning literature.

The generator grows one axis-aligned box per path segment over the raw
occupancy layer. The optimizer only consumes halfspaces, so any other convex
decomposition can be dropped in behind build_corridor.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection

from .errors import CorridorFailure
from .gridworld import GridPath, VoxelGrid


@dataclass(frozen=True)
class Halfspace:
    normal: np.ndarray
    point: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise ValueError("halfspace normal must be non-zero")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(3))

    @property
    def offset(self) -> float:
        return float(self.normal @ self.point)


@dataclass(frozen=True)
class Polytope:
    faces: Tuple[Halfspace, ...]
    seed: np.ndarray

    A: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        faces = tuple(self.faces)
        if len(faces) < 4:
            raise ValueError("a bounded polytope needs at least 4 faces")
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "seed", np.asarray(self.seed, dtype=float).reshape(3))
        object.__setattr__(self, "A", np.array([f.normal for f in faces]))
        object.__setattr__(self, "b", np.array([f.offset for f in faces]))

    @classmethod
    def box(cls, lower, upper) -> "Polytope":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if np.any(upper <= lower):
            raise ValueError("box upper corner must exceed lower corner on every axis")
        faces = []
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1.0
            faces.append(Halfspace(e, upper))
            faces.append(Halfspace(-e, lower))
        return cls(tuple(faces), 0.5 * (lower + upper))

    @classmethod
    def from_arrays(cls, A: np.ndarray, b: np.ndarray, seed=None) -> "Polytope":
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        faces = []
        for a_j, b_j in zip(A, b):
            norm = np.linalg.norm(a_j)
            faces.append(Halfspace(a_j / norm, a_j * b_j / norm**2))
        if seed is None:
            seed, _ = chebyshev_center(A, b)
        return cls(tuple(faces), seed)

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(point_violation(self, x) <= tol)

    def vertices(self) -> np.ndarray:
        halfspaces = np.hstack([self.A, -self.b[:, None]])
        return HalfspaceIntersection(halfspaces, self.seed).intersections

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box (lower, upper) of the vertex set."""
        v = self.vertices()
        return v.min(axis=0), v.max(axis=0)


@dataclass(frozen=True)
class Corridor:
    polytopes: Tuple[Polytope, ...]
    assignment: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "polytopes", tuple(self.polytopes))
        object.__setattr__(self, "assignment", tuple(int(k) for k in self.assignment))
        for k in self.assignment:
            if not 0 <= k < len(self.polytopes):
                raise ValueError(f"assignment refers to missing polytope {k}")

    def __len__(self):
        return len(self.polytopes)

    def polytope_for_segment(self, segment: int) -> Polytope:
        return self.polytopes[self.assignment[segment]]


def point_violation(poly: Polytope, x) -> Union[float, np.ndarray]:
    """max_j (x - r_j) . n_j; non-positive iff x is inside. Accepts (3,) or (N, 3)."""
    x = np.asarray(x, dtype=float)
    values = x @ poly.A.T - poly.b
    return values.max(axis=-1) if x.ndim > 1 else float(values.max())


def chebyshev_center(A: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, float]:
    """Centre and radius of the largest ball inside {x : A x <= b}."""
    norms = np.linalg.norm(A, axis=1)
    c = np.array([0.0, 0.0, 0.0, -1.0])
    A_ub = np.hstack([A, norms[:, None]])
    bounds = [(None, None)] * 3 + [(0.0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=bounds, method="highs")
    if not res.success:
        return np.full(3, np.nan), -1.0
    return res.x[:3], float(res.x[3])


def intersection_radius(p1: Polytope, p2: Polytope) -> float:
    """Inscribed-ball radius of p1 ∩ p2 (negative when the LP is infeasible)."""
    _, radius = chebyshev_center(np.vstack([p1.A, p2.A]), np.concatenate([p1.b, p2.b]))
    return radius


def _grow_axis(grid: VoxelGrid, lo: np.ndarray, hi: np.ndarray, axis: int, cap: int):
    blocked = [False, False]
    while not all(blocked):
        for side in (0, 1):
            if blocked[side]:
                continue
            if hi[axis] - lo[axis] + 1 >= cap:
                blocked = [True, True]
                break
            trial_lo, trial_hi = lo.copy(), hi.copy()
            if side == 0:
                trial_lo[axis] -= 1
                slab_lo, slab_hi = trial_lo.copy(), trial_hi.copy()
                slab_hi[axis] = trial_lo[axis]
            else:
                trial_hi[axis] += 1
                slab_lo, slab_hi = trial_lo.copy(), trial_hi.copy()
                slab_lo[axis] = trial_hi[axis]
            inside = 0 <= slab_lo[axis] and slab_hi[axis] < grid.dims[axis]
            if inside and grid.raw_block_is_free(slab_lo, slab_hi):
                lo[:], hi[:] = trial_lo, trial_hi
            else:
                blocked[side] = True


def _box_from_indices(grid: VoxelGrid, lo: np.ndarray, hi: np.ndarray) -> Polytope:
    lower = grid.origin + lo * grid.resolution
    upper = grid.origin + (hi + 1) * grid.resolution
    return Polytope.box(lower, upper)


def build_corridor(grid: VoxelGrid, path: GridPath, max_faces: int = 12,
                   max_box_size: float = 3.0, min_overlap: float = 1e-6,
                   min_box_size: float = 0.16) -> Corridor:
    """
    Grow one obstacle-free box per path segment.

    Each box starts from the voxel block spanned by the segment endpoints.
    It is first widened on every axis to at least min_box_size (so a round
    aperture keeps some height after the sideways sweep), then expanded one
    voxel layer at a time, axis by axis (x, then y, then z, alternating the
    negative and positive face), until the next layer touches a raw occupied
    voxel, leaves the map, or the box reaches max_box_size. Segments whose
    seed block already fits in the previous box reuse it.

    max_faces is the face budget a polytope may use. Boxes always use 6, so
    the budget only has to admit them; it is checked, never spent.
    """
    if max_faces < 6:
        raise ValueError("box corridors need max_faces >= 6")
    pts = path.waypoints
    if len(pts) < 2:
        raise CorridorFailure(0, "path needs at least two waypoints")
    cap = max(1, int(round(max_box_size / grid.resolution)))
    # odd voxel count so the seed phase stays centred on the path
    seed_cap = min(cap, 2 * int(np.ceil((min_box_size / grid.resolution - 1.0) / 2.0)) + 1)

    polytopes: List[Polytope] = []
    index_boxes: List[Tuple[np.ndarray, np.ndarray]] = []
    assignment: List[int] = []
    for seg in range(len(pts) - 1):
        i0, i1 = np.array(grid.index_of(pts[seg])), np.array(grid.index_of(pts[seg + 1]))
        if not (grid.contains_index(i0) and grid.contains_index(i1)):
            raise CorridorFailure(seg, "segment leaves the map")
        lo, hi = np.minimum(i0, i1), np.maximum(i0, i1)
        if not grid.raw_block_is_free(lo, hi):
            raise CorridorFailure(seg, "seed block intersects an obstacle")

        if index_boxes:
            prev_lo, prev_hi = index_boxes[-1]
            if np.all(lo >= prev_lo) and np.all(hi <= prev_hi):
                assignment.append(len(polytopes) - 1)
                continue

        for axis in range(3):
            _grow_axis(grid, lo, hi, axis, seed_cap)
        for axis in range(3):
            _grow_axis(grid, lo, hi, axis, cap)
        poly = _box_from_indices(grid, lo, hi)

        if polytopes and intersection_radius(polytopes[-1], poly) <= min_overlap:
            raise CorridorFailure(seg, "box does not overlap its predecessor")
        polytopes.append(poly)
        index_boxes.append((lo.copy(), hi.copy()))
        assignment.append(len(polytopes) - 1)

    return Corridor(tuple(polytopes), tuple(assignment))


def corridor_is_free(grid: VoxelGrid, corridor: Corridor) -> bool:
    """True if no raw occupied voxel centre lies strictly inside any polytope."""
    occupied = grid.centers()[grid.occupancy]
    if occupied.size == 0:
        return True
    return all(np.all(point_violation(poly, occupied) >= -1e-9) for poly in corridor.polytopes)


def write_corridor(corridor: Corridor, path: Union[str, Path]) -> Path:
    """Plain-text dump: polytope count, then per polytope a face count and 'nx ny nz rx ry rz' rows."""
    path = Path(path)
    lines = [str(len(corridor.polytopes))]
    for poly in corridor.polytopes:
        lines.append(str(len(poly.faces)))
        for face in poly.faces:
            lines.append(" ".join(f"{v:.17g}" for v in (*face.normal, *face.point)))
    lines.append("assignment " + " ".join(str(k) for k in corridor.assignment))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_corridor(path: Union[str, Path]) -> Corridor:
    path = Path(path)
    rows = [line.split() for line in path.read_text().splitlines() if line.strip() and not line.startswith("#")]
    cursor = 0

    def take() -> List[str]:
        nonlocal cursor
        if cursor >= len(rows):
            raise ValueError(f"{path}: unexpected end of corridor file")
        cursor += 1
        return rows[cursor - 1]

    count = int(take()[0])
    polytopes = []
    for _ in range(count):
        n_faces = int(take()[0])
        data = np.array([[float(v) for v in take()] for _ in range(n_faces)])
        normals, points = data[:, :3], data[:, 3:]
        faces = tuple(Halfspace(n, r) for n, r in zip(normals, points))
        A = np.array([f.normal for f in faces])
        b = np.array([f.offset for f in faces])
        seed, _ = chebyshev_center(A, b)
        polytopes.append(Polytope(faces, seed))

    assignment: Optional[Sequence[int]] = None
    if cursor < len(rows) and rows[cursor][0] == "assignment":
        assignment = [int(v) for v in rows[cursor][1:]]
    if assignment is None:
        assignment = list(range(count))
    return Corridor(tuple(polytopes), tuple(assignment))
