"""
Voxel occupancy map and weighted A* front-end search.

The grid keeps two occupancy layers: the raw voxels hit by obstacles (used by
the corridor builder) and the raw set inflated by a safety radius (used by the
path search and line-of-sight checks).
"""

import heapq
from dataclasses import dataclass
from itertools import product
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import EmptyCloud, GoalOccupied, NoPath, OutOfBounds, StartOccupied

NEIGHBOR_OFFSETS = np.array([d for d in product((-1, 0, 1), repeat=3) if d != (0, 0, 0)])
NEIGHBOR_COSTS = np.linalg.norm(NEIGHBOR_OFFSETS, axis=1)


@dataclass(frozen=True)
class VoxelGrid:
    origin: np.ndarray
    resolution: float
    dims: Tuple[int, int, int]
    occupancy: np.ndarray
    inflated: np.ndarray
    inflation_radius: float

    def __post_init__(self):
        if not self.resolution > 0.0:
            raise ValueError("resolution must be positive")
        if self.occupancy.shape != tuple(self.dims) or self.inflated.shape != tuple(self.dims):
            raise ValueError("occupancy layers must match dims")

    @classmethod
    def from_occupancy(cls, occupancy: np.ndarray, origin, resolution: float,
                       inflation_radius: float) -> "VoxelGrid":
        occupancy = np.asarray(occupancy, dtype=bool)
        return cls(
            origin=np.asarray(origin, dtype=float),
            resolution=float(resolution),
            dims=tuple(int(n) for n in occupancy.shape),
            occupancy=occupancy,
            inflated=inflate(occupancy, resolution, inflation_radius),
            inflation_radius=float(inflation_radius),
        )

    @property
    def upper(self) -> np.ndarray:
        return self.origin + np.asarray(self.dims) * self.resolution

    def index_of(self, point) -> Tuple[int, int, int]:
        idx = np.floor((np.asarray(point, dtype=float) - self.origin) / self.resolution).astype(int)
        return tuple(int(i) for i in idx)

    def center_of(self, index) -> np.ndarray:
        return self.origin + (np.asarray(index, dtype=float) + 0.5) * self.resolution

    def centers(self) -> np.ndarray:
        """(nx, ny, nz, 3) voxel centre coordinates."""
        axes = [self.origin[k] + (np.arange(self.dims[k]) + 0.5) * self.resolution for k in range(3)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def contains_index(self, index) -> bool:
        return all(0 <= index[k] < self.dims[k] for k in range(3))

    def is_free(self, index) -> bool:
        return self.contains_index(index) and not self.inflated[index]

    def segment_is_free(self, a, b) -> bool:
        """Line of sight on the inflated layer, sampled at half-voxel spacing."""
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        n = max(2, int(np.ceil(np.linalg.norm(b - a) / (0.5 * self.resolution))) + 1)
        for s in np.linspace(0.0, 1.0, n):
            if not self.is_free(self.index_of(a + s * (b - a))):
                return False
        return True

    def raw_block_is_free(self, lo, hi) -> bool:
        """True if no raw voxel with index in [lo, hi] (inclusive) is occupied."""
        lo = np.maximum(np.asarray(lo), 0)
        hi = np.minimum(np.asarray(hi), np.asarray(self.dims) - 1)
        if np.any(hi < lo):
            return True
        return not self.occupancy[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1].any()


@dataclass(frozen=True)
class GridPath:
    waypoints: np.ndarray
    cost: float = 0.0
    expansions: int = 0

    def __len__(self):
        return len(self.waypoints)

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)))


def inflate(occupancy: np.ndarray, resolution: float, radius: float) -> np.ndarray:
    """Mark every voxel whose centre lies within radius of an occupied voxel centre."""
    if radius <= 0.0 or not occupancy.any():
        return occupancy.copy()
    distance = distance_transform_edt(~occupancy, sampling=resolution)
    return occupancy | (distance <= radius + 1e-9)


def from_point_cloud(points: Iterable[Sequence[float]], resolution: float, inflation_radius: float,
                     origin=None, dims=None, padding: float = 0.0) -> VoxelGrid:
    """
    Voxelize a point cloud.

    Without explicit origin/dims the grid spans the cloud's bounding box grown
    by padding plus the inflation radius.
    """
    points = np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=float)
    if points.size == 0:
        raise EmptyCloud("point cloud is empty")
    points = points.reshape(-1, 3)

    if origin is None:
        margin = padding + inflation_radius + resolution
        origin = np.floor((points.min(axis=0) - margin) / resolution) * resolution
    origin = np.asarray(origin, dtype=float)
    if dims is None:
        margin = padding + inflation_radius + resolution
        extent = points.max(axis=0) + margin - origin
        dims = np.maximum(np.ceil(extent / resolution).astype(int), 1)
    dims = tuple(int(n) for n in dims)

    occupancy = np.zeros(dims, dtype=bool)
    idx = np.floor((points - origin) / resolution).astype(int)
    inside = np.all((idx >= 0) & (idx < np.asarray(dims)), axis=1)
    idx = idx[inside]
    occupancy[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return VoxelGrid.from_occupancy(occupancy, origin, resolution, inflation_radius)


def load_xyz(path) -> np.ndarray:
    """Read a plain-text cloud with one 'x y z' triple per line."""
    return np.loadtxt(path, dtype=float, ndmin=2).reshape(-1, 3)


def weighted_astar(grid: VoxelGrid, start, goal, epsilon: float = 1.5) -> GridPath:
    """
    26-connected weighted A* with f = g + epsilon * h and Euclidean h.

    Open-list ties break on lower f, then lower h, then lexicographic voxel
    index, so identical inputs always return the same path. Closed voxels are
    never reopened, which keeps the epsilon suboptimality bound.
    """
    if epsilon < 1.0:
        raise ValueError("epsilon must be >= 1")
    s, t = grid.index_of(start), grid.index_of(goal)
    for name, idx in (("start", s), ("goal", t)):
        if not grid.contains_index(idx):
            raise OutOfBounds(f"{name} {np.asarray(start if name == 'start' else goal)} is outside the grid")
    if grid.inflated[s]:
        raise StartOccupied(f"start voxel {s} is occupied")
    if grid.inflated[t]:
        raise GoalOccupied(f"goal voxel {t} is occupied")

    res = grid.resolution
    goal_arr = np.asarray(t, dtype=float)
    dims = np.asarray(grid.dims)
    g_cost = {s: 0.0}
    parent = {s: None}
    closed = set()

    def heuristic(idx):
        return res * float(np.sqrt(sum((idx[k] - goal_arr[k]) ** 2 for k in range(3))))

    h0 = heuristic(s)
    open_heap = [(epsilon * h0, h0, s)]
    expansions = 0
    while open_heap:
        f, h, current = heapq.heappop(open_heap)
        if current in closed:
            continue
        closed.add(current)
        expansions += 1
        if current == t:
            break
        g_current = g_cost[current]
        cur = np.asarray(current)
        for offset, step in zip(NEIGHBOR_OFFSETS, NEIGHBOR_COSTS):
            nxt = cur + offset
            if np.any(nxt < 0) or np.any(nxt >= dims):
                continue
            nxt = (int(nxt[0]), int(nxt[1]), int(nxt[2]))
            if nxt in closed or grid.inflated[nxt]:
                continue
            tentative = g_current + res * step
            if tentative < g_cost.get(nxt, np.inf):
                g_cost[nxt] = tentative
                parent[nxt] = current
                hn = heuristic(nxt)
                heapq.heappush(open_heap, (tentative + epsilon * hn, hn, nxt))
    else:
        raise NoPath(f"goal {t} unreachable from {s}")

    if t not in closed:
        raise NoPath(f"goal {t} unreachable from {s}")
    chain: List[Tuple[int, int, int]] = []
    node: Optional[Tuple[int, int, int]] = t
    while node is not None:
        chain.append(node)
        node = parent[node]
    chain.reverse()
    waypoints = np.array([grid.center_of(idx) for idx in chain])
    return GridPath(waypoints=waypoints, cost=g_cost[t], expansions=expansions)


def simplify_path(grid: VoxelGrid, path: GridPath, max_segment_length: float = 1.0) -> GridPath:
    """
    Greedy line-of-sight shortcutting.

    A shortcut is kept only if it is collision free on the inflated layer, no
    longer than max_segment_length and its voxel bounding block is free on the
    raw layer (the block seeds a corridor box downstream).
    """
    pts = path.waypoints
    if len(pts) <= 2:
        return path
    limit = max_segment_length + 1e-6 * grid.resolution
    keep = [0]
    i = 0
    while i < len(pts) - 1:
        j = i + 1
        for k in range(len(pts) - 1, i + 1, -1):
            if np.linalg.norm(pts[k] - pts[i]) > limit:
                continue
            lo = np.minimum(grid.index_of(pts[i]), grid.index_of(pts[k]))
            hi = np.maximum(grid.index_of(pts[i]), grid.index_of(pts[k]))
            if grid.raw_block_is_free(lo, hi) and grid.segment_is_free(pts[i], pts[k]):
                j = k
                break
        keep.append(j)
        i = j
    waypoints = pts[keep]
    cost = float(np.sum(np.linalg.norm(np.diff(waypoints, axis=0), axis=1)))
    return GridPath(waypoints=waypoints, cost=cost, expansions=path.expansions)
