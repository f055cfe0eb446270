"""
Trajectory optimizer gradient diagnostic.
Compares the analytic cost gradient against central differences on random
box corridors and reports the worst relative error per direction.
"""

import sys
import time

import numpy as np

import config
from morphing.corridor import Corridor, Polytope
from morphing.morphology import GeometryParams
from morphing.optimizer import MorphPolicy, OptimizerWeights, PlanProblem, cost_and_gradient
from morphing.trajectory import BoundaryState

INSTANCES = config.GRADIENT_INSTANCES
REL_TOL = 1e-4
STEP = 1e-6


def random_problem(rng: np.random.Generator, pieces: int) -> PlanProblem:
    """Chain of overlapping boxes along x, loose enough that every penalty can switch on."""
    lows, highs = [], []
    for k in range(pieces):
        centre = np.array([1.0 * k, 0.0, 1.0]) + rng.uniform(-0.05, 0.05, 3)
        half = np.array([0.8, 0.35, 0.3]) + rng.uniform(0.0, 0.1, 3)
        lows.append(centre - half)
        highs.append(centre + half)
    corridor = Corridor(tuple(Polytope.box(lo, hi) for lo, hi in zip(lows, highs)), tuple(range(pieces)))
    start = np.array([0.0, 0.0, 1.0])
    goal = np.array([pieces - 1.0, 0.0, 1.0])
    q0 = np.array([[k + 0.5, 0.0, 1.0] for k in range(pieces - 1)]) + rng.normal(0.0, 0.15, (pieces - 1, 3))
    T0 = rng.uniform(0.4, 0.9, pieces)
    weights = OptimizerWeights(v_max=1.5, omega_max=1.0, samples=8)
    return PlanProblem(
        corridor=corridor,
        boundary=BoundaryState.rest(start, goal),
        geom=GeometryParams(),
        weights=weights,
        q0=q0,
        T0=T0,
        segment_alpha=np.full(pieces, np.pi / 4),
        policy=MorphPolicy(enabled=True),
    )


def central_difference(problem: PlanProblem, q: np.ndarray, tau: np.ndarray):
    gq = np.zeros_like(q)
    gtau = np.zeros_like(tau)
    for idx in np.ndindex(q.shape):
        plus, minus = q.copy(), q.copy()
        plus[idx] += STEP
        minus[idx] -= STEP
        gq[idx] = (cost_and_gradient(problem, plus, tau)[0] - cost_and_gradient(problem, minus, tau)[0]) / (2 * STEP)
    for i in range(tau.size):
        plus, minus = tau.copy(), tau.copy()
        plus[i] += STEP
        minus[i] -= STEP
        gtau[i] = (cost_and_gradient(problem, q, plus)[0] - cost_and_gradient(problem, q, minus)[0]) / (2 * STEP)
    return gq, gtau


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(numeric), 1.0)
    return float(np.linalg.norm(analytic - numeric) / scale)


def audit_instances(rng: np.random.Generator, count: int):
    """Yield (problem, J, waypoint error, time error) for `count` random corridors of 2 to 5 pieces."""
    for _ in range(count):
        problem = random_problem(rng, int(rng.integers(2, 6)))
        q, tau = problem.q0, np.log(problem.T0)
        J, gq, gtau = cost_and_gradient(problem, q, tau)
        nq, ntau = central_difference(problem, q, tau)
        yield problem, J, relative_error(gq, nq), relative_error(gtau, ntau)


def main() -> int:
    print("=" * 70)
    print("Trajectory Optimizer Gradient Diagnostic")
    print("=" * 70)

    rng = np.random.default_rng(config.SEED)
    started = time.perf_counter()

    print(f"\n1. Checking {INSTANCES} random corridor instances...")
    print("-" * 70)
    worst_q = worst_t = 0.0
    failures = 0
    for n, (problem, J, err_q, err_t) in enumerate(audit_instances(rng, INSTANCES)):
        worst_q, worst_t = max(worst_q, err_q), max(worst_t, err_t)
        ok = err_q <= REL_TOL and err_t <= REL_TOL
        failures += not ok
        tag = "[OK]" if ok else "[FAIL]"
        print(f"{tag} instance {n + 1:2d}: K={problem.n_pieces}, J={J:.4g}, "
              f"waypoint err {err_q:.2e}, time err {err_t:.2e}")

    elapsed = time.perf_counter() - started

    print("\n2. Summary...")
    print("-" * 70)
    print(f"  Worst waypoint-gradient error: {worst_q:.2e}")
    print(f"  Worst time-gradient error:     {worst_t:.2e}")
    print(f"  Wall time:                     {elapsed:.2f} s")

    print("\n" + "=" * 70)
    if failures:
        print(f"[FAIL] {failures} of {INSTANCES} instances exceed relative error {REL_TOL:g}")
        print("=" * 70)
        return 1
    print(f"[OK] All instances within relative error {REL_TOL:g}")
    print("=" * 70)
    return 0


if __name__ == "__main__":
    sys.exit(main())
