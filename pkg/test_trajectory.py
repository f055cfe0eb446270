"""
Tests for the minimum-jerk piecewise quintic trajectory class.
"""

import numpy as np
import pytest

from morphing.errors import DegenerateTime, OutOfDomain
from morphing.trajectory import BoundaryState, MincoTrajectory, basis, rest_to_rest_jerk, solve_coefficients


def _random_trajectory(rng, pieces=4):
    q = rng.normal(0.0, 1.0, (pieces - 1, 3))
    T = rng.uniform(0.5, 1.5, pieces)
    d0 = rng.normal(0.0, 0.5, (3, 3))
    dg = rng.normal(0.0, 0.5, (3, 3))
    return MincoTrajectory(q, T, BoundaryState(d0, dg))


def test_basis_shapes_and_values():
    np.testing.assert_allclose(basis(2.0, 0), [1, 2, 4, 8, 16, 32])
    np.testing.assert_allclose(basis(2.0, 3), [0, 0, 0, 6, 48, 240])
    assert basis(np.array([0.0, 1.0, 2.0]), 1).shape == (3, 6)


def test_interpolates_waypoints_and_boundaries():
    traj = _random_trajectory(np.random.default_rng(0), pieces=5)
    t = traj.junction_times
    for i, qi in enumerate(traj.q):
        np.testing.assert_allclose(traj.evaluate(t[i + 1], 0), qi, atol=1e-9)
    for d in range(3):
        np.testing.assert_allclose(traj.evaluate(0.0, d), traj.boundary.d0[d], atol=1e-9)
        np.testing.assert_allclose(traj.evaluate(traj.total_duration, d), traj.boundary.dg[d], atol=1e-9)


def test_c4_continuity_at_junctions():
    traj = _random_trajectory(np.random.default_rng(1), pieces=6)
    for s in range(traj.n_pieces - 1):
        for d in range(5):
            left = basis(traj.T[s], d) @ traj.coeffs[s]
            right = basis(0.0, d) @ traj.coeffs[s + 1]
            np.testing.assert_allclose(left, right, atol=1e-8)


def test_single_piece_matches_direct_solve():
    T = 1.7
    d0 = np.array([[0.0, 0.0, 1.0], [0.2, 0.0, 0.0], [0.0, 0.1, 0.0]])
    dg = np.array([[2.0, 1.0, 1.5], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    traj = MincoTrajectory(np.zeros((0, 3)), [T], BoundaryState(d0, dg))
    A = np.vstack([basis(0.0, d) for d in range(3)] + [basis(T, d) for d in range(3)])
    c = np.linalg.solve(A, np.vstack([d0, dg]))
    np.testing.assert_allclose(traj.coeffs[0], c, atol=1e-10)


def test_rest_to_rest_jerk_closed_form():
    traj = MincoTrajectory(np.zeros((0, 3)), [2.0], BoundaryState.rest([0, 0, 0], [3.0, 0, 0]))
    assert traj.jerk_cost() == pytest.approx(rest_to_rest_jerk(3.0, 2.0), rel=1e-10)


def test_straight_line_waypoints_stay_on_line():
    q = np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    traj = MincoTrajectory(q, [1.0, 1.0, 1.0], BoundaryState.rest([0, 0, 0], [3, 0, 0]))
    samples = traj.sample(np.linspace(0.0, 3.0, 50))
    np.testing.assert_allclose(samples[:, 1:], 0.0, atol=1e-12)


def test_jerk_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    traj = _random_trajectory(rng, pieces=4)
    gc, gT = traj.jerk_gradient()
    grad_q, grad_T = traj.propagate_gradient(gc, gT)

    def cost(q, T):
        return MincoTrajectory(q, T, traj.boundary).jerk_cost()

    h = 1e-6
    num_q = np.zeros_like(traj.q)
    for idx in np.ndindex(traj.q.shape):
        dq = np.zeros_like(traj.q)
        dq[idx] = h
        num_q[idx] = (cost(traj.q + dq, traj.T) - cost(traj.q - dq, traj.T)) / (2 * h)
    num_T = np.zeros_like(traj.T)
    for s in range(traj.n_pieces):
        dT = np.zeros_like(traj.T)
        dT[s] = h
        num_T[s] = (cost(traj.q, traj.T + dT) - cost(traj.q, traj.T - dT)) / (2 * h)

    np.testing.assert_allclose(grad_q, num_q, rtol=1e-5, atol=1e-5)
    np.testing.assert_allclose(grad_T, num_T, rtol=1e-5, atol=1e-5)


def test_locate_and_domain():
    traj = MincoTrajectory(np.array([[1.0, 0.0, 0.0]]), [1.0, 2.0], BoundaryState.rest([0, 0, 0], [2, 0, 0]))
    idx, tau = traj.locate(np.array([0.0, 0.5, 1.0, 2.9, 3.0]))
    np.testing.assert_array_equal(idx, [0, 0, 1, 1, 1])
    np.testing.assert_allclose(tau, [0.0, 0.5, 0.0, 1.9, 2.0])
    with pytest.raises(OutOfDomain):
        traj.evaluate(3.1)
    with pytest.raises(OutOfDomain):
        traj.sample([-0.1, 1.0])


def test_degenerate_durations():
    boundary = BoundaryState.rest([0, 0, 0], [1, 0, 0])
    with pytest.raises(DegenerateTime):
        MincoTrajectory(np.array([[0.5, 0, 0]]), [1.0, 0.0], boundary)
    with pytest.raises(DegenerateTime):
        MincoTrajectory(np.zeros((0, 3)), [], boundary)
    with pytest.raises(ValueError):
        MincoTrajectory(np.zeros((0, 3)), [1.0, 1.0], boundary)


def test_solve_coefficients_matches_boundary():
    boundary = BoundaryState.rest([0, 0, 1], [2, 1, 1])
    traj = solve_coefficients(np.array([[1.0, 0.5, 1.0]]), [1.0, 1.5], boundary)
    assert traj.coeffs.shape == (2, 6, 3)
    np.testing.assert_allclose(traj.evaluate(0.0, 0), [0, 0, 1], atol=1e-9)
    np.testing.assert_allclose(traj.evaluate(traj.total_duration, 0), [2, 1, 1], atol=1e-9)
    np.testing.assert_allclose(traj.evaluate(traj.total_duration, 1), 0.0, atol=1e-9)


def test_derivatives_match_finite_differences():
    traj = _random_trajectory(np.random.default_rng(4), pieces=3)
    h = 1e-6
    # interior times away from the junctions
    for t in (0.3 * traj.T[0], traj.T[0] + 0.5 * traj.T[1], traj.total_duration - 0.2 * traj.T[2]):
        for d in range(5):
            numeric = (traj.evaluate(t + h, d) - traj.evaluate(t - h, d)) / (2 * h)
            np.testing.assert_allclose(numeric, traj.evaluate(t, d + 1), rtol=1e-6, atol=1e-5)


def test_propagate_gradient_of_coefficient_norm():
    traj = _random_trajectory(np.random.default_rng(6), pieces=3)
    grad_q, grad_T = traj.propagate_gradient(2.0 * traj.coeffs)

    def cost(q, T):
        return float(np.sum(MincoTrajectory(q, T, traj.boundary).coeffs ** 2))

    h = 1e-6
    for idx in np.ndindex(traj.q.shape):
        dq = np.zeros_like(traj.q)
        dq[idx] = h
        numeric = (cost(traj.q + dq, traj.T) - cost(traj.q - dq, traj.T)) / (2 * h)
        assert grad_q[idx] == pytest.approx(numeric, rel=1e-5, abs=1e-5)
    for s in range(traj.n_pieces):
        dT = np.zeros_like(traj.T)
        dT[s] = h
        numeric = (cost(traj.q, traj.T + dT) - cost(traj.q, traj.T - dT)) / (2 * h)
        assert grad_T[s] == pytest.approx(numeric, rel=1e-5, abs=1e-5)


def _hermite_jerk(traj, velocities, accelerations):
    """Jerk integral of the quintic spline through traj.q with the given interior derivatives."""
    nodes, weights = np.polynomial.legendre.leggauss(3)
    points = np.vstack([traj.boundary.d0[0], traj.q, traj.boundary.dg[0]])
    vel = np.vstack([traj.boundary.d0[1], velocities, traj.boundary.dg[1]])
    acc = np.vstack([traj.boundary.d0[2], accelerations, traj.boundary.dg[2]])
    total = 0.0
    for s, T in enumerate(traj.T):
        A = np.vstack([basis(0.0, d) for d in range(3)] + [basis(T, d) for d in range(3)])
        c = np.linalg.solve(A, np.vstack([points[s], vel[s], acc[s], points[s + 1], vel[s + 1], acc[s + 1]]))
        jerk = basis(0.5 * T * (nodes + 1.0), 3) @ c
        total += 0.5 * T * float(weights @ np.sum(jerk**2, axis=1))
    return total


def test_solution_has_least_jerk_among_matching_splines():
    rng = np.random.default_rng(8)
    traj = _random_trajectory(rng, pieces=4)
    inner = traj.junction_times[1:-1]
    velocities, accelerations = traj.sample(inner, 1), traj.sample(inner, 2)
    assert _hermite_jerk(traj, velocities, accelerations) == pytest.approx(traj.jerk_cost(), rel=1e-9)
    for _ in range(10):
        dv = rng.normal(0.0, 0.1, velocities.shape)
        da = rng.normal(0.0, 0.1, accelerations.shape)
        assert _hermite_jerk(traj, velocities + dv, accelerations + da) > traj.jerk_cost()
