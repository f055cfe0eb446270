"""
Tests for arm-angle selection, morph scheduling and the corridor-constrained optimizer.
"""

import numpy as np
import pytest

from diagnose_gradients import REL_TOL, audit_instances, central_difference, random_problem, relative_error
from morphing.corridor import Corridor, Polytope
from morphing.errors import InfeasibleStart, MorphInfeasible
from morphing.morphology import GeometryParams, half_extents_for_angle, solve_arm_angle
from morphing.optimizer import (X_ALPHA, MorphPolicy, MorphProfile, MorphRamp, OptimizerWeights, PlanProblem,
                                cost_and_gradient, plan, polytope_clearance, projected_gradient_norm, required_alpha,
                                schedule_morph, segment_extents, trapezoid_times)
from morphing.trajectory import BoundaryState, MincoTrajectory


@pytest.fixture
def geom():
    return GeometryParams()


def _gap_box():
    return Polytope.box([-0.275, -1.0, 0.7], [0.275, 1.0, 1.3])


def _box_chain(pieces=3, half=(0.8, 0.6, 0.5)):
    half = np.asarray(half)
    boxes = tuple(Polytope.box(np.array([k, 0.0, 1.0]) - half, np.array([k, 0.0, 1.0]) + half)
                  for k in range(pieces))
    return Corridor(boxes, tuple(range(pieces)))


def test_required_alpha_keeps_x_in_wide_box(geom):
    box = Polytope.box([-1.0, -1.0, 0.0], [1.0, 1.0, 2.0])
    assert required_alpha(box, geom) == pytest.approx(X_ALPHA)


def test_required_alpha_narrows_for_gap(geom):
    alpha = required_alpha(_gap_box(), geom, clearance=0.01)
    assert 0.0 < alpha < X_ALPHA
    assert polytope_clearance(_gap_box(), geom, alpha) == pytest.approx(0.01, abs=1e-6)
    r, _ = half_extents_for_angle(geom, alpha)
    assert r <= 0.265 + 1e-9


def test_required_alpha_follows_heading(geom):
    rotated = Polytope.box([-1.0, -0.275, 0.7], [1.0, 0.275, 1.3])
    assert required_alpha(rotated, geom, yaw=np.pi / 2) == pytest.approx(required_alpha(_gap_box(), geom),
                                                                         abs=1e-6)


def test_required_alpha_infeasible(geom):
    with pytest.raises(MorphInfeasible):
        required_alpha(_gap_box(), geom, morph_enabled=False)
    narrow = Polytope.box([-0.15, -1.0, 0.7], [0.15, 1.0, 1.3])
    with pytest.raises(MorphInfeasible) as excinfo:
        required_alpha(narrow, geom, index=3)
    assert excinfo.value.polytope == 3


def test_segment_extents_cover_narrower_neighbours(geom):
    alphas = np.array([X_ALPHA, 0.3, X_ALPHA])
    extents = segment_extents(geom, alphas)
    r_x, w_x = half_extents_for_angle(geom, X_ALPHA)
    r_n, w_n = half_extents_for_angle(geom, 0.3)
    # neighbours of the narrow piece carry its wider y extent
    np.testing.assert_allclose(extents[0], [r_x, w_n, geom.body_half_height])
    np.testing.assert_allclose(extents[1], [r_n, w_n, geom.body_half_height])
    np.testing.assert_allclose(extents[2], extents[0])


def test_schedule_morph_ramps_meet_junctions(geom):
    traj = MincoTrajectory(np.array([[1.0, 0, 1], [2.0, 0, 1]]), [1.0, 1.0, 1.0],
                           BoundaryState.rest([0, 0, 1], [3, 0, 1]))
    alphas = np.array([X_ALPHA, 0.5, X_ALPHA])
    profile = schedule_morph(_box_chain(), traj, geom, MorphPolicy(duration=0.5), segment_alpha=alphas)

    assert len(profile.ramps) == 2
    assert profile.alpha_at(0.4) == pytest.approx(X_ALPHA)
    assert profile.alpha_at(1.0) == pytest.approx(0.5)
    assert profile.alpha_at(2.0) == pytest.approx(0.5)
    assert profile.alpha_at(2.6) == pytest.approx(X_ALPHA)
    assert profile.rate_at(0.75) < 0.0 < profile.rate_at(2.25)
    assert profile.min_alpha == pytest.approx(0.5)


def test_schedule_morph_respects_servo_rate(geom):
    traj = MincoTrajectory(np.array([[1.0, 0, 1]]), [1.0, 1.0], BoundaryState.rest([0, 0, 1], [2, 0, 1]))
    policy = MorphPolicy(duration=0.2, servo_rate=0.5)
    profile = schedule_morph(_box_chain(2), traj, geom, policy, segment_alpha=np.array([X_ALPHA, 0.0]))
    ts = np.linspace(-3.0, 2.0, 2001)
    assert np.max(np.abs(profile.rate_at(ts))) <= 0.5 + 1e-6
    assert profile.alpha_at(1.0) == pytest.approx(0.0, abs=1e-12)


def test_morph_profile_evaluate():
    profile = MorphProfile(X_ALPHA, (MorphRamp(1.0, 1.0, -X_ALPHA),))
    state = profile.evaluate(1.5)
    np.testing.assert_allclose(state.alpha, X_ALPHA / 2)
    assert state.alpha_dot[0] == pytest.approx(-X_ALPHA * 30.0 / 16.0)
    assert MorphProfile.constant(0.2).min_alpha == pytest.approx(0.2)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cost_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    problem = random_problem(rng, 3)
    q, tau = problem.q0, np.log(problem.T0)
    _, gq, gtau = cost_and_gradient(problem, q, tau)
    nq, ntau = central_difference(problem, q, tau)
    assert relative_error(gq, nq) <= REL_TOL
    assert relative_error(gtau, ntau) <= REL_TOL


def test_plan_box_chain(geom):
    corridor = _box_chain()
    weights = OptimizerWeights(v_max=1.5, omega_max=3.0)
    waypoints = np.array([[0.0, 0, 1], [1.0, 0, 1], [2.0, 0, 1], [2.5, 0, 1]])
    problem = PlanProblem.from_path(waypoints, corridor, geom, weights,
                                    boundary=BoundaryState.rest([0, 0, 1], [2.5, 0, 1]))
    result = plan(problem)

    assert result.success
    assert result.residuals.max_speed <= 1.02 * weights.v_max
    assert result.residuals.max_violation <= 0.01
    np.testing.assert_allclose(result.trajectory.evaluate(0.0), [0.0, 0.0, 1.0], atol=1e-9)
    np.testing.assert_allclose(result.trajectory.evaluate(result.trajectory.total_duration), [2.5, 0, 1],
                               atol=1e-9)
    np.testing.assert_allclose(result.segment_alpha, X_ALPHA)
    assert set(result.breakdown) == {"jerk", "time", "penalty"}


def test_time_weight_shortens_trajectory(geom):
    corridor = _box_chain()
    waypoints = np.array([[0.0, 0, 1], [1.0, 0, 1], [2.0, 0, 1], [2.5, 0, 1]])
    durations = []
    for rho_T in (5.0, 200.0):
        problem = PlanProblem.from_path(waypoints, corridor, geom, OptimizerWeights(rho_T=rho_T, v_max=3.0))
        durations.append(plan(problem).trajectory.total_duration)
    assert durations[1] < durations[0]


def test_plan_problem_validation(geom):
    corridor = _box_chain()
    with pytest.raises(InfeasibleStart):
        PlanProblem.from_path(np.array([[0.0, 0, 1], [1.0, 0, 1], [2.0, 0, 1], [2.5, 0, 1]]), corridor, geom,
                              boundary=BoundaryState.rest([-2.0, 0, 1], [2.5, 0, 1]))
    with pytest.raises(ValueError):
        PlanProblem(corridor=corridor, boundary=BoundaryState.rest([0, 0, 1], [2, 0, 1]), geom=geom,
                    weights=OptimizerWeights(), q0=np.zeros((1, 3)), T0=np.ones(3),
                    segment_alpha=np.full(3, X_ALPHA))


def test_from_path_initial_guess(geom):
    corridor = _box_chain()
    waypoints = np.array([[0.0, 0, 1], [1.0, 0, 1], [2.0, 0, 1], [2.5, 0, 1]])
    problem = PlanProblem.from_path(waypoints, corridor, geom, OptimizerWeights(v_max=2.0))
    np.testing.assert_allclose(problem.q0, waypoints[1:-1])
    # 1 m/s cruise, 2 m/s^2: 0.5 s ramps at each end, 2 m at cruise
    np.testing.assert_allclose(problem.T0, [1.25, 1.0, 0.75])
    assert problem.T0.sum() == pytest.approx(3.0)


def test_trapezoid_times():
    np.testing.assert_allclose(trapezoid_times(np.array([0.0, 0.25, 2.25, 2.5]), 1.0, 2.0), [0.0, 0.5, 2.5, 3.0])
    # too short to reach cruise: triangular profile, 2 * sqrt(d / a)
    np.testing.assert_allclose(trapezoid_times(np.array([0.0, 0.1, 0.2]), 1.0, 2.0),
                               [0.0, np.sqrt(0.1), 2.0 * np.sqrt(0.1)])


def test_short_final_piece_gets_braking_time(geom):
    corridor = _box_chain()
    waypoints = np.array([[0.0, 0, 1], [1.0, 0, 1], [2.0, 0, 1], [2.1, 0, 1]])
    problem = PlanProblem.from_path(waypoints, corridor, geom, OptimizerWeights(v_max=2.0))
    # the last 0.1 m is covered while braking, not at cruise speed
    assert problem.T0[-1] == pytest.approx(np.sqrt(0.1))


def test_weights_validation():
    with pytest.raises(ValueError):
        OptimizerWeights(samples=4)
    with pytest.raises(ValueError):
        OptimizerWeights(rho_T=-1.0)
    with pytest.raises(ValueError):
        MorphPolicy(servo_rate=0.0)


def test_projected_gradient_norm_at_bounds():
    lower, upper = np.array([-np.inf, 0.0]), np.array([np.inf, 1.0])
    g = np.array([3.0, -4.0])
    assert projected_gradient_norm(np.array([0.0, 0.5]), g, lower, upper) == pytest.approx(np.hypot(3.0, 0.5))
    # pushing outward at an active bound leaves only the free component
    assert projected_gradient_norm(np.array([0.0, 1.0]), g, lower, upper) == pytest.approx(3.0)
    assert projected_gradient_norm(np.array([0.0, 1.0]), np.array([0.0, -4.0]), lower, upper) == 0.0


def test_plan_recovers_from_heavily_penalized_start(geom):
    corridor = _box_chain()
    weights = OptimizerWeights(v_max=1.5, omega_max=3.0)
    problem = PlanProblem(corridor=corridor, boundary=BoundaryState.rest([0, 0, 1], [2.5, 0, 1]), geom=geom,
                          weights=weights, q0=np.array([[1.0, 0, 1], [2.0, 0, 1]]), T0=np.full(3, 0.2),
                          segment_alpha=np.full(3, X_ALPHA))
    J0, _, _ = cost_and_gradient(problem, problem.q0, np.log(problem.T0))
    assert J0 > 1e6

    result = plan(problem)
    assert result.success
    assert result.residuals.max_violation <= 0.01
    assert result.residuals.max_speed <= 1.02 * weights.v_max
    assert result.cost < 1e-3 * J0


def test_reference_airframe_width_root():
    geom = GeometryParams(hinge_span=0.2, arm_span=0.28)
    # 0.40 m overall width: half extent 0.20 along the folding axis
    alpha = solve_arm_angle(geom, 0.20, "w")
    assert alpha == pytest.approx(np.arccos(0.2 / 0.28), abs=1e-10)
    assert half_extents_for_angle(geom, alpha)[1] == pytest.approx(0.20, abs=1e-12)

    # a 0.40 m opening with 1 cm margins leaves 0.19 m for r, narrower than X
    opening = Polytope.box([-0.20, -1.0, 0.7], [0.20, 1.0, 1.3])
    commanded = required_alpha(opening, geom, clearance=0.01)
    assert commanded == pytest.approx(np.arcsin(0.18 / 0.28), abs=1e-8)
    assert commanded < X_ALPHA


@pytest.mark.slow
def test_gradient_audit_over_random_instances():
    audited = 0
    for _, _, err_q, err_t in audit_instances(np.random.default_rng(0), 20):
        assert err_q <= REL_TOL
        assert err_t <= REL_TOL
        audited += 1
    assert audited == 20
