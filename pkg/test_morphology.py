"""
Tests for the airframe geometry, inertia and allocation model.
"""

import numpy as np
import pytest

from morphing.errors import SingularAllocation
from morphing.morphology import (PRESETS, GeometryParams, MorphState, allocation_matrix,
                                 body_vertices, bounding_half_extents, half_extents_for_angle,
                                 inertial_props, motor_positions, solve_arm_angle)


@pytest.fixture
def geom():
    return GeometryParams()


def test_x_preset_extents(geom):
    r, w = half_extents_for_angle(geom, np.pi / 4)
    expected = 0.5 * (geom.a + geom.l * np.sqrt(0.5))
    assert r == pytest.approx(expected)
    assert w == pytest.approx(expected)


def test_h_preset_is_narrow_along_x(geom):
    r, w = half_extents_for_angle(geom, 0.0)
    assert r == pytest.approx(0.5 * geom.a)
    assert w == pytest.approx(0.5 * (geom.a + geom.l))
    # gap scenario widths: X about 0.6 m, H under 0.4 m
    assert 2 * half_extents_for_angle(geom, np.pi / 4)[0] == pytest.approx(0.6, abs=0.01)
    assert 2 * r < 0.4


def test_motor_positions_reach_extents(geom):
    for name in PRESETS:
        morph = MorphState.preset(name)
        tips = motor_positions(geom, morph)
        r, w, _ = bounding_half_extents(geom, morph)
        assert np.max(np.abs(tips[:, 0])) == pytest.approx(r)
        assert np.max(np.abs(tips[:, 1])) == pytest.approx(w)


def test_body_vertices_are_box_corners(geom):
    v = body_vertices(geom, MorphState.preset("X"))
    assert v.shape == (8, 3)
    assert len({tuple(np.sign(row)) for row in v}) == 8


def test_symmetric_shapes_keep_cog_centred(geom):
    for name in ("X", "H"):
        props = inertial_props(geom, MorphState.preset(name))
        np.testing.assert_allclose(props.cog_offset, 0.0, atol=1e-12)


def test_t_preset_shifts_cog_forward(geom):
    props = inertial_props(geom, MorphState.preset("T"))
    # front arms swing outward in x, rear arms sit at alpha = 0
    assert props.cog_offset[0] > 0.0
    assert props.cog_offset[1] == pytest.approx(0.0, abs=1e-12)
    M = allocation_matrix(geom, props)
    U = np.linalg.solve(M, [geom.total_mass * 9.81, 0.0, 0.0, 0.0])
    # hover about an off-centre CoG needs uneven rotor thrusts
    assert np.ptp(U) > 1e-3


def test_inertia_is_symmetric_positive_definite(geom):
    rng = np.random.default_rng(3)
    for _ in range(10):
        props = inertial_props(geom, MorphState(rng.uniform(0.0, np.pi / 2, 4)))
        np.testing.assert_allclose(props.inertia, props.inertia.T, atol=1e-15)
        assert np.all(np.linalg.eigvalsh(props.inertia) > 0.0)


def test_folding_reduces_roll_inertia(geom):
    x_props = inertial_props(geom, MorphState.preset("X"))
    h_props = inertial_props(geom, MorphState.preset("H"))
    assert h_props.inertia[0, 0] > x_props.inertia[0, 0]
    assert h_props.inertia[1, 1] < x_props.inertia[1, 1]


def test_allocation_hover_thrust_splits_evenly(geom):
    props = inertial_props(geom, MorphState.preset("X"))
    M = allocation_matrix(geom, props)
    U = np.linalg.solve(M, [geom.total_mass * 9.81, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(U, geom.total_mass * 9.81 / 4.0, rtol=1e-12)


def test_allocation_yaw_row_pairs_diagonals(geom):
    props = inertial_props(geom, MorphState.preset("X"))
    M = allocation_matrix(geom, props)
    assert M[3, 0] == M[3, 1] > 0.0
    assert M[3, 2] == M[3, 3] < 0.0


def test_allocation_singular_without_yaw_moment():
    geom = GeometryParams(torque_coeff=0.0)
    props = inertial_props(geom, MorphState.preset("X"))
    with pytest.raises(SingularAllocation):
        allocation_matrix(geom, props)


def test_solve_arm_angle_inverts_extent(geom):
    alpha = 0.3
    r, w = half_extents_for_angle(geom, alpha)
    assert solve_arm_angle(geom, r, "r") == pytest.approx(alpha, abs=1e-10)
    assert solve_arm_angle(geom, w, "w") == pytest.approx(alpha, abs=1e-10)
    with pytest.raises(ValueError):
        solve_arm_angle(geom, 0.1, "r")


def test_morph_state_clamps_and_rejects_unknown_preset():
    state = MorphState(np.array([-0.2, 0.1, 2.0, 0.5]))
    np.testing.assert_allclose(state.alpha, [0.0, 0.1, np.pi / 2, 0.5])
    with pytest.raises(ValueError):
        MorphState.preset("Z")


@pytest.mark.parametrize("field,value", [
    ("hinge_span", 0.0),
    ("arm_span", -0.1),
    ("body_mass", 0.0),
    ("motor_mass", 0.2),
])
def test_geometry_validation(field, value):
    with pytest.raises(ValueError):
        GeometryParams(**{field: value})


def _rotate_planar(vector, angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * vector[0] - s * vector[1], s * vector[0] + c * vector[1]])


def test_mixed_angle_motor_positions_follow_hinge_rotation():
    geom = GeometryParams(hinge_span=0.1, arm_span=0.14)
    alpha = np.array([np.pi / 4, np.pi / 4, 0.0, 0.0])
    tips = motor_positions(geom, MorphState(alpha))
    hinges = geom.hinges()
    for i, (sx, sy) in enumerate([(1, -1), (-1, 1), (1, 1), (-1, -1)]):
        # alpha = 0 points the arm along body y; folding swings it towards x
        folded = np.array([0.0, sy * 0.5 * geom.arm_span])
        expected = hinges[i, :2] + _rotate_planar(folded, -sx * sy * alpha[i])
        np.testing.assert_allclose(tips[i, :2], expected, atol=1e-15)
        assert tips[i, 2] == geom.motor_height


def test_inertia_matches_point_mass_sum(geom):
    morph = MorphState(np.array([np.pi / 2, np.pi / 4, np.pi / 4, np.pi / 4]))
    props = inertial_props(geom, morph)

    hinges = geom.hinges()
    rod_mass = geom.arm_mass - geom.motor_mass
    points, masses = [np.zeros(3)], [geom.body_mass]
    for i, alpha in enumerate(morph.alpha):
        sx, sy = hinges[i, 0] > 0, hinges[i, 1] > 0
        direction = np.array([(1 if sx else -1) * np.sin(alpha), (1 if sy else -1) * np.cos(alpha), 0.0])
        points += [hinges[i] + 0.25 * geom.arm_span * direction, hinges[i] + 0.5 * geom.arm_span * direction]
        masses += [rod_mass, geom.motor_mass]
    points, masses = np.array(points), np.array(masses)

    cog = masses @ points / masses.sum()
    a, h = geom.hinge_span, geom.body_half_height
    J = geom.body_mass / 12.0 * np.diag([a**2 + 4 * h**2, a**2 + 4 * h**2, 2 * a**2])
    for m, r in zip(masses, points - cog):
        J = J + m * (r @ r * np.eye(3) - np.outer(r, r))

    np.testing.assert_allclose(props.cog_offset, cog, atol=1e-14)
    np.testing.assert_allclose(props.inertia, J, atol=1e-12)
    assert props.cog_offset[0] > 0.0


def test_asymmetric_allocation_matches_torque_sum(geom):
    morph = MorphState(np.array([np.pi / 2, np.pi / 4, np.pi / 4, np.pi / 4]))
    props = inertial_props(geom, morph)
    M = allocation_matrix(geom, props)
    U = np.array([2.1, 3.4, 2.7, 3.0])

    torque = np.zeros(3)
    for i in range(4):
        torque += np.cross(props.motor_positions[i] - props.cog_offset, [0.0, 0.0, U[i]])
        torque[2] += (1.0 if i < 2 else -1.0) * geom.yaw_moment_ratio * U[i]

    wrench = M @ U
    assert wrench[0] == pytest.approx(U.sum())
    np.testing.assert_allclose(wrench[1:], torque, atol=1e-14)
    np.testing.assert_allclose(np.linalg.solve(M, wrench), U, rtol=1e-10)


def test_cog_offset_is_lipschitz_in_arm_angles(geom):
    rng = np.random.default_rng(5)
    # each arm moves its lumped masses at most (l/2) per radian
    bound = 4.0 * geom.arm_mass * 0.5 * geom.arm_span / geom.total_mass
    for _ in range(20):
        alpha = rng.uniform(0.05, np.pi / 2 - 0.05, 4)
        delta = rng.normal(scale=1e-3, size=4)
        shift = inertial_props(geom, MorphState(alpha + delta)).cog_offset \
            - inertial_props(geom, MorphState(alpha)).cog_offset
        assert np.linalg.norm(shift) <= bound * np.linalg.norm(delta, ord=np.inf)


def test_extents_are_monotone_in_arm_angle(geom):
    r, w = half_extents_for_angle(geom, np.linspace(0.0, np.pi / 2, 50))
    assert np.all(np.diff(r) > 0.0)
    assert np.all(np.diff(w) < 0.0)


def test_extents_of_reference_airframe():
    geom = GeometryParams(hinge_span=0.2, arm_span=0.28)
    r, w = half_extents_for_angle(geom, np.pi / 2)
    assert r == pytest.approx(0.24)
    assert w == pytest.approx(0.10)
    r, w = half_extents_for_angle(geom, 0.0)
    assert r == pytest.approx(0.10)
    assert w == pytest.approx(0.24)
