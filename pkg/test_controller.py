"""
Tests for the cascaded controller pieces, RLS thrust estimation and allocation.
"""

import numpy as np
import pytest

from morphing.controller import (ControllerGains, HoverReference, NonlinearController, RlsState, allocate,
                                 attitude_loop, desired_attitude, position_loop, rls_update, servo_loop,
                                 torque_loop)
from morphing.dynamics import GRAVITY, DragParams, RigidState
from morphing.errors import SingularAllocation
from morphing.flatness import FlatOutputs
from morphing.morphology import GeometryParams, InertialProps, MorphState, allocation_matrix, inertial_props
from morphing.rotations import quat_from_axis_angle
from morphing.simulation import servo_step


@pytest.fixture
def geom():
    return GeometryParams()


@pytest.fixture
def x_props(geom):
    return inertial_props(geom, MorphState.preset("X"))


def _excitation(n):
    return GRAVITY + np.sin(0.05 * n)


def _run_rls(rls, slope, steps, start=0):
    history = []
    for n in range(start, start + steps):
        a_cmd_z = _excitation(n)
        c = a_cmd_z / rls.H
        rls = rls_update(rls, a_cmd_z, slope * c)
        history.append(rls.H)
    return rls, np.array(history)


def test_rls_zero_innovation_keeps_slope():
    rls = RlsState(H=1.3, P=10.0, rho=0.99)
    updated = rls_update(rls, 5.0, 5.0)
    assert updated.H == pytest.approx(1.3)
    assert updated.c == pytest.approx(5.0 / 1.3)


@pytest.mark.parametrize("slope", [0.5, 1.0, 2.0, 3.0])
def test_rls_converges_to_constant_slope(slope):
    rls, history = _run_rls(RlsState(H=1.0, P=100.0, rho=0.99), slope, 200)
    assert abs(history[-1] - slope) <= 1e-3
    assert np.all(np.abs(history[-50:] - slope) <= 1e-3)


def test_rls_tracks_slope_step():
    # error contracts by rho per step, so a 300 step budget needs rho below 0.987
    rls, _ = _run_rls(RlsState(H=1.0, P=100.0, rho=0.98), 2.0, 500)
    assert rls.H == pytest.approx(2.0, abs=1e-3)
    rls, history = _run_rls(rls, 1.6, 300, start=500)
    assert abs(history[-1] - 1.6) <= 1e-2
    assert history[0] > history[-1]


def test_rls_keeps_positive_slope():
    rls = rls_update(RlsState(H=1.0, P=1e6, rho=1.0), 9.81, -50.0)
    assert rls.H >= 1e-3


def test_allocation_hover_is_uniform(geom, x_props):
    M = allocation_matrix(geom, x_props)
    U = allocate(4.0, np.zeros(3), M, geom.max_rotor_thrust)
    np.testing.assert_allclose(U, 1.0)


def test_allocation_inverts_unsaturated_command(geom, x_props):
    M = allocation_matrix(geom, x_props)
    command = np.array([12.0, 0.05, -0.08, 0.01])
    U = allocate(command[0], command[1:], M, geom.max_rotor_thrust)
    np.testing.assert_allclose(M @ U, command, atol=1e-9)


def test_allocation_sheds_yaw_before_roll_and_pitch(geom, x_props):
    M = allocation_matrix(geom, x_props)
    tau = np.array([0.05, -0.05, 5.0])
    U = allocate(12.0, tau, M, geom.max_rotor_thrust)
    wrench = M @ U
    assert np.all(U >= 0.0) and np.all(U <= geom.max_rotor_thrust)
    np.testing.assert_allclose(wrench[:3], [12.0, 0.05, -0.05], atol=1e-9)
    assert 0.0 < wrench[3] < 5.0


def test_allocation_clamps_collective(geom, x_props):
    M = allocation_matrix(geom, x_props)
    U = allocate(100.0, np.zeros(3), M, geom.max_rotor_thrust)
    np.testing.assert_allclose(U, geom.max_rotor_thrust)
    U = allocate(-5.0, np.zeros(3), M, geom.max_rotor_thrust)
    np.testing.assert_allclose(U, 0.0)


def test_allocation_singular_matrix():
    with pytest.raises(SingularAllocation):
        allocate(1.0, np.zeros(3), np.zeros((4, 4)), 8.0)


def test_position_loop_at_hover(geom):
    gains = ControllerGains()
    flat = HoverReference([0.0, 0.0, 1.0]).flat_at(0.0)
    a_cmd = position_loop(RigidState(p=np.array([0.0, 0.0, 1.0])), flat, gains)
    np.testing.assert_allclose(a_cmd, [0.0, 0.0, GRAVITY])

    below = position_loop(RigidState(p=np.array([0.0, 0.0, 0.9])), flat, gains)
    assert below[2] > GRAVITY


def test_position_loop_drag_feedforward():
    ref = HoverReference([0.0, 0.0, 1.0]).flat_at(0.0)
    moving = FlatOutputs(ref.p, np.array([1.0, 0.0, 0.0]), ref.a, ref.j)
    state = RigidState(p=ref.p, v=np.array([1.0, 0.0, 0.0]))
    a_cmd = position_loop(state, moving, ControllerGains(), DragParams(D=np.array([0.3, 0.3, 0.1])))
    np.testing.assert_allclose(a_cmd, [0.3, 0.0, GRAVITY], atol=1e-12)


def test_attitude_loop_zero_error_and_feedforward():
    gains = ControllerGains()
    a_cmd = np.array([0.0, 0.0, GRAVITY])
    q_d, omega_cmd = attitude_loop(a_cmd, 0.0, RigidState(), gains)
    np.testing.assert_allclose(q_d, [1.0, 0.0, 0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(omega_cmd, 0.0, atol=1e-12)
    _, with_ff = attitude_loop(a_cmd, 0.0, RigidState(), gains, np.array([0.1, 0.2, 0.3]))
    np.testing.assert_allclose(with_ff, [0.1, 0.2, 0.3], atol=1e-12)


def test_attitude_loop_corrects_roll():
    rolled = RigidState(q=quat_from_axis_angle([1, 0, 0], 0.1))
    _, omega_cmd = attitude_loop(np.array([0.0, 0.0, GRAVITY]), 0.0, rolled, ControllerGains())
    assert omega_cmd[0] < 0.0
    assert abs(omega_cmd[1]) < 1e-12


def test_torque_loop_terms():
    J = np.diag([0.02, 0.03, 0.05])
    props = InertialProps(inertia=J, cog_offset=np.zeros(3), motor_positions=np.zeros((4, 3)))
    hover = torque_loop(np.zeros(3), np.zeros(3), np.zeros(3), RigidState(), props)
    np.testing.assert_allclose(hover, 0.0)
    spin = torque_loop(np.array([0.0, 0.0, 1.0]), np.zeros(3), np.zeros(3), RigidState(), props)
    np.testing.assert_allclose(spin, 0.0, atol=1e-15)

    rng = np.random.default_rng(3)
    omega_cmd, omega_dot_cmd, omega_dot_ff, v = rng.normal(size=(4, 3))
    A, B = np.diag(rng.uniform(0, 0.01, 3)), np.diag(rng.uniform(0, 0.01, 3))
    drag = DragParams(D=np.zeros(3), A=A, B=B)
    R_d = np.eye(3)
    state = RigidState(v=v)
    expected = (J @ (omega_dot_ff + omega_dot_cmd) + np.cross(omega_cmd, J @ omega_cmd)
                + A @ R_d.T @ v + B @ omega_cmd)
    tau = torque_loop(omega_cmd, omega_dot_cmd, omega_dot_ff, state, props, drag, R_d)
    np.testing.assert_allclose(tau, expected, atol=1e-12)


def test_servo_loop_tracks_and_clips():
    gains = ControllerGains(servo_kp=5.0, servo_kd=0.0, servo_slew=3.0)
    small = servo_loop(np.full(4, 0.7), np.full(4, 0.6), np.zeros(4), gains)
    np.testing.assert_allclose(small, 0.5)
    large = servo_loop(np.zeros(4), np.full(4, 1.5), np.zeros(4), gains)
    np.testing.assert_allclose(large, -3.0)


def test_nonlinear_controller_hover_command(geom, x_props):
    controller = NonlinearController(geom)
    reference = HoverReference([0.0, 0.0, 1.0]).sample(0.0, geom.total_mass, controller.drag)
    state = RigidState(p=np.array([0.0, 0.0, 1.0]))
    cmd = controller.compute(0.0, state, MorphState.preset("X"), x_props, reference, 0.001)
    assert cmd.f_cmd == pytest.approx(geom.total_mass * GRAVITY)
    np.testing.assert_allclose(cmd.tau_cmd, 0.0, atol=1e-9)
    np.testing.assert_allclose(cmd.rotor_thrusts, geom.total_mass * GRAVITY / 4, rtol=1e-6)
    np.testing.assert_allclose(cmd.alpha_cmd, 0.0, atol=1e-12)


def test_gain_validation():
    gains = ControllerGains(kp_pos=3.0, K_A=[1.0, 2.0, 3.0])
    np.testing.assert_allclose(gains.kp_pos, 3.0 * np.eye(3))
    np.testing.assert_allclose(gains.K_A, np.diag([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        ControllerGains(kp_pos=-1.0)
    with pytest.raises(ValueError):
        ControllerGains(rls_rho=0.5)


def test_quarter_turn_yaw_attitude():
    gains = ControllerGains()
    a_cmd = np.array([0.0, 0.0, GRAVITY])
    R = desired_attitude(a_cmd, np.pi / 2)
    np.testing.assert_allclose(R, [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]], atol=1e-12)
    q_d, omega_cmd = attitude_loop(a_cmd, np.pi / 2, RigidState(), gains)
    np.testing.assert_allclose(q_d, [np.sqrt(0.5), 0.0, 0.0, np.sqrt(0.5)], atol=1e-12)
    np.testing.assert_allclose(omega_cmd, [0.0, 0.0, 12.0 * np.sqrt(0.5)], atol=1e-12)


def test_attitude_loop_ignores_quaternion_sign():
    rng = np.random.default_rng(11)
    gains = ControllerGains()
    for _ in range(10):
        q = quat_from_axis_angle(rng.normal(size=3), rng.uniform(0.1, 3.0))
        a_cmd = np.array([rng.normal(), rng.normal(), GRAVITY + rng.normal()])
        psi = rng.uniform(-np.pi, np.pi)
        _, plus = attitude_loop(a_cmd, psi, RigidState(q=q), gains)
        _, minus = attitude_loop(a_cmd, psi, RigidState(q=-q), gains)
        np.testing.assert_allclose(plus, minus, atol=1e-12)


def test_servo_step_response_settles_without_overshoot():
    gains = ControllerGains()
    target = np.full(4, np.pi / 4)
    morph = MorphState.preset("H")
    dt = 0.001
    history = []
    for _ in range(2000):
        rate_cmd = servo_loop(target, morph.alpha, morph.alpha_dot, gains)
        morph = servo_step(morph, rate_cmd, 0.08, dt)
        history.append(morph.alpha[0])
        assert np.all(np.abs(morph.alpha_dot) <= gains.servo_slew + 1e-12)
    history = np.array(history)
    assert np.all(np.diff(history) >= -1e-12)
    assert history.max() <= np.pi / 4 + 1e-9
    np.testing.assert_allclose(morph.alpha, target, atol=1e-3)
