import numpy as np
import pytest

import morsecr as mc
from morsecr.statics import check_command
from tests.conftest import random_configuration


def tendon_model(n=10, termination=None, beta=0.0, moment_arm=0.01, stiffness=1.0):
    termination = n - 1 if termination is None else termination
    return mc.straight_model(
        n, stiffness=stiffness,
        actuators=[mc.ActuatorElement.tendon(termination, beta, moment_arm)],
    )


def magnet_model(n=10, joint=None, moment=(0.0, 0.0, 1.0), stiffness=1.0):
    joint = n - 1 if joint is None else joint
    return mc.straight_model(
        n, stiffness=stiffness,
        actuators=[mc.ActuatorElement.magnet(joint, moment)],
    )


# --- external torque ---------------------------------------------------------

def test_direct_zero_torque():
    model = mc.straight_model(4)
    theta = mc.Configuration(np.zeros((4, 3)))
    tau = mc.external_torque(model, theta, mc.ActuationCommand.direct(np.zeros(12)))
    assert np.array_equal(tau, np.zeros(12))


def test_magnet_moment_parallel_to_field_is_inert():
    model = magnet_model(6, joint=5, moment=(0, 0, 2.0))
    theta = mc.Configuration(np.zeros((6, 3)))
    tau = mc.external_torque(model, theta, mc.ActuationCommand.magnet([0, 0, 0.4]))
    assert np.allclose(tau, 0.0, atol=1e-15)


def test_single_tendon_uniform_moment():
    # T=1, d=0.01, beta=0, straight robot, termination at the last joint:
    # every joint sees moment 0.01 about its binormal axis.
    model = tendon_model(10)
    theta = mc.Configuration(np.zeros((10, 3)))
    tau = mc.external_torque(model, theta, mc.ActuationCommand.tendon([1.0]))
    expected = np.tile(0.01 * model.ref_binormals[0], 10)
    assert np.allclose(tau, expected, atol=1e-15)


def test_tendon_torque_stops_at_termination():
    model = tendon_model(6, termination=3)
    theta = mc.Configuration(np.zeros((6, 3)))
    tau = mc.external_torque(model, theta, mc.ActuationCommand.tendon([2.0])).reshape(6, 3)
    assert np.allclose(tau[:4], 0.02 * model.ref_binormals[:4], atol=1e-15)
    assert np.array_equal(tau[4:], np.zeros((2, 3)))


def test_command_compatibility_errors():
    model = tendon_model(5)
    theta = mc.Configuration(np.zeros((5, 3)))
    with pytest.raises(ValueError, match="no such actuator"):
        mc.external_torque(model, theta, mc.ActuationCommand.magnet([0, 0, 1]))
    with pytest.raises(ValueError, match="tensions"):
        mc.external_torque(model, theta, mc.ActuationCommand.tendon([1.0, 2.0]))
    with pytest.raises(ValueError, match="non-negative"):
        mc.ActuationCommand.tendon([-1.0])
    with pytest.raises(ValueError, match="torques"):
        check_command(model, mc.ActuationCommand.direct(np.zeros(7)))


# --- residual ----------------------------------------------------------------

def test_residual_zero_at_reference():
    model = mc.straight_model(5)
    res = mc.residual(
        model, model.theta_bar, mc.ActuationCommand.direct(np.zeros(15))
    )
    assert np.array_equal(res, np.zeros(15))


def test_residual_linear_term(rng):
    model = mc.straight_model(5, stiffness=(2.0, 3.0, 4.0))
    delta = 0.1 * rng.standard_normal(15)
    theta = mc.Configuration(model.theta_bar.flat + delta)
    res = mc.residual(model, theta, mc.ActuationCommand.direct(np.zeros(15)))
    assert np.allclose(res, model.stiffness_flat * delta, atol=1e-15)


def test_residual_vanishes_at_hand_solution():
    # uniform tendon moment m about the binormal: theta_i = (m / k) vbar
    model = tendon_model(8, stiffness=2.5)
    moment = 1.0 * 0.01
    theta = mc.Configuration(np.tile(moment / 2.5 * model.ref_binormals[0], (8, 1)))
    res = mc.residual(model, theta, mc.ActuationCommand.tendon([1.0]))
    assert np.max(np.abs(res)) < 1e-15


# --- jacobian ----------------------------------------------------------------

def test_jacobian_is_stiffness_for_constant_torque(rng):
    model = mc.straight_model(4, stiffness=(1.5, 2.5, 3.5))
    theta = random_configuration(rng, 4)
    jac = mc.residual_jacobian(model, theta, mc.ActuationCommand.direct(np.ones(12)))
    assert np.array_equal(jac, np.diag(model.stiffness_flat))
    model2 = tendon_model(4)
    jac2 = mc.residual_jacobian(model2, theta, mc.ActuationCommand.tendon([1.3]))
    assert np.array_equal(jac2, np.diag(model2.stiffness_flat))


def test_jacobian_matches_forward_difference(rng):
    model = magnet_model(5, joint=4)
    theta = random_configuration(rng, 5, max_norm=0.4)
    u = mc.ActuationCommand.magnet([0.02, 0.01, 0.03])
    jac = mc.residual_jacobian(model, theta, u)

    h = 1e-6
    fwd = np.zeros_like(jac)
    base = mc.residual(model, theta, u)
    for k in range(15):
        probe = theta.flat.copy()
        probe[k] += h
        fwd[:, k] = (mc.residual(model, mc.Configuration(probe), u) - base) / h
    scale = np.max(np.abs(jac))
    assert np.max(np.abs(jac - fwd)) <= 1e-4 * scale


def test_jacobian_taylor_remainder_is_second_order(rng):
    model = magnet_model(6, joint=5, moment=(0, 0, 1.0))
    theta = random_configuration(rng, 6, max_norm=0.5)
    u = mc.ActuationCommand.magnet([0.05, 0.0, 0.02])
    jac = mc.residual_jacobian(model, theta, u)
    base = mc.residual(model, theta, u)
    steps = np.array([1e-3, 1e-4, 1e-5, 1e-6])
    k = 4
    errors = []
    for h in steps:
        probe = theta.flat.copy()
        probe[k] += h
        shifted = mc.residual(model, mc.Configuration(probe), u)
        errors.append(np.linalg.norm(shifted - base - h * jac[:, k]))
    slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
    assert slope >= 1.9


# --- equilibrium solver ------------------------------------------------------

def test_solver_zero_iterations_at_reference():
    model = mc.straight_model(6)
    report = mc.solve_equilibrium(model, mc.ActuationCommand.direct(np.zeros(18)))
    assert report.converged
    assert report.iterations == 0
    assert np.array_equal(report.theta.joints, model.theta_bar.joints)


def test_solver_constant_curvature_matches_hand_solution():
    model = tendon_model(12, stiffness=2.0)
    tension = 3.0
    report = mc.solve_equilibrium(model, mc.ActuationCommand.tendon([tension]))
    assert report.converged
    hand = np.tile(tension * 0.01 / 2.0 * model.ref_binormals[0], (12, 1))
    assert np.max(np.abs(report.theta.joints - hand)) <= 1e-8
    # constant-curvature check: equal turning between consecutive tangents
    shape = mc.forward_kinematics(model, report.theta)
    cosines = np.einsum("ij,ij->i", shape.tangents[:-1], shape.tangents[1:])
    turns = np.arccos(np.clip(cosines, -1, 1))
    assert np.allclose(turns, turns[0], atol=1e-10)


def test_solver_magnet_tip_deflects_toward_alignment():
    model = magnet_model(8, joint=7, moment=(0, 0, 1.0))
    field = mc.ActuationCommand.magnet([0.01, 0.0, 0.0])
    report = mc.solve_equilibrium(model, field)
    assert report.converged
    assert report.residual_norm <= 1e-9
    shape = mc.forward_kinematics(model, report.theta)
    # dipole starts along +z, field along +x: the tip tilts toward +x
    assert shape.tangents[-1][0] > 1e-4
    assert mc.residual(model, report.theta, field).max() <= 1e-9


def test_solver_finds_reference_from_random_guesses(rng):
    model = mc.straight_model(5)
    u = mc.ActuationCommand.direct(np.zeros(15))
    for _ in range(20):
        start = random_configuration(rng, 5, max_norm=1.0)
        report = mc.solve_equilibrium(model, u, theta_init=start)
        assert report.converged
        assert np.max(np.abs(report.theta.flat)) <= 1e-10


def test_solver_merit_non_increasing_across_iterations():
    model = magnet_model(8, joint=7, moment=(0, 0, 1.0))
    u = mc.ActuationCommand.magnet([0.3, 0.0, -0.1])
    start = mc.Configuration(np.tile([0.4, 0.3, -0.2], (8, 1)))
    merits = []
    for cap in range(7):
        report = mc.solve_equilibrium(model, u, theta_init=start, max_iterations=cap)
        res = mc.residual(model, report.theta, u)
        merits.append(float(res @ res))
    # identical iterate prefixes: capped runs expose the accepted sequence
    assert all(b <= a * (1 + 1e-12) for a, b in zip(merits, merits[1:]))


def test_solver_reports_nonconvergence_without_raising():
    model = magnet_model(8, joint=7, moment=(0, 0, 1.0))
    u = mc.ActuationCommand.magnet([0.5, 0.0, 0.0])
    report = mc.solve_equilibrium(model, u, max_iterations=1)
    assert not report.converged
    assert report.iterations == 1
    assert report.residual_norm > 1e-9


def test_solver_respects_tau_int_hook():
    model = mc.straight_model(4, stiffness=2.0)

    def tau_int(robot, theta_flat):
        return 0.5 * theta_flat

    report = mc.solve_equilibrium(
        model, mc.ActuationCommand.direct(np.full(12, 1.0)), tau_int=tau_int
    )
    assert report.converged
    # balance: 2 theta + 0.5 theta = 1
    assert np.allclose(report.theta.flat, 1.0 / 2.5, atol=1e-9)
