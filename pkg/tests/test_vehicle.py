"""Vehicle model tests: kinematic transforms, dynamics, model split."""

import numpy as np
import pytest

from auvform import vehicle as vm
from auvform.vehicle import (
    RigidBodyParams,
    SingularityError,
    VehicleState,
    Wrench6,
    dynamics_body,
    dynamics_inertial_terms,
    estimated_dynamics,
    kinematic_transform,
)


def random_state(rng, pitch_range=0.5):
    eta2 = np.array(
        [
            rng.uniform(-0.6, 0.6),
            rng.uniform(-pitch_range, pitch_range),
            rng.uniform(-np.pi, np.pi),
        ]
    )
    return VehicleState(
        rng.uniform(-5.0, 5.0, 3), eta2, rng.uniform(-1.0, 1.0, 3), rng.uniform(-0.5, 0.5, 3)
    )


def test_kinematic_transform_identity():
    state = VehicleState(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    js = kinematic_transform(state)
    np.testing.assert_allclose(js.rot, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(js.ang, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(js.full, np.eye(6), atol=1e-15)


def test_kinematic_transform_pure_yaw():
    state = VehicleState(np.zeros(3), np.array([0.0, 0.0, np.pi / 2]), np.zeros(3), np.zeros(3))
    js = kinematic_transform(state)
    # hand-composed Rz(pi/2)^T: inertial y maps onto body x
    expected = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(js.rot, expected, atol=1e-12)
    np.testing.assert_allclose(js.rot @ np.array([0.0, 1.0, 0.0]), [1.0, 0.0, 0.0], atol=1e-12)


def test_kinematic_transform_singularity():
    state = VehicleState(np.zeros(3), np.array([0.0, np.pi / 2, 0.0]), np.zeros(3), np.zeros(3))
    with pytest.raises(SingularityError):
        kinematic_transform(state)


def test_rotation_orthonormal():
    rng = np.random.default_rng(0)
    for _ in range(100):
        st = random_state(rng)
        js = kinematic_transform(st)
        np.testing.assert_allclose(js.rot @ js.rot.T, np.eye(3), atol=1e-10)
        assert np.linalg.det(js.rot) == pytest.approx(1.0, abs=1e-10)


def test_jacobian_maps_body_rates():
    rng = np.random.default_rng(1)
    for _ in range(20):
        st = random_state(rng)
        js = kinematic_transform(st)
        eta_dot = js.full @ st.nu
        # invert through the defining relations of rot/ang
        np.testing.assert_allclose(js.rot @ eta_dot[:3], st.nu1, atol=1e-12)
        np.testing.assert_allclose(js.ang @ eta_dot[3:], st.nu2, atol=1e-12)


def test_dynamics_body_equilibrium():
    params = RigidBodyParams(restoring_gain=0.0)
    state = VehicleState(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    acc = dynamics_body(state, Wrench6.zero(), Wrench6.zero(), params)
    np.testing.assert_allclose(acc, np.zeros(6), atol=1e-15)


def test_dynamics_body_pure_surge():
    m = 30.0
    params = RigidBodyParams(
        inertia=np.diag([m, m, m, 1.0, 5.0, 5.0]),
        d_linear=np.zeros(6),
        d_quad=np.zeros(6),
        restoring_gain=0.0,
    )
    state = VehicleState(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    force = 12.0
    tau = Wrench6(np.array([force, 0, 0, 0, 0, 0.0]))
    acc = dynamics_body(state, tau, Wrench6.zero(), params)
    np.testing.assert_allclose(acc, [force / m, 0, 0, 0, 0, 0], atol=1e-14)


def test_dynamics_body_disturbance_cancellation():
    params = RigidBodyParams(restoring_gain=0.0)
    state = VehicleState(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    tau = Wrench6(np.array([3.0, -2.0, 1.0, 0.0, 0.5, -0.5]))
    acc = dynamics_body(state, tau, Wrench6(tau.vec.copy()), params)
    np.testing.assert_allclose(acc, np.zeros(6), atol=1e-14)


def test_dynamics_body_rejects_inertial_wrench():
    params = RigidBodyParams()
    state = VehicleState(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        dynamics_body(state, Wrench6.zero("inertial"), Wrench6.zero(), params)


def test_inertial_terms_identity_pose():
    params = RigidBodyParams()
    state = VehicleState(np.zeros(3), np.zeros(3), np.array([0.3, 0.1, -0.2]), np.zeros(3))
    terms = dynamics_inertial_terms(state, params)
    np.testing.assert_allclose(terms.m_e, params.inertia, atol=1e-12)
    np.testing.assert_allclose(terms.d_e, params.damping(state.nu), atol=1e-12)
    np.testing.assert_allclose(terms.g_e, params.restoring(state.eta2), atol=1e-12)


def test_inertial_mass_symmetric_positive_definite():
    rng = np.random.default_rng(2)
    params = RigidBodyParams()
    for _ in range(100):
        st = random_state(rng)
        m_e = dynamics_inertial_terms(st, params).m_e
        assert np.max(np.abs(m_e - m_e.T)) < 1e-10
        assert np.all(np.linalg.eigvalsh(m_e) > 0)


def test_skew_symmetry_of_inertial_terms():
    # M_e_dot by central finite difference of the pose along its motion
    rng = np.random.default_rng(3)
    params = RigidBodyParams()
    h = 1e-5
    for _ in range(100):
        st = random_state(rng)
        m_e, c_e, _, _ = vm.inertial_matrices(st.eta2, st.nu, params)
        eta2_dot = vm.body_rate_to_euler(st.eta2) @ st.nu2
        m_plus = vm.inertial_matrices(st.eta2 + eta2_dot * h, st.nu, params)[0]
        m_minus = vm.inertial_matrices(st.eta2 - eta2_dot * h, st.nu, params)[0]
        m_dot = (m_plus - m_minus) / (2 * h)
        sigma = rng.uniform(-1.0, 1.0, 6)
        assert abs(sigma @ (m_dot - 2 * c_e) @ sigma) < 1e-6


def test_frame_consistency():
    # body-frame dynamics mapped through the transform equals the
    # inertial-frame dynamics solved directly
    rng = np.random.default_rng(4)
    params = RigidBodyParams()
    for _ in range(100):
        st = random_state(rng)
        tau = rng.uniform(-20.0, 20.0, 6)
        tau_c = rng.uniform(-5.0, 5.0, 6)
        qdot = vm.acceleration_body(st.eta, st.nu, tau, tau_c, params)
        jac = vm.jacobian(st.eta2)
        jac_dot = vm.jacobian_dot(st.eta2, st.nu2)
        edd_body_route = jac_dot @ st.nu + jac @ qdot

        m_e, c_e, d_e, g_e = vm.inertial_matrices(st.eta2, st.nu, params)
        e_dot = jac @ st.nu
        rhs = vm.jacobian_inv(st.eta2).T @ (tau - tau_c) - c_e @ e_dot - d_e @ e_dot - g_e
        edd_inertial_route = np.linalg.solve(m_e, rhs)
        scale = max(1.0, np.max(np.abs(edd_body_route)))
        assert np.max(np.abs(edd_body_route - edd_inertial_route)) / scale < 1e-6


def test_estimated_dynamics_perfect_model():
    rng = np.random.default_rng(5)
    params = RigidBodyParams(mismatch_factor=1.0)
    st = random_state(rng)
    edd_r = rng.uniform(-1.0, 1.0, 6)
    ed_r = rng.uniform(-1.0, 1.0, 6)
    f_hat = estimated_dynamics(st, edd_r, params, ed_r=ed_r)
    f_true = vm.reference_dynamics(st.eta2, st.nu, edd_r, params, ed_r=ed_r, scale=1.0)
    np.testing.assert_allclose(f_hat, f_true, atol=1e-12)


def test_estimated_dynamics_zero_case():
    params = RigidBodyParams(restoring_gain=0.0, mismatch_factor=0.7)
    state = VehicleState(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
    f_hat = estimated_dynamics(state, np.zeros(6), params)
    np.testing.assert_allclose(f_hat, np.zeros(6), atol=1e-14)


def test_model_split_is_exact():
    # f_hat + f_tilde = f, with f_tilde = (1 - a) f for the uniform scaling
    rng = np.random.default_rng(6)
    params = RigidBodyParams(mismatch_factor=0.8)
    st = random_state(rng)
    edd_r = rng.uniform(-1.0, 1.0, 6)
    ed_r = rng.uniform(-1.0, 1.0, 6)
    f_true = vm.reference_dynamics(st.eta2, st.nu, edd_r, params, ed_r=ed_r, scale=1.0)
    f_hat = estimated_dynamics(st, edd_r, params, ed_r=ed_r)
    f_tilde = f_true - f_hat
    np.testing.assert_allclose(f_tilde, 0.2 * f_true, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(f_hat + f_tilde, f_true, atol=1e-12)


def test_estimated_params_scaling():
    params = RigidBodyParams(mismatch_factor=0.8)
    est = params.estimated()
    np.testing.assert_allclose(est.inertia, 0.8 * params.inertia)
    np.testing.assert_allclose(est.d_linear, 0.8 * params.d_linear)
    assert est.mismatch_factor == 1.0


def test_params_validation():
    with pytest.raises(ValueError):
        RigidBodyParams(inertia=np.zeros((6, 6)))
    with pytest.raises(ValueError):
        RigidBodyParams(mismatch_factor=0.0)
    with pytest.raises(ValueError):
        RigidBodyParams(mismatch_factor=1.5)


def test_coriolis_skew():
    rng = np.random.default_rng(7)
    params = RigidBodyParams()
    for _ in range(20):
        nu = rng.uniform(-1.0, 1.0, 6)
        c = params.coriolis(nu)
        np.testing.assert_allclose(c, -c.T, atol=1e-12)


def test_wrap_angle_range():
    angles = np.array([0.0, np.pi, -np.pi, 3 * np.pi, -2.5 * np.pi, 1.0])
    wrapped = vm.wrap_angle(angles)
    assert np.all(wrapped > -np.pi) and np.all(wrapped <= np.pi)
    np.testing.assert_allclose(np.sin(wrapped), np.sin(angles), atol=1e-12)
    np.testing.assert_allclose(np.cos(wrapped), np.cos(angles), atol=1e-12)
