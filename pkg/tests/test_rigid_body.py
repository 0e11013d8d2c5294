import numpy as np
import pytest

from attflock.engine import run
from attflock.errors import SingularInertia
from attflock.quat import normalize, pure, quat_mul, rot_matrix
from attflock.rigid_body import (
    BodyParams,
    LeaderProfile,
    LeaderState,
    disturbance_torque,
    dynamics_deriv,
    error_state,
    feedforward,
    kinematics_deriv,
    leader_trajectory,
    xi_matrix,
)
from attflock.scenarios import preset

J = np.diag([10.0, 8.0, 12.0])
BODY = BodyParams(inertia=J)


class TestBodyParams:
    def test_asymmetric_rejected(self):
        j = np.array([[10.0, 1.0, 0.0], [0.0, 8.0, 0.0], [0.0, 0.0, 12.0]])
        with pytest.raises(SingularInertia):
            BodyParams(inertia=j)

    def test_indefinite_rejected(self):
        with pytest.raises(SingularInertia):
            BodyParams(inertia=np.diag([10.0, -1.0, 12.0]))

    def test_inverse(self):
        np.testing.assert_allclose(BODY.inertia_inv @ J, np.eye(3), atol=1e-14)


class TestLeaderProfile:
    def test_rate_at_zero(self):
        prof = LeaderProfile()
        np.testing.assert_allclose(prof.omega(0.0), [0.0, 0.01, 0.0], atol=1e-18)

    def test_rate_derivative_at_zero(self):
        prof = LeaderProfile()
        np.testing.assert_allclose(prof.omega_dot(0.0), [1e-4, 0.0, 1e-4], atol=1e-18)

    def test_derivatives_match_finite_differences(self):
        prof = LeaderProfile()
        h = 1e-5
        for t in (0.0, 3.7, 40.0):
            fd1 = (prof.omega(t + h) - prof.omega(t - h)) / (2 * h)
            np.testing.assert_allclose(prof.omega_dot(t), fd1, atol=1e-10)
            fd2 = (prof.omega_dot(t + h) - prof.omega_dot(t - h)) / (2 * h)
            np.testing.assert_allclose(prof.omega_ddot(t), fd2, atol=1e-12)

    def test_bounds_are_derivative_sups(self):
        b = LeaderProfile().bounds()
        assert b.gamma1 == pytest.approx(0.01, rel=1e-15)
        assert b.gamma2 == pytest.approx(1e-4, rel=1e-15)
        assert b.gamma3 == pytest.approx(1e-6, rel=1e-15)

    def test_leader_trajectory_uses_cointegrated_attitude(self):
        prof = LeaderProfile()
        q_now = normalize([0.9, 0.1, 0.2, 0.3])
        state = leader_trajectory(2.0, prof, q0_now=q_now)
        np.testing.assert_array_equal(state.q, q_now)
        np.testing.assert_allclose(state.omega, prof.omega(2.0), atol=1e-18)


class TestKinematics:
    def test_zero_rate(self):
        np.testing.assert_array_equal(kinematics_deriv([1, 0, 0, 0], np.zeros(3)), np.zeros(4))

    def test_identity_attitude(self):
        np.testing.assert_allclose(
            kinematics_deriv([1, 0, 0, 0], [2.0, 0, 0]), [0, 1, 0, 0], atol=1e-16
        )

    def test_matches_quaternion_product(self, rng):
        for _ in range(50):
            q = normalize(rng.standard_normal(4))
            w = rng.standard_normal(3)
            np.testing.assert_allclose(
                kinematics_deriv(q, w), 0.5 * quat_mul(q, pure(w)), atol=1e-14
            )


class TestDynamics:
    def test_principal_axis_spin(self):
        out = dynamics_deriv(BODY, [0.0, 0.01, 0.0], np.zeros(3))
        np.testing.assert_allclose(out, np.zeros(3), atol=1e-18)

    def test_energy_rate_is_zero_torque_free(self, rng):
        for _ in range(20):
            w = rng.standard_normal(3)
            wdot = dynamics_deriv(BODY, w, np.zeros(3))
            assert abs(w @ (J @ wdot)) <= 1e-14

    def test_gyroscopic_example(self):
        out = dynamics_deriv(BODY, [0.01, 0.01, 0.0], np.zeros(3))
        np.testing.assert_allclose(out, [0.0, 0.0, 0.0002 / 12.0], atol=1e-18)

    def test_disturbance_adds(self):
        d = np.array([0.1, -0.2, 0.3])
        base = dynamics_deriv(BODY, [0.1, 0.2, 0.3], np.zeros(3))
        out = dynamics_deriv(BODY, [0.1, 0.2, 0.3], np.zeros(3), disturbance=d)
        np.testing.assert_allclose(out - base, BODY.inertia_inv @ d, atol=1e-16)


class TestErrorState:
    def test_follower_equals_leader(self, rng):
        q = normalize(rng.standard_normal(4))
        w0 = np.array([0.01, -0.02, 0.03])
        leader = LeaderState(q=q, omega=w0, omega_dot=np.zeros(3))
        err = error_state(q, w0, leader)
        np.testing.assert_allclose(err.q_err, [1, 0, 0, 0], atol=1e-13)
        np.testing.assert_allclose(err.omega_err, np.zeros(3), atol=1e-14)
        np.testing.assert_allclose(err.omega_bar, w0, atol=1e-13)

    def test_leader_at_rest(self, rng):
        q = normalize(rng.standard_normal(4))
        leader = LeaderState(q=[1, 0, 0, 0], omega=np.zeros(3), omega_dot=np.zeros(3))
        w = rng.standard_normal(3)
        err = error_state(q, w, leader)
        np.testing.assert_allclose(err.omega_err, w, atol=1e-16)


class TestXiMatrix:
    def test_zero_rates(self):
        np.testing.assert_array_equal(xi_matrix(BODY, np.zeros(3), np.zeros(3)), np.zeros((3, 3)))

    def test_skew_symmetry(self, rng):
        for _ in range(100):
            we, wb, x = rng.standard_normal((3, 3))
            xi = xi_matrix(BODY, we, wb)
            np.testing.assert_allclose(xi + xi.T, np.zeros((3, 3)), atol=1e-13)
            assert abs(x @ xi @ x) <= 1e-12


class TestFeedforward:
    def test_leader_at_rest(self):
        from attflock.rigid_body import ErrorState

        err = ErrorState(q_err=np.array([1.0, 0, 0, 0]), omega_err=np.zeros(3), omega_bar=np.zeros(3))
        np.testing.assert_array_equal(feedforward(BODY, err, np.zeros(3)), np.zeros(3))

    def test_gyroscopic_term(self):
        from attflock.rigid_body import ErrorState

        w0 = np.array([0.01, 0.01, 0.0])
        err = ErrorState(q_err=np.array([1.0, 0, 0, 0]), omega_err=np.zeros(3), omega_bar=w0)
        np.testing.assert_allclose(
            feedforward(BODY, err, np.zeros(3)), [0.0, 0.0, -2e-4], atol=1e-18
        )

    def test_acceleration_term(self):
        from attflock.rigid_body import ErrorState

        err = ErrorState(q_err=np.array([1.0, 0, 0, 0]), omega_err=np.zeros(3), omega_bar=np.zeros(3))
        np.testing.assert_allclose(
            feedforward(BODY, err, [1e-4, 0.0, 1e-4]), [1e-3, 0.0, 1.2e-3], atol=1e-18
        )


class TestDisturbance:
    def test_profile_values(self):
        d = disturbance_torque(0.0, 0)
        np.testing.assert_allclose(d, [0.02, 0.0, 0.0], atol=1e-18)
        theta = 2 * np.pi / 45.0
        d = disturbance_torque(1.0, 0)
        np.testing.assert_allclose(
            d, 0.02 * np.array([np.cos(theta), np.sin(theta), -np.sin(theta)]), atol=1e-15
        )


@pytest.fixture(scope="module")
def torque_free_trace():
    cfg = preset("A")
    cfg.torque_enabled = False
    cfg.duration = 10.0
    return run(cfg)


class TestTrajectoryConsistency:
    def test_error_kinematics_finite_difference(self, torque_free_trace):
        tr = torque_free_trace
        h = tr.sample_dt
        q_err = tr.q_err  # (m, n, 4)
        dq = (q_err[2:] - q_err[:-2]) / (2 * h)
        for i in range(tr.n):
            predicted = 0.5 * np.array(
                [quat_mul(q_err[k, i], pure(tr.omega_err[k, i])) for k in range(1, len(tr.t) - 1)]
            )
            assert np.abs(dq[:, i] - predicted).max() <= 1e-5

    def test_error_dynamics_finite_difference(self, torque_free_trace):
        tr = torque_free_trace
        h = tr.sample_dt
        we = tr.omega_err
        dwe = (we[2:] - we[:-2]) / (2 * h)
        for i in range(tr.n):
            for k in range(1, len(tr.t) - 1, 25):
                from attflock.rigid_body import ErrorState

                err = ErrorState(
                    q_err=tr.q_err[k, i], omega_err=we[k, i],
                    omega_bar=rot_matrix(tr.q_err[k, i]) @ tr.omega_leader[k],
                )
                rhs = xi_matrix(BODY, err.omega_err, err.omega_bar) @ err.omega_err
                rhs = rhs - feedforward(BODY, err, tr.omega_dot_leader[k])
                residual = J @ dwe[k - 1, i] - rhs
                assert np.abs(residual).max() <= 1e-5

    def test_closed_loop_matches_direct_error_integration(self, torque_free_trace):
        # integrate the relative kinematics/dynamics directly and compare with
        # the engine's pointwise error states under the same (zero) torque
        tr = torque_free_trace
        cfg = tr.config
        prof = cfg.leader

        def rhs(t, y):
            q_e = y[:4]
            w_e = y[4:]
            w_bar = rot_matrix(q_e) @ prof.omega(t)
            from attflock.rigid_body import ErrorState

            err = ErrorState(q_err=q_e, omega_err=w_e, omega_bar=w_bar)
            u_f = feedforward(BODY, err, prof.omega_dot(t))
            dq = 0.5 * quat_mul(q_e, pure(w_e))
            dw = BODY.inertia_inv @ (xi_matrix(BODY, w_e, w_bar) @ w_e - u_f)
            return np.concatenate([dq, dw])

        dt = cfg.dt
        nst = int(round(cfg.duration / dt))
        for i in range(tr.n):
            y = np.concatenate([tr.q_err[0, i], tr.omega_err[0, i]])
            worst = 0.0
            sample = 0
            for k in range(nst):
                t = k * dt
                k1 = rhs(t, y)
                k2 = rhs(t + dt / 2, y + dt / 2 * k1)
                k3 = rhs(t + dt / 2, y + dt / 2 * k2)
                k4 = rhs(t + dt, y + dt * k3)
                y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
                y[:4] = normalize(y[:4])
                if (k + 1) % cfg.decimate == 0:
                    sample += 1
                    worst = max(
                        worst,
                        np.abs(y[:4] - tr.q_err[sample, i]).max(),
                        np.abs(y[4:] - tr.omega_err[sample, i]).max(),
                    )
            assert worst <= 1e-6

    def test_unit_norm_maintained(self, torque_free_trace):
        tr = torque_free_trace
        assert np.abs(np.linalg.norm(tr.q_agent, axis=2) - 1.0).max() <= 1e-9
        assert np.abs(np.linalg.norm(tr.q_leader, axis=1) - 1.0).max() <= 1e-9
