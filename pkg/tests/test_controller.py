import inspect

import numpy as np
import pytest

from attflock.controller import (
    ATTITUDE_ONLY,
    FULL_STATE,
    ControllerGains,
    HybridLogic,
    attitude_only_torque,
    compute_delta,
    estimated_errors,
    filter_deriv,
    filter_signals,
    full_state_torque,
    jump_attitude_only,
    jump_full_state,
    sgn_bar,
)
from attflock.engine import run
from attflock.errors import ConfigInvalid
from attflock.observer import consensus_inputs
from attflock.quat import normalize, pure, quat_mul, rot_matrix
from attflock.rigid_body import BodyParams, LeaderState, error_state, feedforward
from attflock.scenarios import controller_defaults, preset

BODY = BodyParams(inertia=np.diag([10.0, 8.0, 12.0]))
FS = controller_defaults(FULL_STATE)
AO = controller_defaults(ATTITUDE_ONLY)
KAPPA_EQUATOR = 2.0 ** -0.2  # kappa of a pure-vector unit quaternion at exponent 0.4


class TestGainValidation:
    def test_table_defaults_pass(self):
        FS.validate()
        AO.validate()

    def test_full_state_exponent_tie(self):
        with pytest.raises(ConfigInvalid):
            ControllerGains(alpha_p=0.6, alpha_d=0.8, mode=FULL_STATE).validate()

    def test_attitude_only_exponent_tie(self):
        with pytest.raises(ConfigInvalid):
            ControllerGains(alpha_p=0.5, alpha_q=0.8, mode=ATTITUDE_ONLY).validate()

    def test_asymptotic_limit_allowed(self):
        ControllerGains(alpha_p=1.0, alpha_d=1.0, mode=FULL_STATE).validate()
        ControllerGains(alpha_p=1.0, alpha_q=1.0, alpha_d=1.0, mode=ATTITUDE_ONLY).validate()

    def test_delta_range(self):
        with pytest.raises(ConfigInvalid):
            ControllerGains(delta=1.0).validate()

    def test_unknown_mode(self):
        with pytest.raises(ConfigInvalid):
            ControllerGains(mode="other").validate()

    def test_sgn_bar_tie_break(self):
        assert sgn_bar(0.0) == 1.0
        assert sgn_bar(-1e-300) == -1.0


class TestEstimatedErrors:
    def test_exact_observer_matches_true_errors(self, rng):
        q0 = normalize(rng.standard_normal(4))
        w0 = np.array([0.003, -0.009, 0.005])
        w0_dot = np.array([1e-4, -2e-4, 5e-5])
        q_i = normalize(rng.standard_normal(4))
        w_i = rng.standard_normal(3) * 0.3
        est = estimated_errors(q_i, w_i, q0, w0, w0_dot, BODY)
        truth = error_state(q_i, w_i, LeaderState(q=q0, omega=w0, omega_dot=w0_dot))
        np.testing.assert_allclose(est.q_hat, truth.q_err, atol=1e-12)
        np.testing.assert_allclose(est.omega_hat, truth.omega_err, atol=1e-12)
        np.testing.assert_allclose(
            est.u_f_hat, feedforward(BODY, truth, w0_dot), atol=1e-12
        )

    def test_non_unit_estimate_scales_q_hat(self, rng):
        q0 = normalize(rng.standard_normal(4))
        q_i = normalize(rng.standard_normal(4))
        est = estimated_errors(q_i, np.zeros(3), 2.0 * q0, np.zeros(3), np.zeros(3), BODY)
        assert np.linalg.norm(est.q_hat) == pytest.approx(2.0, abs=1e-12)
        # downstream feedback kernel still respects its norm bound
        from attflock.quat import kappa1_bar

        k = kappa1_bar(est.q_hat, 0.4)
        assert np.linalg.norm(k) <= 2.0 ** 0.6 + 1e-12

    def test_rest_gives_zero_feedforward(self, rng):
        q0 = normalize(rng.standard_normal(4))
        q_i = normalize(rng.standard_normal(4))
        est = estimated_errors(q_i, np.zeros(3), q0, np.zeros(3), np.zeros(3), BODY)
        np.testing.assert_allclose(est.u_f_hat, np.zeros(3), atol=1e-16)


class TestFullStateTorque:
    def test_zero_at_consensus(self):
        est = estimated_errors([1.0, 0, 0, 0], np.zeros(3), [1.0, 0, 0, 0],
                               np.zeros(3), np.zeros(3), BODY)
        u = full_state_torque(est, HybridLogic(), FS)
        np.testing.assert_array_equal(u, np.zeros(3))

    def test_attitude_term_value(self):
        from attflock.controller import EstimatedErrors

        est = EstimatedErrors(
            q_hat=np.array([0.0, 1.0, 0.0, 0.0]), omega_hat=np.zeros(3), u_f_hat=np.zeros(3)
        )
        u = full_state_torque(est, HybridLogic(h=1.0), FS)
        np.testing.assert_allclose(u, [-4.0 * KAPPA_EQUATOR, 0.0, 0.0], rtol=1e-12)

    def test_rate_term_saturates(self):
        from attflock.controller import EstimatedErrors

        est = EstimatedErrors(
            q_hat=np.array([1.0, 0, 0, 0]), omega_hat=np.array([2.0, 0, 0]), u_f_hat=np.zeros(3)
        )
        u = full_state_torque(est, HybridLogic(), FS)
        np.testing.assert_allclose(u, [-8.0, 0.0, 0.0], atol=1e-15)


class TestFullStateJump:
    def mk(self, eta):
        from attflock.controller import EstimatedErrors

        return EstimatedErrors(
            q_hat=np.array([eta, 0.1, 0.0, 0.0]), omega_hat=np.zeros(3), u_f_hat=np.zeros(3)
        )

    def test_flip_when_past_width(self):
        logic = jump_full_state(self.mk(-0.3), HybridLogic(h=1.0), FS)
        assert logic.h == -1.0 and logic.jump_count == 1

    def test_hold_inside_width(self):
        logic = jump_full_state(self.mk(-0.1), HybridLogic(h=1.0), FS)
        assert logic.h == 1.0 and logic.jump_count == 0

    def test_flip_back(self):
        logic = jump_full_state(self.mk(0.25), HybridLogic(h=-1.0), FS)
        assert logic.h == 1.0 and logic.jump_count == 1


class TestFilter:
    def test_aligned_filter_gives_zero_rate(self, rng):
        q_hat = normalize(rng.standard_normal(4))
        from attflock.controller import EstimatedErrors

        est = EstimatedErrors(q_hat=q_hat.copy(), omega_hat=np.zeros(3), u_f_hat=np.zeros(3))
        q_tilde, omega_cmd = filter_signals(q_hat, est, HybridLogic(), AO)
        np.testing.assert_allclose(q_tilde, [1, 0, 0, 0], atol=1e-13)
        np.testing.assert_allclose(omega_cmd, np.zeros(3), atol=1e-13)
        np.testing.assert_allclose(filter_deriv(q_hat, est, HybridLogic(), AO), np.zeros(4), atol=1e-13)

    def test_equator_rate_command(self):
        # filter error a pure vector: kappa at exponent 1-alpha_q, transported back
        from attflock.controller import EstimatedErrors

        q_bar = np.array([1.0, 0, 0, 0])
        est = EstimatedErrors(
            q_hat=np.array([0.0, 1.0, 0.0, 0.0]), omega_hat=np.zeros(3), u_f_hat=np.zeros(3)
        )
        q_tilde, omega_cmd = filter_signals(q_bar, est, HybridLogic(), AO)
        np.testing.assert_allclose(q_tilde, [0.0, 1.0, 0.0, 0.0], atol=1e-15)
        kappa = 2.0 ** -0.1  # exponent 1 - alpha_q = 0.2
        expected = 3.0 * rot_matrix(q_tilde).T @ np.array([kappa, 0.0, 0.0])
        np.testing.assert_allclose(omega_cmd, expected, rtol=1e-12)
        np.testing.assert_allclose(omega_cmd, [3.0 * kappa, 0.0, 0.0], rtol=1e-12)

    def test_rate_is_tangent(self, rng):
        from attflock.controller import EstimatedErrors

        for _ in range(20):
            q_bar = normalize(rng.standard_normal(4))
            est = EstimatedErrors(
                q_hat=rng.standard_normal(4), omega_hat=np.zeros(3), u_f_hat=np.zeros(3)
            )
            rate = filter_deriv(q_bar, est, HybridLogic(), AO)
            assert abs(q_bar @ rate) <= 1e-13


class TestAttitudeOnlyTorque:
    def test_zero_at_consensus(self):
        est = estimated_errors([1.0, 0, 0, 0], np.zeros(3), [1.0, 0, 0, 0],
                               np.zeros(3), np.zeros(3), BODY)
        u = attitude_only_torque(est, np.array([1.0, 0, 0, 0]), HybridLogic(), AO)
        np.testing.assert_array_equal(u, np.zeros(3))

    def test_filter_damping_value(self):
        from attflock.controller import EstimatedErrors

        est = EstimatedErrors(
            q_hat=np.array([1.0, 0, 0, 0]), omega_hat=np.zeros(3), u_f_hat=np.zeros(3)
        )
        u = attitude_only_torque(est, np.array([0.0, 1.0, 0.0, 0.0]), HybridLogic(), AO)
        np.testing.assert_allclose(u, [-10.0 * KAPPA_EQUATOR, 0.0, 0.0], rtol=1e-12)

    def test_signature_takes_no_rate(self):
        params = inspect.signature(attitude_only_torque).parameters
        assert "omega" not in " ".join(params)
        # and the result does not react to the estimated rate error
        from attflock.controller import EstimatedErrors

        a = EstimatedErrors(
            q_hat=np.array([0.9, 0.1, 0.2, 0.1]), omega_hat=np.zeros(3), u_f_hat=np.zeros(3)
        )
        b = EstimatedErrors(
            q_hat=a.q_hat.copy(), omega_hat=np.array([5.0, -4.0, 3.0]), u_f_hat=np.zeros(3)
        )
        qt = np.array([0.8, 0.1, -0.2, 0.3])
        np.testing.assert_array_equal(
            attitude_only_torque(a, qt, HybridLogic(), AO),
            attitude_only_torque(b, qt, HybridLogic(), AO),
        )


class TestAttitudeOnlyJump:
    def mk(self, eta_hat):
        from attflock.controller import EstimatedErrors

        return EstimatedErrors(
            q_hat=np.array([eta_hat, 0.1, 0, 0]), omega_hat=np.zeros(3), u_f_hat=np.zeros(3)
        )

    def test_only_h_condition_fires(self):
        logic = jump_attitude_only(self.mk(-0.3), [0.5, 0, 0, 0], HybridLogic(), AO)
        assert logic.h == -1.0 and logic.h_tilde == 1.0 and logic.jump_count == 1

    def test_both_flip_in_one_event(self):
        logic = jump_attitude_only(self.mk(-0.3), [-0.4, 0, 0, 0], HybridLogic(), AO)
        assert logic.h == -1.0 and logic.h_tilde == -1.0 and logic.jump_count == 1

    def test_no_change_inside_flow_set(self):
        logic = jump_attitude_only(self.mk(0.5), [0.5, 0, 0, 0], HybridLogic(), AO)
        assert logic == HybridLogic()


class TestDelta:
    def test_zero_for_unit_estimate_and_zero_consensus(self, rng):
        q0 = normalize(rng.standard_normal(4))
        q_i = normalize(rng.standard_normal(4))
        est = estimated_errors(q_i, np.zeros(3), q0, rng.standard_normal(3), np.zeros(3), BODY)
        q_bar = normalize(rng.standard_normal(4))
        q_tilde, omega_cmd = filter_signals(q_bar, est, HybridLogic(), AO)
        delta = compute_delta(
            q_bar, q_tilde, omega_cmd, est, rng.standard_normal(3),
            np.zeros(4), q_i, lambda1=5.0, beta1=0.8,
        )
        assert np.abs(delta).max() <= 1e-12

    def test_filter_kinematics_identity_mid_transient(self):
        # sampled d/dt of the filter error equals the nominal kinematics plus
        # half the coupling term, to integration-step order
        cfg = preset("A", mode=ATTITUDE_ONLY)
        cfg.duration = 3.0
        cfg.comm_hz = 1000.0  # exchange every step so samples are instantaneous
        cfg.decimate = 1
        tr = run(cfg)
        jump_steps = set(int(e[0]) for e in tr.events)
        h = cfg.dt
        worst_with = 0.0
        worst_without = 0.0
        checked = 0
        for k in range(200, len(tr.t) - 2, 40):
            if any(abs(k - js) <= 2 for js in jump_steps):
                continue
            for i in range(tr.n):
                window = []
                for kk in (k - 1, k, k + 1):
                    est = estimated_errors(
                        tr.q_agent[kk, i], tr.omega_agent[kk, i], tr.p_est[kk, i],
                        tr.v_est[kk, i], tr.z_est[kk, i], cfg.body,
                    )
                    logic = HybridLogic(h=tr.h[kk, i], h_tilde=tr.h_tilde[kk, i])
                    window.append((*filter_signals(tr.q_filter[kk, i], est, logic,
                                                   cfg.controller_gains), est))
                dq_fd = (window[2][0] - window[0][0]) / (2 * h)
                q_tilde, omega_cmd, est = window[1]
                nominal = 0.5 * quat_mul(
                    q_tilde, pure(est.omega_hat - rot_matrix(q_tilde) @ omega_cmd)
                )
                p_s = consensus_inputs(tr.p_est[k], tr.q_leader[k], cfg.topology)[i]
                delta = compute_delta(
                    tr.q_filter[k, i], q_tilde, omega_cmd, est, tr.v_est[k, i],
                    p_s, tr.q_agent[k, i],
                    cfg.observer_gains.lambda1, cfg.observer_gains.beta1,
                )
                worst_with = max(worst_with, np.abs(dq_fd - nominal - 0.5 * delta).max())
                worst_without = max(worst_without, np.abs(dq_fd - nominal).max())
                checked += 1
        assert checked > 100
        assert worst_with <= 0.05           # O(h) at transient magnitudes
        assert worst_with <= worst_without / 50.0  # the coupling term carries the defect


class TestFilterNormIdentity:
    def test_filter_error_norm_tracks_estimate_norm(self, trace_a_att):
        # ||Q~|| = ||Qbar|| * ||Q^|| = ||P|| along the whole trajectory
        tr = trace_a_att
        for k in range(0, len(tr.t), 200):
            for i in range(tr.n):
                q_hat = quat_mul(
                    np.append(tr.p_est[k, i, 0], -tr.p_est[k, i, 1:]), tr.q_agent[k, i]
                )
                q_tilde = quat_mul(
                    np.append(tr.q_filter[k, i, 0], -tr.q_filter[k, i, 1:]), q_hat
                )
                p_norm = np.linalg.norm(tr.p_est[k, i])
                assert np.linalg.norm(q_tilde) == pytest.approx(p_norm, abs=1e-9)
                assert np.linalg.norm(q_hat) == pytest.approx(p_norm, abs=1e-9)


class TestUnwindingAvoidance:
    def test_single_early_jump_and_short_path(self):
        # follower 4 starts with a strongly negative scalar part; with a
        # truth-initialized observer it must flip its logic variable once,
        # then rotate the short way (total rotation well under a full turn)
        cfg = preset("A")
        cfg.p_init = np.tile(cfg.leader.q0, (4, 1))
        cfg.v_init = np.tile(cfg.leader.omega(0.0), (4, 1))
        cfg.z_init = np.tile(cfg.leader.omega_dot(0.0), (4, 1))
        cfg.y_init = np.tile(cfg.leader.omega(0.0), (4, 1))
        cfg.w_init = np.tile(cfg.leader.omega_dot(0.0), (4, 1))
        tr = run(cfg)
        assert cfg.q_init[3, 0] < -cfg.controller_gains.delta
        assert tr.jump_count[-1, 3] == 1
        assert tr.events[0, 1] == 3 and tr.t[-1] * 0.05 > tr.events[0, 0] * cfg.dt  # early
        # consensus reached at h = -1 for that follower
        assert tr.h[-1, 3] == -1.0
        assert abs(tr.h[-1, 3] * tr.eta_err[-1, 3] - 1.0) < 1e-2
        # total rotation angle traversed stays below a full turn
        angle = np.trapezoid(tr.omega_err_norm[:, 3], tr.t)
        assert angle < 2 * np.pi


class TestConsensusInvariants:
    def test_torque_equals_feedforward_at_consensus(self, rng):
        # exact observer, error at the hysteresis equilibrium: only the
        # feedforward survives
        q0 = normalize(rng.standard_normal(4))
        w0 = np.array([0.004, 0.008, -0.002])
        w0_dot = np.array([5e-5, -4e-5, 6e-5])
        for h in (1.0, -1.0):
            q_i = h * q0  # relative attitude is h * identity
            w_i = w0.copy()  # transported leader rate: R(h*identity) = I
            est = estimated_errors(q_i, w_i, q0, w0, w0_dot, BODY)
            u = full_state_torque(est, HybridLogic(h=h), FS)
            np.testing.assert_allclose(u, est.u_f_hat, atol=1e-12)
