"""Hybrid consensus controllers driven by the distributed observer.

Two measurement modes share the estimated error signals: the full-state
law adds saturated rate damping, while the attitude-only law replaces it
with damping injected through an auxiliary unit-quaternion filter.  Both
use a binary hysteresis variable per agent (h, and additionally h_tilde
for the filter) so the commanded rotation never unwinds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigInvalid
from .quat import kappa1_bar, pure, quat_conj, quat_mul, rot_matrix, sat_pow, sgn_pow
from .rigid_body import BodyParams

FULL_STATE = "full_state"
ATTITUDE_ONLY = "attitude_only"

_EXPONENT_TOL = 1e-12


def sgn_bar(x: float) -> float:
    """Binary sign used by the jump map; the tie at 0 resolves to +1."""
    return 1.0 if x >= 0.0 else -1.0


@dataclass(frozen=True)
class ControllerGains:
    """Gains and homogeneity exponents for either control mode.

    The exponent ties (alpha_d to alpha_p in full-state mode, alpha_p to
    alpha_q in attitude-only mode) are required for the homogeneous
    finite-time design; validate() enforces them.  alpha values of
    exactly 1 are allowed and recover the asymptotic variants.
    """

    kp: float = 4.0
    kd: float = 8.0
    kq: float = 3.0
    alpha_p: float = 0.6
    alpha_d: float = 0.75
    alpha_q: float = 0.8
    delta: float = 0.2
    mode: str = FULL_STATE

    def validate(self) -> None:
        if self.mode not in (FULL_STATE, ATTITUDE_ONLY):
            raise ConfigInvalid(f"unknown controller mode {self.mode!r}")
        if self.kp <= 0 or self.kd <= 0:
            raise ConfigInvalid("kp and kd must be positive")
        if not (0.0 < self.delta < 1.0):
            raise ConfigInvalid("delta must lie in (0, 1)")
        if not (0.0 < self.alpha_p <= 1.0):
            raise ConfigInvalid("alpha_p must lie in (0, 1]")
        if self.mode == FULL_STATE:
            tied = 2.0 * self.alpha_p / (1.0 + self.alpha_p)
            if abs(self.alpha_d - tied) > _EXPONENT_TOL:
                raise ConfigInvalid(
                    f"alpha_d must equal 2*alpha_p/(1+alpha_p) = {tied!r}, got {self.alpha_d!r}"
                )
        else:
            if self.kq <= 0:
                raise ConfigInvalid("kq must be positive in attitude-only mode")
            if not (0.5 < self.alpha_q <= 1.0):
                raise ConfigInvalid("alpha_q must lie in (0.5, 1]")
            tied = 2.0 * self.alpha_q - 1.0
            if abs(self.alpha_p - tied) > _EXPONENT_TOL:
                raise ConfigInvalid(
                    f"alpha_p must equal 2*alpha_q - 1 = {tied!r}, got {self.alpha_p!r}"
                )


@dataclass(frozen=True)
class HybridLogic:
    """Hysteresis variables; values flip only through the jump maps."""

    h: float = 1.0
    h_tilde: float = 1.0
    jump_count: int = 0


@dataclass(frozen=True)
class EstimatedErrors:
    """Error signals reconstructed from the observer instead of the leader."""

    q_hat: np.ndarray      # estimated relative attitude (general 4-vector)
    omega_hat: np.ndarray  # estimated rate error
    u_f_hat: np.ndarray    # estimated feedforward torque

    @property
    def eta_hat(self) -> float:
        return float(self.q_hat[0])


def estimated_errors(q_agent, omega_agent, obs_p, obs_v, obs_z, body: BodyParams) -> EstimatedErrors:
    """Estimated tracking errors of one agent from its observer memory.

    With a converged observer these coincide with the true error signals;
    during the transient q_hat may be non-unit (its norm equals the
    observer attitude-estimate norm).
    """
    q_hat = quat_mul(quat_conj(obs_p), q_agent)
    r = rot_matrix(q_hat)
    v_body = r @ np.asarray(obs_v, dtype=float)
    j = body.inertia
    u_f_hat = j @ (r @ np.asarray(obs_z, dtype=float)) + np.cross(v_body, j @ v_body)
    return EstimatedErrors(
        q_hat=q_hat,
        omega_hat=np.asarray(omega_agent, dtype=float) - v_body,
        u_f_hat=u_f_hat,
    )


def full_state_torque(est: EstimatedErrors, logic: HybridLogic, gains: ControllerGains) -> np.ndarray:
    """Control torque with attitude and measured-rate feedback."""
    u = est.u_f_hat.copy()
    u -= gains.kp * kappa1_bar(logic.h * est.q_hat, 1.0 - gains.alpha_p)
    u -= gains.kd * sat_pow(est.omega_hat, gains.alpha_d)
    return u


def jump_full_state(est: EstimatedErrors, logic: HybridLogic, gains: ControllerGains) -> HybridLogic:
    """Flip h when the sign mismatch exceeds the hysteresis width."""
    if logic.h * est.eta_hat <= -gains.delta:
        return replace(logic, h=sgn_bar(est.eta_hat), jump_count=logic.jump_count + 1)
    return logic


def filter_signals(q_bar, est: EstimatedErrors, logic: HybridLogic, gains: ControllerGains):
    """Filter error quaternion and the filter rate command (q_tilde, omega_cmd)."""
    q_tilde = quat_mul(quat_conj(q_bar), est.q_hat)
    omega_cmd = gains.kq * (
        rot_matrix(q_tilde).T @ kappa1_bar(logic.h_tilde * q_tilde, 1.0 - gains.alpha_q)
    )
    return q_tilde, omega_cmd


def filter_deriv(q_bar, est: EstimatedErrors, logic: HybridLogic, gains: ControllerGains) -> np.ndarray:
    """Damping-filter kinematics; the rate command keeps q_bar on the sphere."""
    _, omega_cmd = filter_signals(q_bar, est, logic, gains)
    return 0.5 * quat_mul(q_bar, pure(omega_cmd))


def attitude_only_torque(
    est: EstimatedErrors, q_tilde, logic: HybridLogic, gains: ControllerGains
) -> np.ndarray:
    """Control torque without any rate measurement.

    Damping comes entirely from the filter error; the signature takes no
    rate argument on purpose.
    """
    u = est.u_f_hat.copy()
    u -= gains.kp * kappa1_bar(logic.h * est.q_hat, 1.0 - gains.alpha_p)
    u -= gains.kd * kappa1_bar(logic.h_tilde * np.asarray(q_tilde, dtype=float), 1.0 - gains.alpha_p)
    return u


def jump_attitude_only(
    est: EstimatedErrors, q_tilde, logic: HybridLogic, gains: ControllerGains
) -> HybridLogic:
    """Reset both logic variables when either mismatch exceeds the width.

    One jump event resets h and h_tilde together to the binary signs of
    their scalar parts; continuous states are untouched.
    """
    eta_tilde = float(np.asarray(q_tilde)[0])
    if logic.h * est.eta_hat <= -gains.delta or logic.h_tilde * eta_tilde <= -gains.delta:
        return HybridLogic(
            h=sgn_bar(est.eta_hat),
            h_tilde=sgn_bar(eta_tilde),
            jump_count=logic.jump_count + 1,
        )
    return logic


def compute_delta(q_bar, q_tilde, omega_cmd, est: EstimatedErrors, obs_v, p_s, q_agent,
                  lambda1: float, beta1: float) -> np.ndarray:
    """Transient coupling term in the filter-error kinematics (diagnostic only).

    Vanishes identically once the observer has converged (unit attitude
    estimate and zero consensus input); never fed back into the loop.
    """
    q_tilde = np.asarray(q_tilde, dtype=float)
    norm_tilde_sq = float(q_tilde @ q_tilde)
    norm_hat_sq = float(est.q_hat @ est.q_hat)
    term1 = (norm_tilde_sq - 1.0) * quat_mul(pure(omega_cmd), q_tilde)
    inner = (norm_hat_sq - 1.0) * quat_mul(pure(obs_v), est.q_hat)
    inner -= 2.0 * lambda1 * quat_mul(sgn_pow(quat_conj(p_s), beta1), np.asarray(q_agent, dtype=float))
    return term1 + quat_mul(quat_conj(q_bar), inner)
