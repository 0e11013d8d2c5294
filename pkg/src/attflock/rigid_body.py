"""Rigid-body attitude dynamics, the leader profile, and tracking errors.

All angular velocities are body-frame rad/s, torques are N*m, inertia is
kg*m^2.  The leader's angular-velocity profile is analytic (sinusoidal);
its attitude has no elementary closed form and is co-integrated with the
followers by the engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularInertia
from .quat import e_matrix, quat_error, require_unit, rot_matrix, skew


@dataclass(frozen=True)
class BodyParams:
    """Symmetric positive-definite inertia tensor."""

    inertia: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.inertia, dtype=float)
        if j.shape != (3, 3):
            raise SingularInertia(f"inertia must be 3x3, got {j.shape}")
        if not np.allclose(j, j.T, atol=1e-12):
            raise SingularInertia("inertia must be symmetric")
        if np.linalg.eigvalsh(j).min() <= 0.0:
            raise SingularInertia("inertia must be positive definite")
        object.__setattr__(self, "inertia", j)

    @property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.inertia)


@dataclass(frozen=True)
class LeaderState:
    """Leader attitude, rate, and rate derivative at one instant."""

    q: np.ndarray
    omega: np.ndarray
    omega_dot: np.ndarray


@dataclass(frozen=True)
class LeaderBounds:
    """Sup-norm bounds on the leader rate and its first two derivatives."""

    gamma1: float
    gamma2: float
    gamma3: float


@dataclass(frozen=True)
class LeaderProfile:
    """Sinusoidal leader-rate profile amp*[sin(w t), cos(w t), sin(w t)]."""

    amplitude: float = 0.01
    rate: float = 0.01
    q0: np.ndarray = None

    def __post_init__(self):
        q0 = np.array([1.0, 0.0, 0.0, 0.0]) if self.q0 is None else np.asarray(self.q0, dtype=float)
        require_unit(q0, name="leader initial attitude")
        object.__setattr__(self, "q0", q0)

    def omega(self, t: float) -> np.ndarray:
        w = self.rate * t
        return self.amplitude * np.array([np.sin(w), np.cos(w), np.sin(w)])

    def omega_dot(self, t: float) -> np.ndarray:
        w = self.rate * t
        return self.amplitude * self.rate * np.array([np.cos(w), -np.sin(w), np.cos(w)])

    def omega_ddot(self, t: float) -> np.ndarray:
        w = self.rate * t
        return -self.amplitude * self.rate ** 2 * np.array([np.sin(w), np.cos(w), np.sin(w)])

    def bounds(self) -> LeaderBounds:
        # sup of each analytic derivative of the sinusoidal profile
        a = abs(self.amplitude)
        return LeaderBounds(gamma1=a, gamma2=a * abs(self.rate), gamma3=a * self.rate ** 2)


def leader_trajectory(t: float, profile: LeaderProfile, q0_now=None) -> LeaderState:
    """Leader state at time t; q0_now is the co-integrated attitude if available."""
    q = profile.q0 if q0_now is None else np.asarray(q0_now, dtype=float)
    return LeaderState(q=q, omega=profile.omega(t), omega_dot=profile.omega_dot(t))


def kinematics_deriv(q, omega) -> np.ndarray:
    """Attitude kinematics dQ/dt = 0.5 E(Q) w."""
    return 0.5 * e_matrix(q) @ np.asarray(omega, dtype=float)


def dynamics_deriv(body: BodyParams, omega, torque, disturbance=None) -> np.ndarray:
    """Euler rotational dynamics: J dw/dt = -w x Jw + u (+ d)."""
    omega = np.asarray(omega, dtype=float)
    rhs = -np.cross(omega, body.inertia @ omega) + np.asarray(torque, dtype=float)
    if disturbance is not None:
        rhs = rhs + np.asarray(disturbance, dtype=float)
    return body.inertia_inv @ rhs


@dataclass(frozen=True)
class ErrorState:
    """Follower-relative-to-leader tracking error."""

    q_err: np.ndarray       # leader* o follower
    omega_err: np.ndarray   # follower rate minus transported leader rate
    omega_bar: np.ndarray   # leader rate expressed in the follower frame


def error_state(q_follower, omega_follower, leader: LeaderState) -> ErrorState:
    """Tracking error of one follower against the leader."""
    q_err = quat_error(leader.q, q_follower)
    omega_bar = rot_matrix(q_err) @ leader.omega
    return ErrorState(
        q_err=q_err,
        omega_err=np.asarray(omega_follower, dtype=float) - omega_bar,
        omega_bar=omega_bar,
    )


def xi_matrix(body: BodyParams, omega_err, omega_bar) -> np.ndarray:
    """Skew-symmetric matrix collecting the gyroscopic error-dynamics terms."""
    j = body.inertia
    omega_err = np.asarray(omega_err, dtype=float)
    omega_bar = np.asarray(omega_bar, dtype=float)
    return (
        skew(j @ omega_err + j @ omega_bar)
        - skew(omega_bar) @ j
        - j @ skew(omega_bar)
    )


def feedforward(body: BodyParams, err: ErrorState, omega0_dot) -> np.ndarray:
    """Torque that cancels the leader motion under perfect tracking."""
    j = body.inertia
    w_bar = err.omega_bar
    return j @ (rot_matrix(err.q_err) @ np.asarray(omega0_dot, dtype=float)) + np.cross(
        w_bar, j @ w_bar
    )


def disturbance_torque(t: float, agent: int, amplitude: float = 0.02) -> np.ndarray:
    """Slow sinusoidal disturbance torque for robustness runs.

    Agent indices are zero-based here; the per-agent frequency is
    2*pi / (40 + 5*(agent+1)) rad/s.
    """
    theta = 2.0 * np.pi / (40.0 + 5.0 * (agent + 1))
    w = theta * t
    return amplitude * np.array([np.cos(w), np.sin(w), -np.sin(w)])
