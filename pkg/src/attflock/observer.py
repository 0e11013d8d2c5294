"""Distributed finite-time observer of the leader trajectory.

Each follower carries an estimate (P, v, z) of the leader attitude, rate,
and rate derivative, driven by signed-power consensus feedback on
neighbor differences, plus a two-state exact differentiator (y, w) that
recovers the leader's rate derivative from the measured rate for
leader-connected agents.  P evolves on R^4, not the unit sphere, and is
never renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GainTooSmall, MissingLeaderMeasurement
from .graph import Topology, h_matrix, spectral_bounds
from .quat import pure, quat_mul, sgn_pow
from .rigid_body import LeaderBounds


@dataclass(frozen=True)
class ObserverGains:
    """Consensus and differentiator gains.

    lambda3 and mu2 must dominate the sup of the leader's second rate
    derivative for finite-time convergence; validate() checks that.

    boundary_layer linearizes the two discontinuous relays (the accel
    consensus and the differentiator derivative channel) inside the given
    width; 0 keeps them discontinuous, which is the default.  Useful for
    stiff configurations; note the layer only bites once it exceeds the
    per-step relay slew (roughly lambda3 * dt).
    """

    lambda1: float = 5.0
    lambda2: float = 1.0
    lambda3: float = 0.8
    beta1: float = 0.8
    beta2: float = 0.8
    mu1: float = 3.0
    mu2: float = 0.1
    boundary_layer: float = 0.0

    def validate(self, bounds: LeaderBounds) -> None:
        if self.lambda1 <= 0 or self.lambda2 <= 0 or self.mu1 <= 0:
            raise GainTooSmall("lambda1, lambda2, mu1 must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise GainTooSmall("beta1, beta2 must lie in (0, 1)")
        if self.lambda3 <= bounds.gamma3:
            raise GainTooSmall(
                f"lambda3 = {self.lambda3} must exceed gamma3 = {bounds.gamma3}"
            )
        if self.mu2 <= bounds.gamma3:
            raise GainTooSmall(f"mu2 = {self.mu2} must exceed gamma3 = {bounds.gamma3}")
        if self.boundary_layer < 0.0:
            raise GainTooSmall("boundary_layer must be nonnegative")


def layered_sign(x, width: float):
    """Relay output, linear inside the boundary layer when width > 0."""
    x = np.asarray(x, dtype=float)
    if width <= 0.0:
        return np.sign(x)
    return np.clip(x / width, -1.0, 1.0)


@dataclass(frozen=True)
class ObserverState:
    """Per-follower estimator memory."""

    p: np.ndarray  # leader attitude estimate, general 4-vector
    v: np.ndarray  # leader rate estimate
    z: np.ndarray  # leader rate-derivative estimate
    y: np.ndarray  # differentiator rate state
    w: np.ndarray  # differentiator derivative state


def consensus_inputs(values, leader_value, topo: Topology) -> np.ndarray:
    """Neighborhood disagreement sums a_i0 (x_i - x_0) + sum_j a_ij (x_i - x_j).

    values has shape (n, d) and leader_value (d,); the stacked result
    equals (H kron I_d) applied to the stacked errors x_i - x_0.
    """
    x = np.asarray(values, dtype=float)
    x0 = np.asarray(leader_value, dtype=float)
    a = topo.adjacency
    deg = a.sum(axis=1)
    own = (deg + topo.leader_access)[:, None] * x
    return own - a @ x - topo.leader_access[:, None] * x0


@dataclass(frozen=True)
class EstimationErrors:
    """Componentwise estimation errors and their consensus sums."""

    p_tilde: np.ndarray  # (n, 4)
    v_tilde: np.ndarray  # (n, 3)
    z_tilde: np.ndarray  # (n, 3)
    y_tilde: np.ndarray  # (n, 3)
    w_tilde: np.ndarray  # (n, 3)
    p_s: np.ndarray      # (n, 4)
    v_s: np.ndarray      # (n, 3)
    z_s: np.ndarray      # (n, 3)


def estimation_errors(states, leader_q, leader_omega, leader_accel, topo: Topology) -> EstimationErrors:
    """Stack per-agent errors against the true leader trajectory."""
    p = np.stack([np.asarray(s.p, dtype=float) for s in states])
    v = np.stack([np.asarray(s.v, dtype=float) for s in states])
    z = np.stack([np.asarray(s.z, dtype=float) for s in states])
    y = np.stack([np.asarray(s.y, dtype=float) for s in states])
    w = np.stack([np.asarray(s.w, dtype=float) for s in states])
    q0 = np.asarray(leader_q, dtype=float)
    w0 = np.asarray(leader_omega, dtype=float)
    a0 = np.asarray(leader_accel, dtype=float)
    return EstimationErrors(
        p_tilde=p - q0,
        v_tilde=v - w0,
        z_tilde=z - a0,
        y_tilde=y - w0,
        w_tilde=w - a0,
        p_s=consensus_inputs(p, q0, topo),
        v_s=consensus_inputs(v, w0, topo),
        z_s=consensus_inputs(z, a0, topo),
    )


def observer_deriv(i, states, leader_meas, topo: Topology, gains: ObserverGains) -> ObserverState:
    """Time derivative of follower i's estimator memory.

    leader_meas is the (attitude, rate) measurement pair, required exactly
    when agent i is leader-connected; neighbor states enter through the
    provided snapshot list.
    """
    a = topo.adjacency
    a0 = float(topo.leader_access[i])
    si = states[i]
    if a0 > 0.0 and leader_meas is None:
        raise MissingLeaderMeasurement(f"agent {i} is leader-connected")

    p_s = np.zeros(4)
    v_s = np.zeros(3)
    z_arg = np.zeros(3)
    for j in range(topo.n):
        if a[i, j] > 0.0:
            p_s += a[i, j] * (si.p - states[j].p)
            v_s += a[i, j] * (si.v - states[j].v)
            z_arg += a[i, j] * (si.z - states[j].z)
    if a0 > 0.0:
        q0, w0 = leader_meas
        p_s += a0 * (si.p - np.asarray(q0, dtype=float))
        v_s += a0 * (si.v - np.asarray(w0, dtype=float))
        z_arg += a0 * (si.z - si.w)
        y_err = si.y - np.asarray(w0, dtype=float)
        y_dot = -gains.mu1 * a0 * sgn_pow(y_err, 0.5) + si.w
        w_dot = -gains.mu2 * a0 * layered_sign(y_err, gains.boundary_layer)
    else:
        y_dot = si.w.copy()
        w_dot = np.zeros(3)

    p_dot = 0.5 * quat_mul(si.p, pure(si.v)) - gains.lambda1 * sgn_pow(p_s, gains.beta1)
    v_dot = si.z - gains.lambda2 * sgn_pow(v_s, gains.beta2)
    z_dot = -gains.lambda3 * layered_sign(z_arg, gains.boundary_layer)
    return ObserverState(p=p_dot, v=v_dot, z=z_dot, y=y_dot, w=w_dot)


@dataclass(frozen=True)
class ConvergenceBound:
    """Chained worst-case convergence times and the constants behind them.

    t_r is the differentiator convergence time, supplied empirically (the
    analytic algorithm for it lives outside this package); the chain then
    gives T_z <= T_v <= T_p for the derivative, rate, and attitude
    estimates respectively.

    The attitude-stage bound exponentiates a no-escape growth cap and is
    mathematically finite but can exceed float range by a wide margin;
    t_p_log10 always carries its representable magnitude while t_p itself
    collapses to inf past ~1e308.
    """

    t_r: float
    t_z: float
    t_v: float
    t_p: float
    t_p_log10: float
    c_w: float
    c_z: float
    c_v0: float
    c_v: float
    c_p0: float
    c_p1: float
    c_p2: float
    c_p: float
    gamma_z: float
    gamma_v: float


def _weighted_energy(err, h):
    """0.5 * err^T (H kron I_d) err for stacked per-agent errors (n, d)."""
    e = np.asarray(err, dtype=float)
    return 0.5 * float(np.einsum("id,ij,jd->", e, h, e))


def convergence_bound(
    gains: ObserverGains,
    topo: Topology,
    bounds: LeaderBounds,
    p_tilde0,
    v_tilde0,
    z_tilde0,
    t_r: float = 0.0,
) -> ConvergenceBound:
    """Worst-case observer convergence times from gains, graph, and initial errors.

    Requires the leader-rooted coupling matrix to be positive definite and
    lambda3, mu2 > gamma3; raises GainTooSmall otherwise.  The bound is
    conservative: observed convergence is typically much faster.
    """
    gains.validate(bounds)
    h = h_matrix(topo)
    sb = spectral_bounds(h)
    s_min, s_max = sb.sigma_min, sb.sigma_max
    if s_min <= 0.0:
        raise GainTooSmall("coupling matrix is singular: leader cannot reach every follower")
    n = topo.n

    v_z0 = _weighted_energy(z_tilde0, h)
    v_v0 = _weighted_energy(v_tilde0, h)
    v_p0 = _weighted_energy(p_tilde0, h)

    c_w = (gains.lambda3 + bounds.gamma3) * s_max * np.sqrt(2.0 / s_min)
    c_z = (gains.lambda3 - bounds.gamma3) * s_min * np.sqrt(2.0 / s_max)
    t_z = 2.0 * np.sqrt(v_z0) / c_z + t_r

    gamma_z = np.sqrt(2.0 * v_z0 / s_min)
    c_v0 = gamma_z * s_max * np.sqrt(2.0 / s_min)
    gamma_v_cap = (0.5 * c_v0 * t_z + np.sqrt(v_v0)) ** 2  # energy cap at t_z
    c_v = gains.lambda2 * (2.0 * s_min ** 2 / s_max) ** ((1.0 + gains.beta2) / 2.0)
    t_v = t_z + 2.0 * gamma_v_cap ** ((1.0 - gains.beta2) / 2.0) / (c_v * (1.0 - gains.beta2))

    gamma_v = np.sqrt(2.0 * gamma_v_cap / s_min) + np.sqrt(3.0 * n) * bounds.gamma1
    c_p0 = 2.0 * n * gamma_v * s_max / s_min
    c_p1 = n * gamma_v * s_max / 8.0
    c_p2 = v_p0 + c_p1 / c_p0
    c_p = gains.lambda1 * (2.0 * s_min ** 2 / s_max) ** ((1.0 + gains.beta1) / 2.0)

    # tail = 2 * cap^((1-beta1)/2) / (c_p (1-beta1)) with cap = c_p2 e^(c_p0 t_v) - c_p1/c_p0,
    # evaluated in log space because the growth cap overflows floats easily
    half_pow = (1.0 - gains.beta1) / 2.0
    x = c_p0 * t_v
    if x < 500.0:
        cap = max(c_p2 * np.exp(x) - c_p1 / c_p0, 0.0)
        tail = 2.0 * cap ** half_pow / (c_p * (1.0 - gains.beta1))
        t_p = t_v + tail
        t_p_log10 = np.log10(t_p) if t_p > 0.0 else -np.inf
    else:
        ln_cap = np.log(c_p2) + x + np.log1p(-(c_p1 / c_p0) * np.exp(-x) / c_p2)
        ln_tail = np.log(2.0 / (c_p * (1.0 - gains.beta1))) + half_pow * ln_cap
        t_p = np.inf  # exceeds float range; magnitude preserved in t_p_log10
        t_p_log10 = ln_tail / np.log(10.0)

    return ConvergenceBound(
        t_r=float(t_r),
        t_z=float(t_z),
        t_v=float(t_v),
        t_p=float(t_p),
        t_p_log10=float(t_p_log10),
        c_w=float(c_w),
        c_z=float(c_z),
        c_v0=float(c_v0),
        c_v=float(c_v),
        c_p0=float(c_p0),
        c_p1=float(c_p1),
        c_p2=float(c_p2),
        c_p=float(c_p),
        gamma_z=float(gamma_z),
        gamma_v=float(gamma_v),
    )
