"""Deterministic fixed-step hybrid simulation of the full leader-following loop.

The engine integrates leader, followers, observers, damping filters, and
controllers jointly with classical RK4 at a fixed step.  Agents exchange
observer snapshots and sample measurements at a common tick rate; both
channels can be delayed by whole ticks.  Between ticks, held data are
frozen (zero order hold) while each agent's own memory integrates
continuously.  Hysteresis jumps are evaluated once per step after the
continuous update and never touch continuous states.

Identical configurations reproduce bit-identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernel as K
from .controller import ATTITUDE_ONLY, FULL_STATE, ControllerGains
from .errors import ConfigInvalid, MonitorViolation, NumericalBlowup
from .graph import Topology, TopologySchedule, is_leader_rooted
from .observer import ObserverGains
from .quat import normalize
from .rigid_body import BodyParams, LeaderProfile

BLOWUP_THRESHOLD = 1e9


@dataclass
class SimConfig:
    """Complete, serializable description of one simulation run."""

    topology: Topology | None = None
    schedule: TopologySchedule | None = None
    q_init: np.ndarray = None            # (n, 4) follower attitudes
    omega_init: np.ndarray = None        # (n, 3) follower rates, rad/s
    observer_gains: ObserverGains = field(default_factory=ObserverGains)
    controller_gains: ControllerGains = field(default_factory=ControllerGains)
    leader: LeaderProfile = field(default_factory=LeaderProfile)
    body: BodyParams = None
    scenario: str = "custom"
    dt: float = 1e-3
    duration: float = 60.0
    comm_hz: float = 100.0
    meas_delay: float = 0.0
    comm_delay: float = 0.0
    decimate: int = 10
    seed: int = 0                        # reserved for randomized IC generators
    disturbance_enabled: bool = False
    disturbance_amplitude: float = 0.02
    torque_enabled: bool = True
    omega_ceiling: float = 50.0
    require_leader_rooted: bool = True
    # observer initial values; None means the defaults (attitude estimate
    # starts at the follower attitude, accel estimate at [1,1,1])
    p_init: np.ndarray = None
    v_init: np.ndarray = None
    z_init: np.ndarray = None
    y_init: np.ndarray = None
    w_init: np.ndarray = None
    qbar_init: np.ndarray = None
    h_init: np.ndarray = None
    htilde_init: np.ndarray = None

    @property
    def n(self) -> int:
        return self.q_init.shape[0]

    def static_or_first_topology(self) -> Topology:
        if self.topology is not None:
            return self.topology
        return self.schedule.intervals[0][1]

    def validate(self) -> "SimConfig":
        """Normalize arrays and enforce every documented constraint."""
        if (self.topology is None) == (self.schedule is None):
            raise ConfigInvalid("exactly one of topology or schedule must be set")
        if self.q_init is None or self.omega_init is None:
            raise ConfigInvalid("q_init and omega_init are required")
        if self.body is None:
            raise ConfigInvalid("body inertia is required")
        if self.dt <= 0.0:
            raise ConfigInvalid(f"dt must be positive, got {self.dt}")
        if self.duration <= 0.0:
            raise ConfigInvalid(f"duration must be positive, got {self.duration}")
        if self.decimate < 1:
            raise ConfigInvalid("decimate must be >= 1")
        if self.comm_hz <= 0.0:
            raise ConfigInvalid("comm_hz must be positive")
        if self.meas_delay < 0.0 or self.comm_delay < 0.0:
            raise ConfigInvalid("delays must be nonnegative")
        if self.omega_ceiling <= 0.0:
            raise ConfigInvalid("omega_ceiling must be positive")

        spt = 1.0 / (self.comm_hz * self.dt)
        if abs(spt - round(spt)) > 1e-9 or round(spt) < 1:
            raise ConfigInvalid(
                f"communication tick (1/{self.comm_hz} s) must be a whole multiple of dt={self.dt}"
            )
        nsteps = self.duration / self.dt
        if abs(nsteps - round(nsteps)) > 1e-6:
            raise ConfigInvalid("duration must be a whole multiple of dt")

        def _unit_rows(rows):
            # idempotent: rows already unit to 1e-12 pass through untouched,
            # so validating a validated config is exact
            out = np.asarray(rows, dtype=float).copy()
            for k in range(out.shape[0]):
                if abs(np.linalg.norm(out[k]) - 1.0) > 1e-12:
                    out[k] = normalize(out[k])
            return out

        n = np.asarray(self.q_init, dtype=float).shape[0]
        self.q_init = _unit_rows(np.asarray(self.q_init, dtype=float).reshape(n, 4))
        self.omega_init = np.asarray(self.omega_init, dtype=float).reshape(n, 3).copy()

        topo = self.static_or_first_topology()
        if topo.n != n:
            raise ConfigInvalid(f"topology has {topo.n} agents but q_init has {n}")
        if self.schedule is not None:
            for _, t in self.schedule.intervals:
                if t.n != n:
                    raise ConfigInvalid("all scheduled topologies must share the agent count")
        if self.require_leader_rooted and self.topology is not None:
            if not is_leader_rooted(self.topology):
                raise ConfigInvalid("topology is not leader-rooted (no spanning tree from the leader)")

        self.observer_gains.validate(self.leader.bounds())
        self.controller_gains.validate()

        def _default(arr, default, shape, unit_rows=False):
            out = default.copy() if arr is None else np.asarray(arr, dtype=float).reshape(shape).copy()
            if unit_rows:
                out = _unit_rows(out)
            return out

        self.p_init = _default(self.p_init, self.q_init, (n, 4))
        self.v_init = _default(self.v_init, np.zeros((n, 3)), (n, 3))
        self.z_init = _default(self.z_init, np.ones((n, 3)), (n, 3))
        self.y_init = _default(self.y_init, np.zeros((n, 3)), (n, 3))
        self.w_init = _default(self.w_init, np.zeros((n, 3)), (n, 3))
        self.qbar_init = _default(self.qbar_init, self.q_init, (n, 4), unit_rows=True)
        self.h_init = _default(self.h_init, np.ones(n), (n,))
        self.htilde_init = _default(self.htilde_init, np.ones(n), (n,))
        if not np.all(np.isin(self.h_init, (-1.0, 1.0))) or not np.all(
            np.isin(self.htilde_init, (-1.0, 1.0))
        ):
            raise ConfigInvalid("logic variables must be +1 or -1")
        return self


def _batch_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quaternion product over leading batch dimensions."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    a0, av = a[..., :1], a[..., 1:]
    b0, bv = b[..., :1], b[..., 1:]
    out[..., :1] = a0 * b0 - np.sum(av * bv, axis=-1, keepdims=True)
    out[..., 1:] = a0 * bv + b0 * av + np.cross(av, bv)
    return out


def _batch_conj(q: np.ndarray) -> np.ndarray:
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def _batch_rot(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply the attitude rotation of q to vectors x over batch dimensions."""
    eta = q[..., :1]
    qv = q[..., 1:]
    s2 = eta * eta - np.sum(qv * qv, axis=-1, keepdims=True)
    d = np.sum(qv * x, axis=-1, keepdims=True)
    return s2 * x - 2.0 * eta * np.cross(qv, x) + 2.0 * d * qv


@dataclass
class SimTrace:
    """Decimated time history of one run plus jump events.

    The raw flat state is kept verbatim; named views and error series
    against the true leader trajectory are derived lazily.
    """

    config: SimConfig
    t: np.ndarray                 # (m,)
    state: np.ndarray             # (m, dim)
    tau: np.ndarray               # (m, n, 3) control torques
    h: np.ndarray                 # (m, n)
    h_tilde: np.ndarray           # (m, n)
    jump_count: np.ndarray        # (m, n)
    events: np.ndarray            # (e, 3) int: step, agent, kind bitmask
    notes: tuple = ()

    @property
    def n(self) -> int:
        return self.config.n

    def _agent_block(self) -> np.ndarray:
        m = self.state.shape[0]
        return self.state[:, K.LEADER_DIM:].reshape(m, self.n, K.AGENT_STRIDE)

    @property
    def q_leader(self) -> np.ndarray:
        return self.state[:, :4]

    @property
    def q_agent(self) -> np.ndarray:
        return self._agent_block()[:, :, K.OQ:K.OQ + 4]

    @property
    def omega_agent(self) -> np.ndarray:
        return self._agent_block()[:, :, K.OW:K.OW + 3]

    @property
    def p_est(self) -> np.ndarray:
        return self._agent_block()[:, :, K.OP:K.OP + 4]

    @property
    def v_est(self) -> np.ndarray:
        return self._agent_block()[:, :, K.OV:K.OV + 3]

    @property
    def z_est(self) -> np.ndarray:
        return self._agent_block()[:, :, K.OZ:K.OZ + 3]

    @property
    def y_est(self) -> np.ndarray:
        return self._agent_block()[:, :, K.OY:K.OY + 3]

    @property
    def w_est(self) -> np.ndarray:
        return self._agent_block()[:, :, K.OWD:K.OWD + 3]

    @property
    def q_filter(self) -> np.ndarray:
        return self._agent_block()[:, :, K.OQB:K.OQB + 4]

    @cached_property
    def omega_leader(self) -> np.ndarray:
        ph = self.config.leader.rate * self.t
        a = self.config.leader.amplitude
        return np.stack([a * np.sin(ph), a * np.cos(ph), a * np.sin(ph)], axis=1)

    @cached_property
    def omega_dot_leader(self) -> np.ndarray:
        ph = self.config.leader.rate * self.t
        a = self.config.leader.amplitude * self.config.leader.rate
        return np.stack([a * np.cos(ph), -a * np.sin(ph), a * np.cos(ph)], axis=1)

    @cached_property
    def q_err(self) -> np.ndarray:
        """True relative attitude leader* o follower, shape (m, n, 4)."""
        return _batch_mul(_batch_conj(self.q_leader)[:, None, :], self.q_agent)

    @property
    def eta_err(self) -> np.ndarray:
        return self.q_err[..., 0]

    @cached_property
    def omega_err(self) -> np.ndarray:
        """True rate error (m, n, 3)."""
        transported = _batch_rot(self.q_err, self.omega_leader[:, None, :])
        return self.omega_agent - transported

    @property
    def omega_err_norm(self) -> np.ndarray:
        return np.linalg.norm(self.omega_err, axis=2)

    @property
    def p_tilde(self) -> np.ndarray:
        return self.p_est - self.q_leader[:, None, :]

    @property
    def p_tilde_norm(self) -> np.ndarray:
        return np.linalg.norm(self.p_tilde, axis=2)

    @property
    def p_plus_norm(self) -> np.ndarray:
        return np.linalg.norm(self.p_est + self.q_leader[:, None, :], axis=2)

    @property
    def p_unwind_norm(self) -> np.ndarray:
        """min(||P - Q0||, ||P + Q0||): sign-agnostic attitude-estimate error."""
        return np.minimum(self.p_tilde_norm, self.p_plus_norm)

    @property
    def v_tilde(self) -> np.ndarray:
        return self.v_est - self.omega_leader[:, None, :]

    @property
    def v_tilde_norm(self) -> np.ndarray:
        return np.linalg.norm(self.v_tilde, axis=2)

    @property
    def z_tilde_norm(self) -> np.ndarray:
        return np.linalg.norm(self.z_est - self.omega_dot_leader[:, None, :], axis=2)

    @property
    def y_tilde_norm(self) -> np.ndarray:
        return np.linalg.norm(self.y_est - self.omega_leader[:, None, :], axis=2)

    @property
    def w_tilde_norm(self) -> np.ndarray:
        return np.linalg.norm(self.w_est - self.omega_dot_leader[:, None, :], axis=2)

    @property
    def sample_dt(self) -> float:
        return self.config.dt * self.config.decimate


class Simulator:
    """Stepwise driver around the compiled span integrator.

    Owns the flat state, logic variables, tick snapshot history, and the
    topology schedule.  ``run()`` is the fast path; ``step()`` advances a
    single dt for fine-grained tests and produces identical arithmetic.
    """

    def __init__(self, config: SimConfig):
        self.config = config.validate()
        c = self.config
        n = c.n
        self.n = n
        self.nsteps = int(round(c.duration / c.dt))
        self.steps_per_tick = int(round(1.0 / (c.comm_hz * c.dt)))
        self.global_step = 0
        self.notes: list[str] = []

        self.state = np.zeros(K.state_dim(n))
        self.state[0:4] = c.leader.q0
        for i in range(n):
            b = K.agent_base(i)
            self.state[b + K.OQ:b + K.OQ + 4] = c.q_init[i]
            self.state[b + K.OW:b + K.OW + 3] = c.omega_init[i]
            self.state[b + K.OP:b + K.OP + 4] = c.p_init[i]
            self.state[b + K.OV:b + K.OV + 3] = c.v_init[i]
            self.state[b + K.OZ:b + K.OZ + 3] = c.z_init[i]
            self.state[b + K.OY:b + K.OY + 3] = c.y_init[i]
            self.state[b + K.OWD:b + K.OWD + 3] = c.w_init[i]
            self.state[b + K.OQB:b + K.OQB + 4] = c.qbar_init[i]

        self.h = c.h_init.copy()
        self.ht = c.htilde_init.copy()
        self.jc = np.zeros(n, dtype=np.int64)
        self._events = np.zeros((self.nsteps * n + 16, 3), dtype=np.int64)
        self._event_cursor = 0
        self._trace_cursor = 0

        self.gains = np.array([
            c.observer_gains.lambda1, c.observer_gains.lambda2, c.observer_gains.lambda3,
            c.observer_gains.beta1, c.observer_gains.beta2,
            c.observer_gains.mu1, c.observer_gains.mu2,
            c.controller_gains.kp, c.controller_gains.kd, c.controller_gains.kq,
            c.controller_gains.alpha_p, c.controller_gains.alpha_d, c.controller_gains.alpha_q,
            c.controller_gains.delta,
            c.leader.amplitude, c.leader.rate,
            c.disturbance_amplitude,
            c.observer_gains.boundary_layer,
        ])
        self.mode = (
            K.MODE_ATTITUDE_ONLY if c.controller_gains.mode == ATTITUDE_ONLY else K.MODE_FULL_STATE
        )
        self.jmat = c.body.inertia.copy()
        self.jinv = c.body.inertia_inv.copy()
        self.theta = 2.0 * np.pi / (40.0 + 5.0 * np.arange(1, n + 1))

        # delay depths in whole ticks, rounded up when not exact
        self.meas_ticks = self._delay_ticks(c.meas_delay, "measurement")
        self.comm_ticks = self._delay_ticks(c.comm_delay, "communication")

        self._build_topologies()

        n_ticks = self.nsteps // self.steps_per_tick + 1
        self.hist_p = np.empty((n_ticks + 1, n, 4))
        self.hist_v = np.empty((n_ticks + 1, n, 3))
        self.hist_z = np.empty((n_ticks + 1, n, 3))
        self.hist_q0 = np.empty((n_ticks + 1, 4))
        self.hist_w0 = np.empty((n_ticks + 1, 3))
        self.hist_qm = np.empty((n_ticks + 1, n, 4))
        self.hist_wm = np.empty((n_ticks + 1, n, 3))
        self.tick = 0
        self._snapshot(0, t=0.0)

    def _delay_ticks(self, delay: float, label: str) -> int:
        ticks_exact = delay * self.config.comm_hz
        ticks = int(math.ceil(ticks_exact - 1e-9))
        if abs(ticks - ticks_exact) > 1e-9:
            self.notes.append(
                f"{label} delay {delay} s rounded up to {ticks} communication tick(s)"
            )
        return ticks

    def _build_topologies(self):
        """Resolve the schedule to per-interval arrays and step boundaries."""
        c = self.config
        if c.topology is not None:
            self._topos = [self._topo_arrays(c.topology)]
            self._topo_starts = np.array([0], dtype=np.int64)
            self._period_steps = 0
            return
        starts = []
        topos = []
        for start, topo in c.schedule.intervals:
            s = start / c.dt
            if abs(s - round(s)) > 1e-6:
                raise ConfigInvalid("schedule interval starts must be multiples of dt")
            starts.append(int(round(s)))
            topos.append(self._topo_arrays(topo))
        self._topos = topos
        self._topo_starts = np.array(starts, dtype=np.int64)
        if c.schedule.period is None:
            self._period_steps = 0
        else:
            p = c.schedule.period / c.dt
            if abs(p - round(p)) > 1e-6:
                raise ConfigInvalid("schedule period must be a multiple of dt")
            self._period_steps = int(round(p))

    @staticmethod
    def _topo_arrays(topo: Topology):
        adj = topo.adjacency.copy()
        a0 = topo.leader_access.copy()
        return adj, a0, adj.sum(axis=1)

    def _topo_index(self, gstep: int) -> int:
        if len(self._topos) == 1:
            return 0
        step = gstep % self._period_steps if self._period_steps else gstep
        return int(np.searchsorted(self._topo_starts, step, side="right") - 1)

    def _next_topo_boundary(self, gstep: int) -> int:
        if len(self._topos) == 1:
            return self.nsteps
        if self._period_steps:
            base = (gstep // self._period_steps) * self._period_steps
            local = gstep - base
            for s in self._topo_starts:
                if s > local:
                    return base + int(s)
            return base + self._period_steps
        for s in self._topo_starts:
            if s > gstep:
                return int(s)
        return self.nsteps

    def _snapshot(self, k: int, t: float):
        """Record tick-k broadcast and measurement samples from the current state."""
        n = self.n
        blocks = self.state[K.LEADER_DIM:].reshape(n, K.AGENT_STRIDE)
        self.hist_p[k] = blocks[:, K.OP:K.OP + 4]
        self.hist_v[k] = blocks[:, K.OV:K.OV + 3]
        self.hist_z[k] = blocks[:, K.OZ:K.OZ + 3]
        self.hist_q0[k] = self.state[0:4]
        self.hist_w0[k] = self.config.leader.omega(t)
        self.hist_qm[k] = blocks[:, K.OQ:K.OQ + 4]
        self.hist_wm[k] = blocks[:, K.OW:K.OW + 3]

    def _held(self):
        comm_k = max(self.tick - self.comm_ticks, 0)
        meas_k = max(self.tick - self.meas_ticks, 0)
        return (
            self.hist_p[comm_k], self.hist_v[comm_k], self.hist_z[comm_k],
            self.hist_q0[meas_k], self.hist_w0[meas_k],
            self.hist_qm[meas_k], self.hist_wm[meas_k],
        )

    def torques(self) -> np.ndarray:
        """Control torques at the current instant from current held data."""
        tau = np.empty((self.n, 3))
        _, _, _, _, _, qm, wm = self._held()
        K.compute_torques(
            self.global_step * self.config.dt, self.state, tau, self.n, self.mode,
            1 if self.config.torque_enabled else 0,
            self.gains, self.jmat, qm, wm, self.h, self.ht,
        )
        return tau

    def _advance(self, nsteps: int, trace=None) -> None:
        """Integrate whole steps inside one tick/topology span."""
        c = self.config
        adj, a0, deg = self._topos[self._topo_index(self.global_step)]
        p_held, v_held, z_held, q0_meas, w0_meas, qm, wm = self._held()
        if trace is None:
            decim = 0
            tr_t = np.empty(0)
            tr_state = np.empty((0, self.state.shape[0]))
            tr_tau = np.empty((0, self.n, 3))
            tr_h = np.empty((0, self.n))
            tr_ht = np.empty((0, self.n))
            tr_jc = np.empty((0, self.n), dtype=np.int64)
            cursor = 0
        else:
            decim = c.decimate
            tr_t, tr_state, tr_tau, tr_h, tr_ht, tr_jc, cursor = trace

        status, bad_step, bad_agent, payload, cursor, ecursor = K.integrate_span(
            self.state, self.h, self.ht, self.jc,
            self.global_step, nsteps, c.dt,
            self.n, self.mode,
            1 if c.torque_enabled else 0,
            1 if c.disturbance_enabled else 0,
            self.gains, self.jmat, self.jinv,
            adj, a0, deg,
            p_held, v_held, z_held,
            q0_meas, w0_meas, qm, wm,
            self.theta,
            c.omega_ceiling, BLOWUP_THRESHOLD,
            decim,
            tr_t, tr_state, tr_tau, tr_h, tr_ht, tr_jc,
            cursor,
            self._events, self._event_cursor,
        )
        self._event_cursor = ecursor
        self._trace_cursor = cursor
        if status == K.STATUS_BLOWUP:
            raise NumericalBlowup(t=bad_step * c.dt, agent=int(bad_agent))
        if status == K.STATUS_MONITOR:
            raise MonitorViolation(
                t=bad_step * c.dt, agent=int(bad_agent), value=payload,
                ceiling=c.omega_ceiling,
            )
        self.global_step += nsteps

    def _after_span(self):
        """Tick bookkeeping once integration has crossed a tick boundary."""
        if self.global_step % self.steps_per_tick == 0 and self.global_step > 0:
            k = self.global_step // self.steps_per_tick
            if k > self.tick:
                self.tick = k
                self._snapshot(k, t=self.global_step * self.config.dt)

    def step(self):
        """Advance exactly one integration step, handling tick crossings."""
        self._advance(1)
        self._after_span()

    def run(self) -> SimTrace:
        """Integrate the full duration and return the decimated trace."""
        c = self.config
        n_samples = self.nsteps // c.decimate + 1
        dim = self.state.shape[0]
        tr_t = np.empty(n_samples)
        tr_state = np.empty((n_samples, dim))
        tr_tau = np.empty((n_samples, self.n, 3))
        tr_h = np.empty((n_samples, self.n))
        tr_ht = np.empty((n_samples, self.n))
        tr_jc = np.empty((n_samples, self.n), dtype=np.int64)

        # initial sample
        tr_t[0] = 0.0
        tr_state[0] = self.state
        tr_tau[0] = self.torques()
        tr_h[0] = self.h
        tr_ht[0] = self.ht
        tr_jc[0] = self.jc
        self._trace_cursor = 1

        while self.global_step < self.nsteps:
            next_tick = ((self.global_step // self.steps_per_tick) + 1) * self.steps_per_tick
            next_topo = self._next_topo_boundary(self.global_step)
            span_end = min(next_tick, next_topo, self.nsteps)
            trace = (tr_t, tr_state, tr_tau, tr_h, tr_ht, tr_jc, self._trace_cursor)
            self._advance(span_end - self.global_step, trace=trace)
            self._after_span()

        m = self._trace_cursor
        return SimTrace(
            config=c,
            t=tr_t[:m].copy(),
            state=tr_state[:m].copy(),
            tau=tr_tau[:m].copy(),
            h=tr_h[:m].copy(),
            h_tilde=tr_ht[:m].copy(),
            jump_count=tr_jc[:m].copy(),
            events=self._events[: self._event_cursor].copy(),
            notes=tuple(self.notes),
        )

def run(config: SimConfig) -> SimTrace:
    """Validate the configuration, simulate it, and return the trace."""
    return Simulator(config).run()


def settling_time(t: np.ndarray, values: np.ndarray, band: float):
    """First time |values| enters the band and stays there through the end.

    Returns t[0] when the series never leaves the band and None when it is
    still outside at the final sample.
    """
    outside = np.abs(values) > band
    if not outside.any():
        return float(t[0])
    last_bad = int(np.flatnonzero(outside)[-1])
    if last_bad == len(t) - 1:
        return None
    return float(t[last_bad + 1])


def empirical_t_r(trace: SimTrace, threshold: float = 1e-3, hold: float = 0.5):
    """Measured differentiator convergence time.

    First time the worst leader-connected differentiator error stays below
    the threshold for the hold window; None when that never happens.  The
    default threshold sits just above the relay discretization floor of
    the derivative state (about mu2*dt per switch at the default step).
    """
    topo = trace.config.static_or_first_topology()
    connected = topo.leader_access > 0.0
    if trace.config.schedule is not None:
        for _, topo_k in trace.config.schedule.intervals:
            connected = connected | (topo_k.leader_access > 0.0)
    if not connected.any():
        return None
    err = np.abs(trace.w_est - trace.omega_dot_leader[:, None, :]).max(axis=2)
    series = err[:, connected].max(axis=1)
    win = max(int(round(hold / trace.sample_dt)), 1)
    ok = series < threshold
    for i in range(len(ok) - win + 1):
        if ok[i:i + win].all():
            return float(trace.t[i])
    return None


def observer_convergence_time(trace: SimTrace, band: float = 1e-2):
    """Settling time of the worst observer error norm across agents."""
    worst = np.maximum(
        trace.p_unwind_norm, np.maximum(trace.v_tilde_norm, trace.z_tilde_norm)
    ).max(axis=1)
    return settling_time(trace.t, worst, band)


def metrics(trace: SimTrace, band: float = 1e-2) -> dict:
    """Summary numbers for one run: settling, steady error, jumps, unwinding."""
    m = len(trace.t)
    tail = slice(int(math.ceil(0.8 * (m - 1))), m)
    eta_consensus = np.abs(trace.h * trace.eta_err - 1.0)
    series = {
        "consensus_eta": eta_consensus,
        "omega_err": trace.omega_err_norm,
        "p_tilde": trace.p_unwind_norm,
        "v_tilde": trace.v_tilde_norm,
        "z_tilde": trace.z_tilde_norm,
    }
    per_agent = []
    for i in range(trace.n):
        per_agent.append(
            {
                "settling_time": {
                    k: settling_time(trace.t, v[:, i], band) for k, v in series.items()
                },
                "steady_max": {k: float(np.max(v[tail, i])) for k, v in series.items()},
                "jump_count": int(trace.jump_count[-1, i]),
                "unwinding_final": float(trace.p_unwind_norm[-1, i]),
            }
        )
    return {
        "scenario": trace.config.scenario,
        "mode": trace.config.controller_gains.mode,
        "duration": float(trace.t[-1]),
        "band": band,
        "observer_convergence_time": observer_convergence_time(trace, band),
        "t_r_empirical": empirical_t_r(trace),
        "t_r_note": "empirical differentiator convergence time (measured, not the analytic bound)",
        "per_agent": per_agent,
        "notes": list(trace.notes),
    }
