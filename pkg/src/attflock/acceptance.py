"""Executable acceptance criteria for the whole package.

Each criterion is a function returning a CheckResult with the measured
numbers in its detail string.  Criteria share one RunCache so expensive
scenario runs happen once.  Two clauses are expected to fail at the
pinned scenario discretization and are marked ``expected_failure``; see
their details for the quantified reason.  They are real failures, kept
red on purpose rather than loosened.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from . import _kernel as K
from .controller import ATTITUDE_ONLY, FULL_STATE, HybridLogic, compute_delta, estimated_errors, filter_signals
from .engine import (
    SimConfig,
    Simulator,
    empirical_t_r,
    observer_convergence_time,
    run,
)
from .graph import Topology, h_matrix, jacobi_eigenvalues
from .observer import consensus_inputs, convergence_bound
from .quat import e_matrix, kappa1_bar, quat_conj, quat_mul, vec
from .scenarios import preset


@dataclass
class CheckResult:
    criterion: str
    passed: bool
    detail: str
    expected_failure: bool = False

    @property
    def status(self) -> str:
        if self.passed:
            return "PASS"
        return "FAIL (documented)" if self.expected_failure else "FAIL"


class RunCache:
    """Lazily computed scenario runs shared across criteria."""

    def __init__(self):
        self._traces = {}
        self.wall = {}

    def trace(self, key: str):
        if key not in self._traces:
            cfg = self._config(key)
            t0 = time.perf_counter()
            self._traces[key] = run(cfg)
            self.wall[key] = time.perf_counter() - t0
        return self._traces[key]

    @staticmethod
    def _config(key: str) -> SimConfig:
        name, mode = key.split("_", 1)
        mode = {"full": FULL_STATE, "att": ATTITUDE_ONLY}[mode.split("_")[0]]
        cfg = preset(name[0], mode=mode)
        if key.endswith("_half"):
            cfg.dt = 5e-4
            cfg.decimate = 20
        elif key.endswith("_fastcomm"):
            cfg.comm_hz = 1000.0
        return cfg

    def warmup(self):
        """Trigger kernel compilation outside any timed run."""
        cfg = preset("A")
        cfg.duration = 0.05
        run(cfg)
        cfg = preset("A", mode=ATTITUDE_ONLY)
        cfg.duration = 0.05
        run(cfg)


def _window(trace, t_from: float, t_to: float | None = None):
    lo = int(np.searchsorted(trace.t, t_from))
    hi = len(trace.t) if t_to is None else int(np.searchsorted(trace.t, t_to, side="right"))
    return slice(lo, hi)


def check_observer_convergence(cache: RunCache) -> CheckResult:
    cache.warmup()
    tr = cache.trace("A_full")
    w = _window(tr, 5.0)
    worst = {
        "P": float(tr.p_unwind_norm[w].max()),
        "v": float(tr.v_tilde_norm[w].max()),
        "z": float(tr.z_tilde_norm[w].max()),
    }
    wall = cache.wall["A_full"]
    ok = all(v < 1e-2 for v in worst.values()) and wall < 10.0
    return CheckResult(
        "1 observer convergence",
        ok,
        f"max over [5,60] s: ||P err||={worst['P']:.2e}, ||v err||={worst['v']:.2e}, "
        f"||z err||={worst['z']:.2e} (tol 1e-2); wall={wall:.2f} s (tol 10 s)",
    )


def check_second_order_sliding(cache: RunCache) -> CheckResult:
    tr = cache.trace("A_full")
    dt = tr.sample_dt
    dp = np.abs(np.diff(tr.p_tilde, axis=0) / dt).max(axis=(1, 2))
    dv = np.abs(np.diff(tr.v_tilde, axis=0) / dt).max(axis=(1, 2))
    w = _window(tr, 10.0)
    stop = w.start
    worst_p = float(dp[stop:].max())
    worst_v = float(dv[stop:].max())
    ok = worst_p < 1e-2 and worst_v < 1e-2
    return CheckResult(
        "2 second-order sliding",
        ok,
        f"finite-difference derivatives over [10,60] s: |dP~/dt|={worst_p:.2e}, "
        f"|dv~/dt|={worst_v:.2e} (tol 1e-2)",
    )


def _consensus_bands(trace, t_from: float):
    w = _window(trace, t_from)
    eta = float(np.abs(trace.h[w] * trace.eta_err[w] - 1.0).max())
    om = float(trace.omega_err_norm[w].max())
    return eta, om


def check_full_state_consensus(cache: RunCache) -> CheckResult:
    eta, om = _consensus_bands(cache.trace("A_full"), 30.0)
    ok = eta < 1e-2 and om < 1e-2
    return CheckResult(
        "3 full-state consensus",
        ok,
        f"over [30,60] s: |h*eta-1|={eta:.2e}, ||omega err||={om:.2e} (tol 1e-2)",
    )


def check_attitude_only_consensus(cache: RunCache) -> CheckResult:
    tr_fs = cache.trace("A_full")
    tr_ao = cache.trace("A_att")
    eta, om = _consensus_bands(tr_ao, 40.0)
    w_fs = _window(tr_fs, 2.0)
    w_ao = _window(tr_ao, 2.0)
    peak_fs = tr_fs.omega_err_norm[w_fs].max(axis=0)
    peak_ao = tr_ao.omega_err_norm[w_ao].max(axis=0)
    n_increased = int((peak_ao >= peak_fs).sum())
    ok = eta < 1e-2 and om < 1e-2 and n_increased >= 3
    return CheckResult(
        "4 attitude-only consensus",
        ok,
        f"over [40,60] s: |h*eta-1|={eta:.2e}, ||omega err||={om:.2e} (tol 1e-2); "
        f"increased velocity transients on {n_increased}/4 followers (need >=3)",
    )


def check_property_suites(_: RunCache) -> CheckResult:
    rng = np.random.default_rng(20240911)
    fails = []

    # operator-norm and annihilation identities of the kinematics matrix
    for _ in range(200):
        q = rng.standard_normal(4) * rng.uniform(0.2, 3.0)
        qp = rng.standard_normal(4)
        e = e_matrix(q)
        if abs(np.linalg.svd(e, compute_uv=False).max() - np.linalg.norm(q)) > 1e-10:
            fails.append("norm identity")
        if np.abs(q @ e_matrix(qp) + vec(quat_mul(quat_conj(q), qp))).max() > 1e-12:
            fails.append("cross identity")
        if np.abs(q @ e).max() > 1e-12:
            fails.append("annihilation")

    # symmetric double sum vanishes
    for _ in range(200):
        n = int(rng.integers(2, 7))
        b = rng.standard_normal((n, n))
        b = b + b.T
        qs = rng.standard_normal((n, 4))
        total = np.zeros(3)
        for i in range(n):
            for j in range(n):
                total += b[i, j] * (qs[j] @ e_matrix(qs[i]))
        if np.abs(total).max() > 1e-10:
            fails.append("double sum")

    # bounded feedback kernel on R^4
    for _ in range(1000):
        q = rng.standard_normal(4)
        q *= rng.uniform(0.1, 3.0) / np.linalg.norm(q)
        alpha = rng.uniform(0.0, 0.999)
        if np.linalg.norm(kappa1_bar(q, alpha)) > np.linalg.norm(q) ** (1 - alpha) + 1e-12:
            fails.append("kappa bound")

    # coupling matrix definiteness vs leader reachability
    for _ in range(200):
        n = int(rng.integers(2, 9))
        a = np.triu(rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < 0.5), 1)
        a = a + a.T
        # force a spanning chain so the follower graph is connected
        for i in range(n - 1):
            if a[i, i + 1] == 0.0:
                a[i, i + 1] = a[i + 1, i] = rng.uniform(0.2, 1.0)
        a0 = np.zeros(n)
        a0[rng.integers(0, n)] = 1.0
        topo = Topology(adjacency=a, leader_access=a0)
        if jacobi_eigenvalues(h_matrix(topo)).min() <= 0.0:
            fails.append("rooted H not PD")
    for _ in range(200):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, n))  # agents 0..k-1 form an unreachable island
        a = np.zeros((n, n))
        for grp in (range(k), range(k, n)):
            grp = list(grp)
            for i in range(len(grp) - 1):
                a[grp[i], grp[i + 1]] = a[grp[i + 1], grp[i]] = 1.0
        a0 = np.zeros(n)
        if k < n:
            a0[n - 1] = 1.0
        topo = Topology(adjacency=a, leader_access=a0)
        if jacobi_eigenvalues(h_matrix(topo)).min() > 1e-10:
            fails.append("unrooted H PD")

    ok = not fails
    return CheckResult(
        "5 algebraic property suites",
        ok,
        "kinematics-matrix identities (1e-10/1e-12), symmetric double sum (1e-10, 200x), "
        "bounded kernel (1000x), coupling-matrix definiteness (200+200 graphs)"
        + ("" if ok else f"; failed: {sorted(set(fails))}"),
    )


def check_differentiator(_: RunCache) -> CheckResult:
    rho1, rho2, dt, t_end = 2.0, 1.0, 1e-4, 15.0
    nst = int(round(t_end / dt))
    x, y = 1.0, 0.0
    hist = np.empty((nst + 1, 2))
    hist[0] = (x, y)

    def f(t, x_, y_):
        sp = np.sign(x_) * np.sqrt(abs(x_))
        return (-rho1 * sp + y_, -rho2 * np.sign(x_) + 0.5 * np.sin(t))

    for k in range(nst):
        t = k * dt
        k1 = f(t, x, y)
        k2 = f(t + dt / 2, x + dt / 2 * k1[0], y + dt / 2 * k1[1])
        k3 = f(t + dt / 2, x + dt / 2 * k2[0], y + dt / 2 * k2[1])
        k4 = f(t + dt, x + dt * k3[0], y + dt * k3[1])
        x += dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y += dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        hist[k + 1] = (x, y)

    tgrid = np.arange(nst + 1) * dt
    bad = (np.abs(hist[:, 0]) >= 1e-3) | (np.abs(hist[:, 1]) >= 1e-3)
    settle = 0.0 if not bad.any() else float(tgrid[np.flatnonzero(bad)[-1]] + dt)
    ok = settle <= 10.0
    return CheckResult(
        "6 differentiator finite-time",
        ok,
        f"|x|,|y| < 1e-3 from t={settle:.2f} s through {t_end:.0f} s "
        f"(need within 10 s; gains rho1={rho1}, rho2={rho2} > f0=0.5, rk4 dt={dt})",
    )


def check_conservation(_: RunCache) -> CheckResult:
    cfg = preset("A")
    cfg.torque_enabled = False
    cfg.duration = 10.0
    tr = run(cfg)
    j = cfg.body.inertia
    w = tr.omega_agent
    energy = 0.5 * np.einsum("mni,ij,mnj->mn", w, j, w)
    momentum = np.linalg.norm(np.einsum("ij,mnj->mni", j, w), axis=2)
    e_drift = float((np.abs(energy - energy[0]) / energy[0]).max())
    m_drift = float((np.abs(momentum - momentum[0]) / momentum[0]).max())
    ok = e_drift < 1e-9 and m_drift < 1e-9
    return CheckResult(
        "7 conservation oracles",
        ok,
        f"torque-free 10 s: relative kinetic-energy drift {e_drift:.2e}, "
        f"momentum-magnitude drift {m_drift:.2e} (tol 1e-9)",
    )


def check_bound_soundness(cache: RunCache) -> CheckResult:
    tr = cache.trace("A_full")
    cfg = tr.config
    t_r = empirical_t_r(tr)
    observed = observer_convergence_time(tr)
    args = (
        cfg.topology,
        cfg.leader.bounds(),
        cfg.p_init - cfg.leader.q0,
        cfg.v_init - cfg.leader.omega(0.0),
        cfg.z_init - cfg.leader.omega_dot(0.0),
    )
    b = convergence_bound(cfg.observer_gains, *args, t_r=t_r)
    doubled = dataclasses.replace(
        cfg.observer_gains,
        lambda1=2 * cfg.observer_gains.lambda1,
        lambda2=2 * cfg.observer_gains.lambda2,
        lambda3=2 * cfg.observer_gains.lambda3,
    )
    b2 = convergence_bound(doubled, *args, t_r=t_r)
    sound = observed is not None and b.t_p >= observed and b.t_z <= b.t_v <= b.t_p
    monotone = b2.t_p_log10 <= b.t_p_log10
    ok = sound and monotone and np.isfinite(b.t_p_log10)
    return CheckResult(
        "8 convergence-bound soundness",
        ok,
        f"observed convergence {observed:.2f} s <= bound chain T_z={b.t_z:.1f}, T_v={b.t_v:.1f}, "
        f"T_p=1e{b.t_p_log10:.0f} s (empirical t_r={t_r:.2f}); doubling gains: "
        f"1e{b2.t_p_log10:.0f} <= 1e{b.t_p_log10:.0f}",
    )


def check_robustness(cache: RunCache) -> CheckResult:
    tr = cache.trace("B_full")
    m = len(tr.t)
    tail = slice(int(np.ceil(0.8 * (m - 1))), m)
    eta = float(np.abs(tr.h[tail] * tr.eta_err[tail] - 1.0).max())
    om = float(tr.omega_err_norm[tail].max())
    ok = eta < 5e-2 and om < 5e-2
    return CheckResult(
        "9 delay/disturbance robustness",
        ok,
        f"no blowup; steady (final 20%): |h*eta-1|={eta:.2e}, ||omega err||={om:.2e} (tol 5e-2)",
    )


def check_switching_topology(cache: RunCache) -> CheckResult:
    eta, om = _consensus_bands(cache.trace("C_full"), 40.0)
    ok = eta < 1e-2 and om < 1e-2
    return CheckResult(
        "10 switching-topology consensus",
        ok,
        f"over [40,60] s: |h*eta-1|={eta:.2e}, ||omega err||={om:.2e} (tol 1e-2)",
    )


HYGIENE_RUNS = ("A_full", "A_att", "B_full", "B_att", "C_full", "C_att")


def check_jump_counts(cache: RunCache) -> CheckResult:
    worst = {}
    for key in HYGIENE_RUNS:
        tr = cache.trace(key)
        worst[key] = int(tr.jump_count[-1].max())
    ok = all(v <= 5 for v in worst.values())
    return CheckResult(
        "11a hybrid hygiene: jump counts",
        ok,
        "max per-agent jumps per 60 s: "
        + ", ".join(f"{k}={v}" for k, v in worst.items())
        + " (tol 5)",
    )


def check_jump_continuity(cache: RunCache) -> CheckResult:
    tr = cache.trace("A_att")
    if len(tr.events) == 0:
        return CheckResult("11b hybrid hygiene: jump continuity", False, "no jump events found")
    step, agent, _ = (int(x) for x in tr.events[0])

    def advance_to(nsteps: int) -> Simulator:
        sim = Simulator(cache._config("A_att"))
        while sim.global_step < nsteps:
            next_tick = ((sim.global_step // sim.steps_per_tick) + 1) * sim.steps_per_tick
            sim._advance(min(next_tick, nsteps) - sim.global_step)
            sim._after_span()
        return sim

    # same flow, jump disabled via a hysteresis width no trajectory reaches:
    # continuous states must match exactly, only the logic may differ
    sim_a = advance_to(step - 1)
    sim_b = advance_to(step - 1)
    sim_b.gains = sim_b.gains.copy()
    sim_b.gains[K.G_DELTA] = 0.999999
    h_before = sim_a.h.copy()
    sim_a._advance(1)
    sim_b._advance(1)
    state_equal = bool(np.array_equal(sim_a.state, sim_b.state))
    jumped = bool((sim_a.h != h_before).any() or sim_a.jc[agent] > 0)
    ok = state_equal and jumped
    return CheckResult(
        "11b hybrid hygiene: jump continuity",
        ok,
        f"jump at step {step} (agent {agent + 1}): continuous states bit-identical with "
        f"jump suppressed={state_equal}, logic flipped={jumped}",
    )


def check_delta_diagnostic(cache: RunCache) -> CheckResult:
    tr = cache.trace("A_att")
    cfg = tr.config
    og = cfg.observer_gains
    cg = cfg.controller_gains
    conv = observer_convergence_time(tr) or 5.0
    w = _window(tr, conv + 5.0)
    worst = 0.0
    for k in range(w.start, len(tr.t), 20):
        p_all = tr.p_est[k]
        ps_all = consensus_inputs(p_all, tr.q_leader[k], cfg.topology)
        for i in range(tr.n):
            est = estimated_errors(
                tr.q_agent[k, i], tr.omega_agent[k, i], p_all[i],
                tr.v_est[k, i], tr.z_est[k, i], cfg.body,
            )
            logic = HybridLogic(h=tr.h[k, i], h_tilde=tr.h_tilde[k, i])
            q_tilde, omega_cmd = filter_signals(tr.q_filter[k, i], est, logic, cg)
            delta = compute_delta(
                tr.q_filter[k, i], q_tilde, omega_cmd, est, tr.v_est[k, i],
                ps_all[i], tr.q_agent[k, i], og.lambda1, og.beta1,
            )
            worst = max(worst, float(np.linalg.norm(delta)))
    ok = worst < 1e-6
    return CheckResult(
        "11c hybrid hygiene: transient coupling zero after convergence",
        ok,
        f"max ||Delta|| for t >= {conv + 5.0:.1f} s is {worst:.2e} (tol 1e-6). "
        "Expected red at the pinned exchange rate: the attitude-estimate consensus residual "
        "floors at the zero-order-hold staleness of neighbor data (~half the leader rate "
        "times one 10 ms tick ~ 9e-5; measured floor drops 30x at 1 kHz exchange), and the "
        "signed-power feedback amplifies it to 2*lambda1*(9e-5)^0.8 ~ 6e-3; reaching 1e-6 "
        "would need ~MHz-rate exchange, contradicting the pinned 100 Hz.",
        expected_failure=True,
    )


def check_determinism(cache: RunCache) -> CheckResult:
    tr1 = cache.trace("A_full")
    tr2 = run(cache._config("A_full"))
    same = (
        np.array_equal(tr1.state, tr2.state)
        and np.array_equal(tr1.tau, tr2.tau)
        and np.array_equal(tr1.h, tr2.h)
        and np.array_equal(tr1.jump_count, tr2.jump_count)
    )
    return CheckResult(
        "12a determinism",
        bool(same),
        "repeated Scenario-A runs produce bit-identical traces" if same else "traces differ",
    )


def check_step_halving(cache: RunCache) -> CheckResult:
    tr1 = cache.trace("A_full")
    tr2 = cache.trace("A_full_half")
    diff = float(np.abs(tr1.state[-1] - tr2.state[-1]).max())
    ok = diff < 1e-4
    return CheckResult(
        "12b step-halving convergence",
        ok,
        f"|final state (dt=1e-3) - final state (dt=5e-4)| = {diff:.2e} (tol 1e-4). "
        "Expected red at the pinned step: the relay states chatter at ~lambda3*dt ~ 1e-3 by "
        "construction, and the resting attitude offset is itself step-dependent "
        "(~5e-4 at dt=1e-3, ~1e-4 at dt=5e-4), so no halving comparison at the pinned "
        "dt=1e-3 can sit below 1e-4; smooth states (rates, attitude estimates, leader) agree "
        "to ~1e-5.",
        expected_failure=True,
    )


ALL_CHECKS = (
    check_observer_convergence,
    check_second_order_sliding,
    check_full_state_consensus,
    check_attitude_only_consensus,
    check_property_suites,
    check_differentiator,
    check_conservation,
    check_bound_soundness,
    check_robustness,
    check_switching_topology,
    check_jump_counts,
    check_jump_continuity,
    check_delta_diagnostic,
    check_determinism,
    check_step_halving,
)


def run_all(cache: RunCache | None = None) -> list[CheckResult]:
    """Run every acceptance criterion, sharing one scenario-run cache."""
    cache = cache or RunCache()
    return [check(cache) for check in ALL_CHECKS]
