"""Pure-python reference integration step built from the public modules.

Used to pin the compiled kernel against the documented math: one RK4 step
with span-frozen held data must match the engine's arithmetic closely
(the kernel orders a few sums differently, so agreement is to tight
floating-point tolerance rather than bit-exact).
"""

import numpy as np

import attflock.quat as quat
from attflock import _kernel as K
from attflock.controller import (
    ATTITUDE_ONLY,
    EstimatedErrors,
    HybridLogic,
    attitude_only_torque,
    estimated_errors,
    filter_signals,
    full_state_torque,
)
from attflock.observer import layered_sign
from attflock.rigid_body import disturbance_torque


def unpack(state, n):
    """Named views of the flat state vector."""
    blocks = state[K.LEADER_DIM:].reshape(n, K.AGENT_STRIDE)
    return {
        "q0": state[0:4],
        "q": blocks[:, K.OQ:K.OQ + 4],
        "omega": blocks[:, K.OW:K.OW + 3],
        "p": blocks[:, K.OP:K.OP + 4],
        "v": blocks[:, K.OV:K.OV + 3],
        "z": blocks[:, K.OZ:K.OZ + 3],
        "y": blocks[:, K.OY:K.OY + 3],
        "w": blocks[:, K.OWD:K.OWD + 3],
        "qbar": blocks[:, K.OQB:K.OQB + 4],
    }


def reference_rhs(t, state, cfg, topo, held, h, ht):
    """Derivative of the flat state computed with the public-module math."""
    n = cfg.n
    s = unpack(state, n)
    p_held, v_held, z_held, q0_meas, w0_meas, qm, wm = held
    adj = topo.adjacency
    a0 = topo.leader_access
    deg = adj.sum(axis=1)
    og = cfg.observer_gains
    cg = cfg.controller_gains
    out = np.zeros_like(state)
    o = unpack(out, n)

    w0 = cfg.leader.omega(t)
    o["q0"][:] = 0.5 * quat.quat_mul(s["q0"], quat.pure(w0))

    for i in range(n):
        o["q"][i] = 0.5 * quat.quat_mul(s["q"][i], quat.pure(s["omega"][i]))

        u = np.zeros(3)
        omega_cmd = np.zeros(3)
        if cfg.torque_enabled:
            est = estimated_errors(qm[i], wm[i], s["p"][i], s["v"][i], s["z"][i], cfg.body)
            logic = HybridLogic(h=h[i], h_tilde=ht[i])
            if cg.mode == ATTITUDE_ONLY:
                q_tilde, omega_cmd = filter_signals(s["qbar"][i], est, logic, cg)
                u = attitude_only_torque(est, q_tilde, logic, cg)
            else:
                u = full_state_torque(est, logic, cg)
        if cfg.disturbance_enabled:
            u = u + disturbance_torque(t, i, cfg.disturbance_amplitude)

        jw = cfg.body.inertia @ s["omega"][i]
        o["omega"][i] = cfg.body.inertia_inv @ (u - np.cross(s["omega"][i], jw))

        p_s = (deg[i] + a0[i]) * s["p"][i] - (adj[i] @ p_held + a0[i] * q0_meas)
        v_s = (deg[i] + a0[i]) * s["v"][i] - (adj[i] @ v_held + a0[i] * w0_meas)
        z_arg = (deg[i] + a0[i]) * s["z"][i] - a0[i] * s["w"][i] - adj[i] @ z_held
        o["p"][i] = 0.5 * quat.quat_mul(s["p"][i], quat.pure(s["v"][i])) - og.lambda1 * quat.sgn_pow(p_s, og.beta1)
        o["v"][i] = s["z"][i] - og.lambda2 * quat.sgn_pow(v_s, og.beta2)
        o["z"][i] = -og.lambda3 * layered_sign(z_arg, og.boundary_layer)

        y_err = s["y"][i] - w0_meas
        o["y"][i] = -og.mu1 * a0[i] * quat.sgn_pow(y_err, 0.5) + s["w"][i]
        o["w"][i] = -og.mu2 * a0[i] * layered_sign(y_err, og.boundary_layer)

        if cfg.torque_enabled and cg.mode == ATTITUDE_ONLY:
            o["qbar"][i] = 0.5 * quat.quat_mul(s["qbar"][i], quat.pure(omega_cmd))
    return out


def reference_step(t, state, cfg, topo, held, h, ht):
    """One RK4 step plus renormalization; jumps are NOT applied here."""
    dt = cfg.dt
    k1 = reference_rhs(t, state, cfg, topo, held, h, ht)
    k2 = reference_rhs(t + dt / 2, state + dt / 2 * k1, cfg, topo, held, h, ht)
    k3 = reference_rhs(t + dt / 2, state + dt / 2 * k2, cfg, topo, held, h, ht)
    k4 = reference_rhs(t + dt, state + dt * k3, cfg, topo, held, h, ht)
    out = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    n = cfg.n
    views = unpack(out, n)
    views["q0"][:] = quat.normalize(views["q0"])
    for i in range(n):
        views["q"][i] = quat.normalize(views["q"][i])
        if cfg.controller_gains.mode == ATTITUDE_ONLY:
            views["qbar"][i] = quat.normalize(views["qbar"][i])
    return out
