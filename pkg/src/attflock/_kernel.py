"""Compiled inner loop of the simulation engine.

Everything here operates on one flat float64 state vector laid out as

    [leader attitude (4)] + per-agent blocks of 27:
    attitude (4), rate (3), attitude estimate (4), rate estimate (3),
    accel estimate (3), differentiator rate (3), differentiator accel (3),
    filter attitude (4)

and mirrors the public module math exactly (a unit test pins the two
against each other).  Neighbor estimates and measured signals enter as
zero-order-held arrays frozen for the span being integrated; topology is
constant within a span.  Per step the only allocations are the RK4
scratch vectors created once per span.
"""

import numpy as np
from numba import njit

LEADER_DIM = 4
AGENT_STRIDE = 27
OQ, OW, OP, OV, OZ, OY, OWD, OQB = 0, 4, 7, 11, 14, 17, 20, 23

# gains vector layout
G_L1, G_L2, G_L3, G_B1, G_B2, G_MU1, G_MU2 = 0, 1, 2, 3, 4, 5, 6
G_KP, G_KD, G_KQ, G_AP, G_AD, G_AQ, G_DELTA = 7, 8, 9, 10, 11, 12, 13
G_AMP, G_OM, G_DAMP, G_EPS = 14, 15, 16, 17
NGAINS = 18

MODE_FULL_STATE = 0
MODE_ATTITUDE_ONLY = 1

STATUS_OK = 0
STATUS_BLOWUP = 1
STATUS_MONITOR = 2


def state_dim(n: int) -> int:
    return LEADER_DIM + AGENT_STRIDE * n


def agent_base(i: int) -> int:
    return LEADER_DIM + AGENT_STRIDE * i


@njit(cache=True, inline="always")
def _qmul(a0, a1, a2, a3, b0, b1, b2, b3):
    return (
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + b0 * a1 + a2 * b3 - a3 * b2,
        a0 * b2 + b0 * a2 + a3 * b1 - a1 * b3,
        a0 * b3 + b0 * a3 + a1 * b2 - a2 * b1,
    )


@njit(cache=True, inline="always")
def _qrot(q0, q1, q2, q3, x, y, z):
    # (eta^2 - q.q) x - 2 eta (q cross x) + 2 (q.x) q; valid for any norm
    s2 = q0 * q0 - (q1 * q1 + q2 * q2 + q3 * q3)
    d = q1 * x + q2 * y + q3 * z
    cx = q2 * z - q3 * y
    cy = q3 * x - q1 * z
    cz = q1 * y - q2 * x
    return (
        s2 * x - 2.0 * q0 * cx + 2.0 * d * q1,
        s2 * y - 2.0 * q0 * cy + 2.0 * d * q2,
        s2 * z - 2.0 * q0 * cz + 2.0 * d * q3,
    )


@njit(cache=True, inline="always")
def _qrot_t(q0, q1, q2, q3, x, y, z):
    # transpose rotation: sign of the skew term flips
    s2 = q0 * q0 - (q1 * q1 + q2 * q2 + q3 * q3)
    d = q1 * x + q2 * y + q3 * z
    cx = q2 * z - q3 * y
    cy = q3 * x - q1 * z
    cz = q1 * y - q2 * x
    return (
        s2 * x + 2.0 * q0 * cx + 2.0 * d * q1,
        s2 * y + 2.0 * q0 * cy + 2.0 * d * q2,
        s2 * z + 2.0 * q0 * cz + 2.0 * d * q3,
    )


@njit(cache=True, inline="always")
def _spow(x, a):
    if x > 0.0:
        return x ** a
    if x < 0.0:
        return -((-x) ** a)
    return 0.0


@njit(cache=True, inline="always")
def _satp(x, a):
    ax = abs(x) ** a
    if ax > 1.0:
        ax = 1.0
    if x > 0.0:
        return ax
    if x < 0.0:
        return -ax
    return 0.0


@njit(cache=True, inline="always")
def _sgn(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@njit(cache=True, inline="always")
def _sgn_layered(x, width):
    # relay with an optional linear boundary layer
    if width > 0.0:
        r = x / width
        if r > 1.0:
            return 1.0
        if r < -1.0:
            return -1.0
        return r
    return _sgn(x)


@njit(cache=True, inline="always")
def _kbar(q0, q1, q2, q3, alpha):
    nq = np.sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3)
    gap = nq - q0
    tol = 1e-12 * (nq if nq > 1.0 else 1.0)
    if gap <= tol:
        return (0.0, 0.0, 0.0)
    den = (2.0 * nq * gap) ** (0.5 * alpha)
    return (q1 / den, q2 / den, q3 / den)


@njit(cache=True, inline="always")
def _mat3_vec(m, x, y, z):
    return (
        m[0, 0] * x + m[0, 1] * y + m[0, 2] * z,
        m[1, 0] * x + m[1, 1] * y + m[1, 2] * z,
        m[2, 0] * x + m[2, 1] * y + m[2, 2] * z,
    )


@njit(cache=True, inline="always")
def _leader_omega(t, amp, om):
    ph = om * t
    return (amp * np.sin(ph), amp * np.cos(ph), amp * np.sin(ph))


@njit(cache=True)
def _agent_control(s, b, qm_i, wm_i, h_i, ht_i, gains, jmat, mode):
    """Torque and filter rate command for one agent from held measurements.

    Returns (ux, uy, uz, ocx, ocy, ocz); the rate command is zero outside
    attitude-only mode.
    """
    p0, p1, p2, p3 = s[b + OP], s[b + OP + 1], s[b + OP + 2], s[b + OP + 3]
    vx, vy, vz = s[b + OV], s[b + OV + 1], s[b + OV + 2]
    zx, zy, zz = s[b + OZ], s[b + OZ + 1], s[b + OZ + 2]

    # estimated relative attitude: conj(P) o measured attitude
    qh0, qh1, qh2, qh3 = _qmul(p0, -p1, -p2, -p3, qm_i[0], qm_i[1], qm_i[2], qm_i[3])

    # leader rate transported into the body frame through the estimate
    vbx, vby, vbz = _qrot(qh0, qh1, qh2, qh3, vx, vy, vz)
    jvx, jvy, jvz = _mat3_vec(jmat, vbx, vby, vbz)
    # estimated feedforward: J R z + (R v) cross J (R v)
    rzx, rzy, rzz = _qrot(qh0, qh1, qh2, qh3, zx, zy, zz)
    ufx, ufy, ufz = _mat3_vec(jmat, rzx, rzy, rzz)
    ufx += vby * jvz - vbz * jvy
    ufy += vbz * jvx - vbx * jvz
    ufz += vbx * jvy - vby * jvx

    one_m_ap = 1.0 - gains[G_AP]
    kpx, kpy, kpz = _kbar(h_i * qh0, h_i * qh1, h_i * qh2, h_i * qh3, one_m_ap)

    ocx = ocy = ocz = 0.0
    if mode == MODE_ATTITUDE_ONLY:
        qb0, qb1, qb2, qb3 = s[b + OQB], s[b + OQB + 1], s[b + OQB + 2], s[b + OQB + 3]
        qt0, qt1, qt2, qt3 = _qmul(qb0, -qb1, -qb2, -qb3, qh0, qh1, qh2, qh3)
        kdx, kdy, kdz = _kbar(ht_i * qt0, ht_i * qt1, ht_i * qt2, ht_i * qt3, one_m_ap)
        kqx, kqy, kqz = _kbar(
            ht_i * qt0, ht_i * qt1, ht_i * qt2, ht_i * qt3, 1.0 - gains[G_AQ]
        )
        rx, ry, rz = _qrot_t(qt0, qt1, qt2, qt3, kqx, kqy, kqz)
        ocx = gains[G_KQ] * rx
        ocy = gains[G_KQ] * ry
        ocz = gains[G_KQ] * rz
        ux = ufx - gains[G_KP] * kpx - gains[G_KD] * kdx
        uy = ufy - gains[G_KP] * kpy - gains[G_KD] * kdy
        uz = ufz - gains[G_KP] * kpz - gains[G_KD] * kdz
    else:
        ad = gains[G_AD]
        ux = ufx - gains[G_KP] * kpx - gains[G_KD] * _satp(wm_i[0] - vbx, ad)
        uy = ufy - gains[G_KP] * kpy - gains[G_KD] * _satp(wm_i[1] - vby, ad)
        uz = ufz - gains[G_KP] * kpz - gains[G_KD] * _satp(wm_i[2] - vbz, ad)
    return ux, uy, uz, ocx, ocy, ocz


@njit(cache=True)
def _rhs(
    t, s, out, n, mode, torque_on, dist_on, gains, jmat, jinv,
    a0, coef, load_p, load_v, load_z, w0_meas, qm, wm, h, ht, theta,
):
    """Coupled derivative of the flat state with span-frozen held data.

    coef[i] holds the total coupling weight (follower degree plus leader
    access) multiplying the agent's own estimate; load_* hold the frozen
    weighted sums of neighbor estimates (plus the leader measurement for
    the attitude and rate channels).
    """
    amp = gains[G_AMP]
    om = gains[G_OM]
    w0x, w0y, w0z = _leader_omega(t, amp, om)

    # leader attitude kinematics on the true rate profile
    d0, d1, d2, d3 = _qmul(s[0], s[1], s[2], s[3], 0.0, w0x, w0y, w0z)
    out[0] = 0.5 * d0
    out[1] = 0.5 * d1
    out[2] = 0.5 * d2
    out[3] = 0.5 * d3

    lam1, lam2, lam3 = gains[G_L1], gains[G_L2], gains[G_L3]
    b1, b2 = gains[G_B1], gains[G_B2]
    mu1, mu2 = gains[G_MU1], gains[G_MU2]
    eps = gains[G_EPS]

    for i in range(n):
        b = LEADER_DIM + AGENT_STRIDE * i

        q0, q1, q2, q3 = s[b + OQ], s[b + OQ + 1], s[b + OQ + 2], s[b + OQ + 3]
        wx, wy, wz = s[b + OW], s[b + OW + 1], s[b + OW + 2]

        k0, k1, k2, k3 = _qmul(q0, q1, q2, q3, 0.0, wx, wy, wz)
        out[b + OQ] = 0.5 * k0
        out[b + OQ + 1] = 0.5 * k1
        out[b + OQ + 2] = 0.5 * k2
        out[b + OQ + 3] = 0.5 * k3

        ocx = ocy = ocz = 0.0
        if torque_on == 1:
            ux, uy, uz, ocx, ocy, ocz = _agent_control(
                s, b, qm[i], wm[i], h[i], ht[i], gains, jmat, mode
            )
        else:
            ux = uy = uz = 0.0

        if dist_on == 1:
            ph = theta[i] * t
            damp = gains[G_DAMP]
            ux += damp * np.cos(ph)
            uy += damp * np.sin(ph)
            uz -= damp * np.sin(ph)

        # rigid-body dynamics
        jwx, jwy, jwz = _mat3_vec(jmat, wx, wy, wz)
        tx = ux - (wy * jwz - wz * jwy)
        ty = uy - (wz * jwx - wx * jwz)
        tz = uz - (wx * jwy - wy * jwx)
        dwx, dwy, dwz = _mat3_vec(jinv, tx, ty, tz)
        out[b + OW] = dwx
        out[b + OW + 1] = dwy
        out[b + OW + 2] = dwz

        # attitude-estimate consensus
        ci = coef[i]
        p0, p1, p2, p3 = s[b + OP], s[b + OP + 1], s[b + OP + 2], s[b + OP + 3]
        vx, vy, vz = s[b + OV], s[b + OV + 1], s[b + OV + 2]
        ps0 = ci * p0 - load_p[i, 0]
        ps1 = ci * p1 - load_p[i, 1]
        ps2 = ci * p2 - load_p[i, 2]
        ps3 = ci * p3 - load_p[i, 3]
        e0, e1, e2, e3 = _qmul(p0, p1, p2, p3, 0.0, vx, vy, vz)
        out[b + OP] = 0.5 * e0 - lam1 * _spow(ps0, b1)
        out[b + OP + 1] = 0.5 * e1 - lam1 * _spow(ps1, b1)
        out[b + OP + 2] = 0.5 * e2 - lam1 * _spow(ps2, b1)
        out[b + OP + 3] = 0.5 * e3 - lam1 * _spow(ps3, b1)

        # rate-estimate consensus
        zx, zy, zz = s[b + OZ], s[b + OZ + 1], s[b + OZ + 2]
        vsx = ci * vx - load_v[i, 0]
        vsy = ci * vy - load_v[i, 1]
        vsz = ci * vz - load_v[i, 2]
        out[b + OV] = zx - lam2 * _spow(vsx, b2)
        out[b + OV + 1] = zy - lam2 * _spow(vsy, b2)
        out[b + OV + 2] = zz - lam2 * _spow(vsz, b2)

        # accel-estimate consensus; the leader channel compares against the
        # agent's own differentiator output
        a0i = a0[i]
        wdx, wdy, wdz = s[b + OWD], s[b + OWD + 1], s[b + OWD + 2]
        zax = ci * zx - a0i * wdx - load_z[i, 0]
        zay = ci * zy - a0i * wdy - load_z[i, 1]
        zaz = ci * zz - a0i * wdz - load_z[i, 2]
        out[b + OZ] = -lam3 * _sgn_layered(zax, eps)
        out[b + OZ + 1] = -lam3 * _sgn_layered(zay, eps)
        out[b + OZ + 2] = -lam3 * _sgn_layered(zaz, eps)

        # exact differentiator on the measured leader rate
        yx, yy, yz = s[b + OY], s[b + OY + 1], s[b + OY + 2]
        yex = yx - w0_meas[0]
        yey = yy - w0_meas[1]
        yez = yz - w0_meas[2]
        out[b + OY] = -mu1 * a0i * _spow(yex, 0.5) + wdx
        out[b + OY + 1] = -mu1 * a0i * _spow(yey, 0.5) + wdy
        out[b + OY + 2] = -mu1 * a0i * _spow(yez, 0.5) + wdz
        out[b + OWD] = -mu2 * a0i * _sgn_layered(yex, eps)
        out[b + OWD + 1] = -mu2 * a0i * _sgn_layered(yey, eps)
        out[b + OWD + 2] = -mu2 * a0i * _sgn_layered(yez, eps)

        # damping-filter kinematics
        if mode == MODE_ATTITUDE_ONLY and torque_on == 1:
            qb0, qb1, qb2, qb3 = (
                s[b + OQB],
                s[b + OQB + 1],
                s[b + OQB + 2],
                s[b + OQB + 3],
            )
            f0, f1, f2, f3 = _qmul(qb0, qb1, qb2, qb3, 0.0, ocx, ocy, ocz)
            out[b + OQB] = 0.5 * f0
            out[b + OQB + 1] = 0.5 * f1
            out[b + OQB + 2] = 0.5 * f2
            out[b + OQB + 3] = 0.5 * f3
        else:
            out[b + OQB] = 0.0
            out[b + OQB + 1] = 0.0
            out[b + OQB + 2] = 0.0
            out[b + OQB + 3] = 0.0


@njit(cache=True)
def compute_torques(t, s, tau_out, n, mode, torque_on, gains, jmat, qm, wm, h, ht):
    """Control torque per agent at the given instant (disturbance excluded)."""
    for i in range(n):
        b = LEADER_DIM + AGENT_STRIDE * i
        if torque_on == 1:
            ux, uy, uz, _, _, _ = _agent_control(
                s, b, qm[i], wm[i], h[i], ht[i], gains, jmat, mode
            )
        else:
            ux = uy = uz = 0.0
        tau_out[i, 0] = ux
        tau_out[i, 1] = uy
        tau_out[i, 2] = uz


@njit(cache=True, inline="always")
def _renorm4(s, off):
    nq = np.sqrt(
        s[off] * s[off]
        + s[off + 1] * s[off + 1]
        + s[off + 2] * s[off + 2]
        + s[off + 3] * s[off + 3]
    )
    if nq > 0.0:
        s[off] /= nq
        s[off + 1] /= nq
        s[off + 2] /= nq
        s[off + 3] /= nq


@njit(cache=True)
def integrate_span(
    s, h, ht, jc,
    global_step0, nsteps, dt,
    n, mode, torque_on, dist_on,
    gains, jmat, jinv,
    adj, a0, deg,
    p_held, v_held, z_held,
    q0_meas, w0_meas, qm, wm,
    theta,
    omega_ceiling, blowup_threshold,
    decim,
    trace_t, trace_state, trace_tau, trace_h, trace_ht, trace_jc,
    trace_cursor,
    events, event_cursor,
):
    """Advance the world over a span with frozen held data and topology.

    Per step: one RK4 pass, hysteresis jumps, renormalization of the unit
    quaternions (never the attitude estimates), blowup/monitor checks, and
    decimated trace capture.  Returns

        (status, bad_step, bad_agent, payload, trace_cursor, event_cursor)
    """
    dim = s.shape[0]
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    stmp = np.empty(dim)

    coef = np.empty(n)
    load_p = np.zeros((n, 4))
    load_v = np.zeros((n, 3))
    load_z = np.zeros((n, 3))
    for i in range(n):
        coef[i] = deg[i] + a0[i]
        for j in range(n):
            w = adj[i, j]
            if w > 0.0:
                for c in range(4):
                    load_p[i, c] += w * p_held[j, c]
                for c in range(3):
                    load_v[i, c] += w * v_held[j, c]
                    load_z[i, c] += w * z_held[j, c]
        if a0[i] > 0.0:
            for c in range(4):
                load_p[i, c] += a0[i] * q0_meas[c]
            for c in range(3):
                load_v[i, c] += a0[i] * w0_meas[c]

    amp = gains[G_AMP]
    om = gains[G_OM]
    delta = gains[G_DELTA]

    for step in range(nsteps):
        t = (global_step0 + step) * dt

        _rhs(t, s, k1, n, mode, torque_on, dist_on, gains, jmat, jinv,
             a0, coef, load_p, load_v, load_z, w0_meas, qm, wm, h, ht, theta)
        for d in range(dim):
            stmp[d] = s[d] + 0.5 * dt * k1[d]
        _rhs(t + 0.5 * dt, stmp, k2, n, mode, torque_on, dist_on, gains, jmat, jinv,
             a0, coef, load_p, load_v, load_z, w0_meas, qm, wm, h, ht, theta)
        for d in range(dim):
            stmp[d] = s[d] + 0.5 * dt * k2[d]
        _rhs(t + 0.5 * dt, stmp, k3, n, mode, torque_on, dist_on, gains, jmat, jinv,
             a0, coef, load_p, load_v, load_z, w0_meas, qm, wm, h, ht, theta)
        for d in range(dim):
            stmp[d] = s[d] + dt * k3[d]
        _rhs(t + dt, stmp, k4, n, mode, torque_on, dist_on, gains, jmat, jinv,
             a0, coef, load_p, load_v, load_z, w0_meas, qm, wm, h, ht, theta)
        for d in range(dim):
            s[d] += dt / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d])

        gstep = global_step0 + step + 1
        t_next = gstep * dt

        # hysteresis jumps on the post-flow state; continuous states untouched
        if torque_on == 1:
            for i in range(n):
                b = LEADER_DIM + AGENT_STRIDE * i
                eta_hat = (
                    s[b + OP] * qm[i, 0]
                    + s[b + OP + 1] * qm[i, 1]
                    + s[b + OP + 2] * qm[i, 2]
                    + s[b + OP + 3] * qm[i, 3]
                )
                if mode == MODE_ATTITUDE_ONLY:
                    qh0, qh1, qh2, qh3 = _qmul(
                        s[b + OP], -s[b + OP + 1], -s[b + OP + 2], -s[b + OP + 3],
                        qm[i, 0], qm[i, 1], qm[i, 2], qm[i, 3],
                    )
                    eta_tilde = (
                        s[b + OQB] * qh0
                        + s[b + OQB + 1] * qh1
                        + s[b + OQB + 2] * qh2
                        + s[b + OQB + 3] * qh3
                    )
                    if h[i] * eta_hat <= -delta or ht[i] * eta_tilde <= -delta:
                        h_new = 1.0 if eta_hat >= 0.0 else -1.0
                        ht_new = 1.0 if eta_tilde >= 0.0 else -1.0
                        kind = 0
                        if h_new != h[i]:
                            kind += 1
                        if ht_new != ht[i]:
                            kind += 2
                        h[i] = h_new
                        ht[i] = ht_new
                        jc[i] += 1
                        if event_cursor < events.shape[0]:
                            events[event_cursor, 0] = gstep
                            events[event_cursor, 1] = i
                            events[event_cursor, 2] = kind
                            event_cursor += 1
                else:
                    if h[i] * eta_hat <= -delta:
                        h[i] = 1.0 if eta_hat >= 0.0 else -1.0
                        jc[i] += 1
                        if event_cursor < events.shape[0]:
                            events[event_cursor, 0] = gstep
                            events[event_cursor, 1] = i
                            events[event_cursor, 2] = 1
                            event_cursor += 1

        # renormalize the unit quaternions only
        _renorm4(s, 0)
        for i in range(n):
            b = LEADER_DIM + AGENT_STRIDE * i
            _renorm4(s, b + OQ)
            if mode == MODE_ATTITUDE_ONLY:
                _renorm4(s, b + OQB)

        # blowup guard
        for d in range(dim):
            if not (abs(s[d]) <= blowup_threshold):
                bad_agent = -1 if d < LEADER_DIM else (d - LEADER_DIM) // AGENT_STRIDE
                return (STATUS_BLOWUP, gstep, bad_agent, abs(s[d]), trace_cursor, event_cursor)

        # boundedness monitor on the true velocity error
        w0x, w0y, w0z = _leader_omega(t_next, amp, om)
        for i in range(n):
            b = LEADER_DIM + AGENT_STRIDE * i
            e0, e1, e2, e3 = _qmul(
                s[0], -s[1], -s[2], -s[3],
                s[b + OQ], s[b + OQ + 1], s[b + OQ + 2], s[b + OQ + 3],
            )
            bx, by, bz = _qrot(e0, e1, e2, e3, w0x, w0y, w0z)
            ex = s[b + OW] - bx
            ey = s[b + OW + 1] - by
            ez = s[b + OW + 2] - bz
            wn = np.sqrt(ex * ex + ey * ey + ez * ez)
            if not (wn <= omega_ceiling):
                return (STATUS_MONITOR, gstep, i, wn, trace_cursor, event_cursor)

        if decim > 0 and gstep % decim == 0:
            trace_t[trace_cursor] = t_next
            for d in range(dim):
                trace_state[trace_cursor, d] = s[d]
            compute_torques(
                t_next, s, trace_tau[trace_cursor], n, mode, torque_on,
                gains, jmat, qm, wm, h, ht,
            )
            for i in range(n):
                trace_h[trace_cursor, i] = h[i]
                trace_ht[trace_cursor, i] = ht[i]
                trace_jc[trace_cursor, i] = jc[i]
            trace_cursor += 1

    return (STATUS_OK, global_step0 + nsteps, -1, 0.0, trace_cursor, event_cursor)
