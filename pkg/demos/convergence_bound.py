"""Worst-case convergence-time bound versus what actually happens.

The observer comes with a chained analytic bound: first the differentiator
locks on (t_r, measured here), then the acceleration estimates (T_z), the
rates (T_v), and finally the attitudes (T_p).  The chain is sound but
spectacularly conservative; the attitude stage exponentiates a no-escape
growth cap, so T_p is reported through its log10.  Cranking the consensus
gains up can only shrink the bound.
"""

import dataclasses

import numpy as np

from attflock import convergence_bound, empirical_t_r, observer_convergence_time, preset, run

cfg = preset("A")
trace = run(cfg)
t_r = empirical_t_r(trace)
observed = observer_convergence_time(trace)

args = (
    cfg.topology,
    cfg.leader.bounds(),
    cfg.p_init - cfg.leader.q0,
    cfg.v_init - cfg.leader.omega(0.0),
    cfg.z_init - cfg.leader.omega_dot(0.0),
)
bound = convergence_bound(cfg.observer_gains, *args, t_r=t_r)

print(f"measured: differentiator t_r = {t_r:.2f} s, full observer convergence = {observed:.2f} s")
print(f"bound chain: T_z = {bound.t_z:.1f} s, T_v = {bound.t_v:.1f} s, "
      f"T_p = 10^{bound.t_p_log10:.0f} s")
print(f"soundness: observed {observed:.2f} s <= T_p? {bound.t_p >= observed}")
print(f"(constants: c_z = {bound.c_z:.3f}, c_v = {bound.c_v:.3f}, c_p = {bound.c_p:.3f}, "
      f"growth exponent c_p0*T_v = {bound.c_p0 * bound.t_v:.0f})\n")

print("doubling the consensus gains never slows the bound:")
for factor in (1.0, 2.0, 4.0):
    gains = dataclasses.replace(
        cfg.observer_gains,
        lambda1=factor * cfg.observer_gains.lambda1,
        lambda2=factor * cfg.observer_gains.lambda2,
        lambda3=factor * cfg.observer_gains.lambda3,
    )
    b = convergence_bound(gains, *args, t_r=t_r)
    print(f"  gains x{factor:.0f}: T_z = {b.t_z:6.2f} s, T_v = {b.t_v:7.2f} s, "
          f"T_p = 10^{b.t_p_log10:.0f} s")

zero = convergence_bound(
    cfg.observer_gains, cfg.topology, cfg.leader.bounds(),
    np.zeros((4, 4)), np.zeros((4, 3)), np.zeros((4, 3)), t_r=0.0,
)
print(f"\nwith zero initial errors the whole chain collapses: "
      f"T_z = T_v = T_p = {zero.t_p:.1f} s")
