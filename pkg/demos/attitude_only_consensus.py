"""Consensus without a single rate gyro.

The attitude-only controller replaces rate damping with a unit-quaternion
filter: the filter chases the estimated attitude error, and the mismatch
between the two injects the damping a derivative term would normally
provide.  The price is a livelier transient; the comparison below shows
the velocity-error peaks growing on most followers once the gyros are
taken away, while the final accuracy is just as good.
"""

import numpy as np

from attflock import ATTITUDE_ONLY, preset, run

tr_full = run(preset("A"))
tr_att = run(preset("A", mode=ATTITUDE_ONLY))

i2 = np.searchsorted(tr_full.t, 2.0)
peak_full = tr_full.omega_err_norm[i2:].max(axis=0)
peak_att = tr_att.omega_err_norm[i2:].max(axis=0)

print("peak ||omega err|| after t = 2 s (rad/s):")
print("  follower      with gyros    attitude only")
for i in range(4):
    marker = "  <- larger transient" if peak_att[i] >= peak_full[i] else ""
    print(f"  {i + 1}            {peak_full[i]:.3f}         {peak_att[i]:.3f}{marker}")

i40 = np.searchsorted(tr_att.t, 40.0)
eta = np.abs(tr_att.h[i40:] * tr_att.eta_err[i40:] - 1.0).max()
om = tr_att.omega_err_norm[i40:].max()
print(f"\nattitude-only bands over [40, 60] s: |h*eta - 1| <= {eta:.1e}, "
      f"||omega err|| <= {om:.1e}")

print("\nfilter attitudes stay on the unit sphere:",
      f"max |norm - 1| = {np.abs(np.linalg.norm(tr_att.q_filter, axis=2) - 1).max():.1e}")
print("jumps per follower (h and/or filter logic):", tr_att.jump_count[-1].tolist())
