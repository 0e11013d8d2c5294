"""Quaternion algebra and the nonsmooth feedback kernels.

Quaternions are plain numpy arrays of shape (4,), scalar part first:
``Q = [eta, qx, qy, qz]``.  General (non-unit) 4-vectors are allowed
everywhere; the leader-attitude estimates deliberately evolve off the
unit sphere.  Physical attitudes must satisfy ``abs(norm(Q) - 1) <= 1e-9``
(see :func:`require_unit`).
"""

from __future__ import annotations

import numpy as np

UNIT_TOL = 1e-9

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def quat_identity() -> np.ndarray:
    """Identity quaternion [1, 0, 0, 0]."""
    return IDENTITY.copy()


def quat_mul(a, b) -> np.ndarray:
    """Quaternion product a o b (associative, not commutative)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    eta_a, qa = a[0], a[1:]
    eta_b, qb = b[0], b[1:]
    out = np.empty(4)
    out[0] = eta_a * eta_b - qa @ qb
    out[1:] = eta_a * qb + eta_b * qa + np.cross(qa, qb)
    return out


def quat_conj(q) -> np.ndarray:
    """Conjugate [eta, -q]; inverse on the unit sphere."""
    q = np.asarray(q, dtype=float)
    out = q.copy()
    out[1:] = -out[1:]
    return out


def vec(q) -> np.ndarray:
    """Vector part of a quaternion."""
    return np.asarray(q, dtype=float)[1:].copy()


def pure(v) -> np.ndarray:
    """Embed a 3-vector as a quaternion with zero scalar part."""
    out = np.zeros(4)
    out[1:] = v
    return out


def quat_error(base, target) -> np.ndarray:
    """Relative quaternion base* o target (attitude of target seen from base)."""
    return quat_mul(quat_conj(base), target)


def normalize(q) -> np.ndarray:
    """Rescale to unit norm."""
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def require_unit(q, tol: float = UNIT_TOL, name: str = "quaternion") -> np.ndarray:
    """Return q as an array, raising ValueError unless it is unit to tol."""
    q = np.asarray(q, dtype=float)
    err = abs(np.linalg.norm(q) - 1.0)
    if not err <= tol:
        raise ValueError(f"{name} is not unit: |norm - 1| = {err:.3e} > {tol:.0e}")
    return q


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(v) @ u == cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def e_matrix(q) -> np.ndarray:
    """4x3 kinematics matrix E(Q) = [-q^T; skew(q) + eta*I].

    Satisfies 0.5 * E(Q) @ w == 0.5 * Q o [0, w] for any rate w, and
    ||E(Q)||_2 == ||Q||_2 with Q^T E(Q) == 0.
    """
    q = np.asarray(q, dtype=float)
    eta, qv = q[0], q[1:]
    out = np.empty((4, 3))
    out[0] = -qv
    out[1:] = skew(qv) + eta * np.eye(3)
    return out


def rot_matrix(q) -> np.ndarray:
    """Rotation matrix (inertial -> body for unit Q).

    Defined for any 4-vector as (eta^2 - q.q) I - 2 eta skew(q) + 2 q q^T;
    for general Q the induced 2-norm equals ||Q||^2.
    """
    q = np.asarray(q, dtype=float)
    eta, qv = q[0], q[1:]
    return (
        (eta * eta - qv @ qv) * np.eye(3)
        - 2.0 * eta * skew(qv)
        + 2.0 * np.outer(qv, qv)
    )


def sgn_pow(x, alpha: float) -> np.ndarray:
    """Elementwise signed power sign(x) * |x|**alpha, with sign(0) = 0.

    The zero convention makes the discontinuous feedback terms
    deterministic; alpha must be >= 0.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** alpha


def sat_pow(x, alpha: float) -> np.ndarray:
    """Elementwise sign(x) * min(|x|**alpha, 1); standard saturation at alpha=1."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.minimum(np.abs(x) ** alpha, 1.0)


def kappa1(q, alpha: float) -> np.ndarray:
    """Bounded attitude-feedback direction q / sqrt(2(1 - eta))**alpha.

    Only meaningful on the unit sphere, where ||kappa1|| <= 1 and the
    map is continuous (it returns 0 at eta = 1).
    """
    q = np.asarray(q, dtype=float)
    eta, qv = q[0], q[1:]
    if eta >= 1.0 - 1e-15:
        return np.zeros(3)
    return qv / np.sqrt(2.0 * (1.0 - eta)) ** alpha


def kappa1_bar(q, alpha: float) -> np.ndarray:
    """Extension of :func:`kappa1` that stays continuous on all of R^4.

    Returns q / sqrt(2 ||Q|| (||Q|| - eta))**alpha away from the branch
    point eta = ||Q||, and 0 there (including Q = 0).  Satisfies
    ||kappa1_bar(Q, alpha)|| <= ||Q||**(1 - alpha) and agrees with
    kappa1 on the unit sphere.
    """
    q = np.asarray(q, dtype=float)
    eta, qv = q[0], q[1:]
    n = np.linalg.norm(q)
    # float equality at the branch is meaningless; use a scaled tolerance
    gap = n - eta
    if gap <= 1e-12 * max(1.0, n):
        return np.zeros(3)
    return qv / np.sqrt(2.0 * n * gap) ** alpha
