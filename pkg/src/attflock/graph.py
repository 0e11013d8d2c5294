"""Communication topology among followers and the leader-access pattern.

The follower graph is weighted and undirected (symmetric adjacency with
zero diagonal); the leader is node 0 and reaches follower i when
``leader_access[i] == 1``.  The coupling matrix H = L + diag(leader_access)
is positive definite exactly when the leader can reach every follower
through the graph, which is the standing connectivity assumption for the
observer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, NotConverged

_JACOBI_SWEEP_LIMIT = 100
_JACOBI_THRESHOLD = 1e-13


@dataclass(frozen=True)
class Topology:
    """Weighted follower graph plus leader-access weights."""

    adjacency: np.ndarray
    leader_access: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        a0 = np.asarray(self.leader_access, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigInvalid(f"adjacency must be square, got shape {a.shape}")
        if a0.shape != (a.shape[0],):
            raise ConfigInvalid(
                f"leader_access must have length {a.shape[0]}, got {a0.shape}"
            )
        if not np.allclose(a, a.T, atol=0.0):
            raise ConfigInvalid("adjacency must be symmetric")
        if np.any(np.diag(a) != 0.0):
            raise ConfigInvalid("adjacency diagonal must be zero")
        if np.any(a < 0.0) or np.any(a0 < 0.0):
            raise ConfigInvalid("edge weights must be nonnegative")
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "leader_access", a0)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class TopologySchedule:
    """Piecewise-constant topology: (start time, topology) intervals.

    Intervals tile [0, period) and repeat with the given period; with
    period None the last interval extends forever.
    """

    intervals: tuple = field(default=())
    period: float | None = None

    def __post_init__(self):
        iv = tuple((float(t), topo) for t, topo in self.intervals)
        if not iv:
            raise ConfigInvalid("schedule needs at least one interval")
        starts = [t for t, _ in iv]
        if starts[0] != 0.0:
            raise ConfigInvalid("first interval must start at t=0")
        if sorted(starts) != starts or len(set(starts)) != len(starts):
            raise ConfigInvalid("interval starts must be strictly increasing")
        if self.period is not None and self.period <= starts[-1]:
            raise ConfigInvalid("period must exceed the last interval start")
        object.__setattr__(self, "intervals", iv)


def topology_at(schedule: TopologySchedule, t: float) -> Topology:
    """Active topology at time t >= 0 (period-reduced for cyclic schedules)."""
    if t < 0:
        raise ConfigInvalid(f"t must be >= 0, got {t}")
    tau = t
    if schedule.period is not None:
        tau = t % schedule.period
    active = schedule.intervals[0][1]
    for start, topo in schedule.intervals:
        if tau >= start:
            active = topo
        else:
            break
    return active


def laplacian(topo: Topology) -> np.ndarray:
    """Graph Laplacian: row sums are zero by construction."""
    a = topo.adjacency
    return np.diag(a.sum(axis=1)) - a


def h_matrix(topo: Topology) -> np.ndarray:
    """Coupling matrix L + diag(leader_access)."""
    return laplacian(topo) + np.diag(topo.leader_access)


def is_leader_rooted(topo: Topology) -> bool:
    """True iff every follower is reachable from the leader.

    Reachability runs through the leader links and then the undirected
    follower edges, i.e. the leader-rooted spanning-tree condition.
    """
    n = topo.n
    reached = topo.leader_access > 0.0
    frontier = list(np.flatnonzero(reached))
    while frontier:
        i = frontier.pop()
        for j in np.flatnonzero(topo.adjacency[i] > 0.0):
            if not reached[j]:
                reached[j] = True
                frontier.append(j)
    return bool(reached.all())


@dataclass(frozen=True)
class SpectralBounds:
    """Extreme singular values of a symmetric PSD matrix."""

    sigma_min: float
    sigma_max: float


def jacobi_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.

    Self-contained so the spectral constants do not depend on a LAPACK
    backend; intended for n <= 16.  Raises NotConverged after 100 sweeps.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigInvalid(f"matrix must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ConfigInvalid("matrix must be symmetric")
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0]])
    for _ in range(_JACOBI_SWEEP_LIMIT):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= _JACOBI_THRESHOLD * max(1.0, np.abs(np.diag(a)).max()):
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                # classic two-sided rotation annihilating a[p, q]
                theta = 0.5 * (a[q, q] - a[p, p]) / a[p, q]
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a = 0.5 * (a + a.T)
    raise NotConverged(f"Jacobi sweep limit ({_JACOBI_SWEEP_LIMIT}) exceeded")


def spectral_bounds(h: np.ndarray) -> SpectralBounds:
    """Extreme singular values of symmetric h (|eigenvalues| for PSD input)."""
    eig = jacobi_eigenvalues(h)
    mag = np.abs(eig)
    return SpectralBounds(sigma_min=float(mag.min()), sigma_max=float(mag.max()))


def ring_topology(n: int = 4, leader_links=(0,)) -> Topology:
    """Unit-weight follower ring 1-2-...-n-1 with the given leader links.

    The default single leader link keeps the graph minimal while still
    containing a cycle, which the consensus scheme must tolerate.
    """
    a = np.zeros((n, n))
    for i in range(n):
        j = (i + 1) % n
        a[i, j] = a[j, i] = 1.0
    a0 = np.zeros(n)
    for i in leader_links:
        a0[i] = 1.0
    return Topology(adjacency=a, leader_access=a0)
