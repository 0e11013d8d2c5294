"""Exception types shared across the package."""


class AttflockError(Exception):
    """Base class for package-specific failures."""


class ConfigInvalid(AttflockError):
    """A scenario configuration violates a documented constraint."""


class UnknownPreset(ConfigInvalid):
    """Requested scenario preset name does not exist."""


class GainTooSmall(ConfigInvalid):
    """Observer gain inequality (lambda3, mu2 > gamma3) violated."""


class SingularInertia(ConfigInvalid):
    """Inertia matrix is not symmetric positive definite."""


class NotConverged(AttflockError):
    """Iterative eigensolver exceeded its sweep limit."""


class MissingLeaderMeasurement(AttflockError):
    """Observer derivative requested for a leader-connected agent without a measurement."""


class NumericalBlowup(AttflockError):
    """A simulated state exceeded the blowup ceiling."""

    def __init__(self, t: float, agent: int, msg: str = ""):
        self.t = t
        self.agent = agent
        detail = msg or f"state norm exceeded 1e9 at t={t:.6f} s (agent {agent})"
        super().__init__(detail)


class MonitorViolation(AttflockError):
    """Runtime boundedness monitor tripped (velocity error above ceiling)."""

    def __init__(self, t: float, agent: int, value: float, ceiling: float):
        self.t = t
        self.agent = agent
        self.value = value
        self.ceiling = ceiling
        super().__init__(
            f"velocity-error monitor tripped at t={t:.6f} s (agent {agent}): "
            f"{value:.3f} rad/s > ceiling {ceiling:.3f} rad/s"
        )
