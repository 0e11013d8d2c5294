"""Leader-following spacecraft attitude consensus toolbox.

Quaternion rigid-body dynamics, a distributed finite-time observer of the
leader trajectory, hybrid hysteresis consensus controllers (full-state and
attitude-only), and a deterministic fixed-step simulation engine with
communication ticks, delays, and switching topologies.
"""

from .controller import (
    ATTITUDE_ONLY,
    FULL_STATE,
    ControllerGains,
    EstimatedErrors,
    HybridLogic,
    attitude_only_torque,
    compute_delta,
    estimated_errors,
    filter_deriv,
    filter_signals,
    full_state_torque,
    jump_attitude_only,
    jump_full_state,
)
from .engine import (
    SimConfig,
    SimTrace,
    Simulator,
    empirical_t_r,
    metrics,
    observer_convergence_time,
    run,
    settling_time,
)
from .errors import (
    AttflockError,
    ConfigInvalid,
    GainTooSmall,
    MissingLeaderMeasurement,
    MonitorViolation,
    NotConverged,
    NumericalBlowup,
    SingularInertia,
    UnknownPreset,
)
from .graph import (
    SpectralBounds,
    Topology,
    TopologySchedule,
    h_matrix,
    is_leader_rooted,
    jacobi_eigenvalues,
    laplacian,
    ring_topology,
    spectral_bounds,
    topology_at,
)
from .observer import (
    ConvergenceBound,
    EstimationErrors,
    ObserverGains,
    ObserverState,
    consensus_inputs,
    convergence_bound,
    estimation_errors,
    observer_deriv,
)
from .quat import (
    e_matrix,
    kappa1,
    kappa1_bar,
    normalize,
    quat_conj,
    quat_error,
    quat_identity,
    quat_mul,
    require_unit,
    rot_matrix,
    sat_pow,
    sgn_pow,
)
from .rigid_body import (
    BodyParams,
    ErrorState,
    LeaderBounds,
    LeaderProfile,
    LeaderState,
    disturbance_torque,
    dynamics_deriv,
    error_state,
    feedforward,
    kinematics_deriv,
    leader_trajectory,
    xi_matrix,
)
from .scenarios import (
    PRESET_NAMES,
    config_from_dict,
    config_to_dict,
    load_config,
    nominal_topology,
    preset,
    save_config,
    switching_schedule,
)

__version__ = "0.1.0"
