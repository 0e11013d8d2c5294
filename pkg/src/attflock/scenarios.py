"""Scenario presets and the on-disk configuration format.

Three named campaigns are built in:

* ``A`` - nominal: fixed ring topology, no delays, no disturbance;
* ``B`` - one-tick measurement and communication delays plus a slow
  sinusoidal disturbance torque, fresh initial conditions;
* ``C`` - periodically switching topology (each half-period alone is not
  leader-rooted, their union is), no delays or disturbance, scenario-B
  initial conditions.

Configurations serialize to a strict JSON document (nested tables and
arrays, decimal round-trip exact); unknown keys are rejected.
"""

from __future__ import annotations

import json

import numpy as np

from .controller import ATTITUDE_ONLY, FULL_STATE, ControllerGains
from .engine import SimConfig
from .errors import ConfigInvalid, UnknownPreset
from .graph import Topology, TopologySchedule, ring_topology
from .observer import ObserverGains
from .rigid_body import BodyParams, LeaderProfile

PRESET_NAMES = ("A", "B", "C")

SWITCH_PERIOD = 0.2  # s, scenario C

_Q_INIT_NOMINAL = [
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.6164, 0.5, -0.6, 0.1],
    [-0.8426, -0.2, 0.3, 0.4],
]
_W_INIT_NOMINAL = [
    [0.2, 0.2, 0.2],
    [-0.1, -0.1, -0.1],
    [0.4, 0.4, 0.4],
    [-0.3, -0.3, 0.3],
]
_Q_INIT_PERTURBED = [
    [0.3162, 0.1, -0.8, 0.5],
    [-0.1732, -0.5, 0.6, -0.6],
    [0.7416, 0.5, -0.2, -0.4],
    [-0.6557, 0.5, -0.4, 0.4],
]
_W_INIT_PERTURBED = [
    [0.2, -0.1, 0.4],
    [-0.5, 0.6, -0.6],
    [-0.5, 0.4, -0.2],
    [-0.1, -0.6, 0.1],
]


def nominal_topology() -> Topology:
    """Fixed-campaign communication graph.

    Followers sit on a unit-weight ring (so the graph contains a cycle,
    which the consensus scheme must tolerate) and followers 1-3 hold a
    direct leader link; follower 4 sees the leader only through the
    graph.  Dense enough leader access for the observer to settle inside
    the nominal-campaign window while keeping leader access partial.
    """
    return ring_topology(4, leader_links=(0, 1, 2))


def controller_defaults(mode: str) -> ControllerGains:
    """Stock controller gains for either measurement mode."""
    if mode == FULL_STATE:
        return ControllerGains(kp=4.0, kd=8.0, alpha_p=0.6, alpha_d=0.75,
                               delta=0.2, mode=FULL_STATE)
    if mode == ATTITUDE_ONLY:
        return ControllerGains(kp=4.0, kd=10.0, kq=3.0, alpha_p=0.6, alpha_d=0.75,
                               alpha_q=0.8, delta=0.2, mode=ATTITUDE_ONLY)
    raise ConfigInvalid(f"unknown controller mode {mode!r}")


def switching_schedule() -> TopologySchedule:
    """Scenario-C topology pair: individually unrooted, jointly connected."""
    n = 4
    a1 = np.zeros((n, n))
    a1[0, 1] = a1[1, 0] = 1.0  # followers 1-2
    a1[2, 3] = a1[3, 2] = 1.0  # followers 3-4
    g1 = Topology(adjacency=a1, leader_access=np.array([1.0, 0.0, 0.0, 0.0]))
    a2 = np.zeros((n, n))
    a2[1, 2] = a2[2, 1] = 1.0  # followers 2-3
    a2[3, 0] = a2[0, 3] = 1.0  # followers 4-1
    g2 = Topology(adjacency=a2, leader_access=np.array([0.0, 0.0, 1.0, 0.0]))
    return TopologySchedule(
        intervals=((0.0, g1), (0.5 * SWITCH_PERIOD, g2)), period=SWITCH_PERIOD
    )


def preset(name: str, mode: str = FULL_STATE) -> SimConfig:
    """Fully-populated configuration for one of the named campaigns."""
    if name not in PRESET_NAMES:
        raise UnknownPreset(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    common = dict(
        observer_gains=ObserverGains(),
        controller_gains=controller_defaults(mode),
        leader=LeaderProfile(),
        body=BodyParams(inertia=np.diag([10.0, 8.0, 12.0])),
        dt=1e-3,
        duration=60.0,
        comm_hz=100.0,
        decimate=10,
    )
    if name == "A":
        cfg = SimConfig(
            scenario="A",
            topology=nominal_topology(),
            q_init=np.array(_Q_INIT_NOMINAL),
            omega_init=np.array(_W_INIT_NOMINAL),
            **common,
        )
    elif name == "B":
        cfg = SimConfig(
            scenario="B",
            topology=nominal_topology(),
            q_init=np.array(_Q_INIT_PERTURBED),
            omega_init=np.array(_W_INIT_PERTURBED),
            meas_delay=0.01,
            comm_delay=0.01,
            disturbance_enabled=True,
            **common,
        )
    else:
        cfg = SimConfig(
            scenario="C",
            schedule=switching_schedule(),
            q_init=np.array(_Q_INIT_PERTURBED),
            omega_init=np.array(_W_INIT_PERTURBED),
            **common,
        )
    return cfg.validate()


# --- serialization ---------------------------------------------------------

_SCENARIO_KEYS = {
    "id", "mode", "dt", "duration", "comm_hz", "meas_delay", "comm_delay",
    "decimate", "seed", "omega_ceiling", "torque_enabled", "require_leader_rooted",
}
_TOP_KEYS = {
    "scenario", "leader", "body", "topology", "schedule", "observer",
    "controller", "initial", "disturbance",
}
_LEADER_KEYS = {"amplitude", "rate", "q0"}
_BODY_KEYS = {"inertia"}
_TOPOLOGY_KEYS = {"adjacency", "leader_access"}
_SCHEDULE_KEYS = {"period", "intervals"}
_INTERVAL_KEYS = {"start", "adjacency", "leader_access"}
_OBSERVER_KEYS = {"lambda1", "lambda2", "lambda3", "beta1", "beta2", "mu1", "mu2", "boundary_layer"}
_CONTROLLER_KEYS = {"kp", "kd", "kq", "alpha_p", "alpha_d", "alpha_q", "delta"}
_INITIAL_KEYS = {"attitudes", "rates", "p", "v", "z", "y", "w", "qbar", "h", "htilde"}
_DISTURBANCE_KEYS = {"enabled", "amplitude"}


def _check_keys(table: dict, allowed: set, where: str):
    unknown = set(table) - allowed
    if unknown:
        raise ConfigInvalid(f"unknown key(s) in {where}: {sorted(unknown)}")


def config_to_dict(cfg: SimConfig) -> dict:
    """Plain-data view of a configuration, suitable for JSON."""
    doc = {
        "scenario": {
            "id": cfg.scenario,
            "mode": cfg.controller_gains.mode,
            "dt": cfg.dt,
            "duration": cfg.duration,
            "comm_hz": cfg.comm_hz,
            "meas_delay": cfg.meas_delay,
            "comm_delay": cfg.comm_delay,
            "decimate": cfg.decimate,
            "seed": cfg.seed,
            "omega_ceiling": cfg.omega_ceiling,
            "torque_enabled": cfg.torque_enabled,
            "require_leader_rooted": cfg.require_leader_rooted,
        },
        "leader": {
            "amplitude": cfg.leader.amplitude,
            "rate": cfg.leader.rate,
            "q0": cfg.leader.q0.tolist(),
        },
        "body": {"inertia": cfg.body.inertia.tolist()},
        "observer": {
            "lambda1": cfg.observer_gains.lambda1,
            "lambda2": cfg.observer_gains.lambda2,
            "lambda3": cfg.observer_gains.lambda3,
            "beta1": cfg.observer_gains.beta1,
            "beta2": cfg.observer_gains.beta2,
            "mu1": cfg.observer_gains.mu1,
            "mu2": cfg.observer_gains.mu2,
            "boundary_layer": cfg.observer_gains.boundary_layer,
        },
        "controller": {
            "kp": cfg.controller_gains.kp,
            "kd": cfg.controller_gains.kd,
            "kq": cfg.controller_gains.kq,
            "alpha_p": cfg.controller_gains.alpha_p,
            "alpha_d": cfg.controller_gains.alpha_d,
            "alpha_q": cfg.controller_gains.alpha_q,
            "delta": cfg.controller_gains.delta,
        },
        "initial": {
            "attitudes": cfg.q_init.tolist(),
            "rates": cfg.omega_init.tolist(),
            "p": cfg.p_init.tolist(),
            "v": cfg.v_init.tolist(),
            "z": cfg.z_init.tolist(),
            "y": cfg.y_init.tolist(),
            "w": cfg.w_init.tolist(),
            "qbar": cfg.qbar_init.tolist(),
            "h": cfg.h_init.tolist(),
            "htilde": cfg.htilde_init.tolist(),
        },
        "disturbance": {
            "enabled": cfg.disturbance_enabled,
            "amplitude": cfg.disturbance_amplitude,
        },
    }
    if cfg.topology is not None:
        doc["topology"] = {
            "adjacency": cfg.topology.adjacency.tolist(),
            "leader_access": cfg.topology.leader_access.tolist(),
        }
    else:
        doc["schedule"] = {
            "period": cfg.schedule.period,
            "intervals": [
                {
                    "start": start,
                    "adjacency": topo.adjacency.tolist(),
                    "leader_access": topo.leader_access.tolist(),
                }
                for start, topo in cfg.schedule.intervals
            ],
        }
    return doc


def config_from_dict(doc: dict) -> SimConfig:
    """Parse and validate a configuration document; rejects unknown keys."""
    if not isinstance(doc, dict):
        raise ConfigInvalid("configuration document must be a table")
    _check_keys(doc, _TOP_KEYS, "document root")
    for key in ("scenario", "leader", "body", "observer", "controller", "initial"):
        if key not in doc:
            raise ConfigInvalid(f"missing required section [{key}]")

    sc = doc["scenario"]
    _check_keys(sc, _SCENARIO_KEYS, "[scenario]")
    ld = doc["leader"]
    _check_keys(ld, _LEADER_KEYS, "[leader]")
    _check_keys(doc["body"], _BODY_KEYS, "[body]")
    ob = doc["observer"]
    _check_keys(ob, _OBSERVER_KEYS, "[observer]")
    ct = doc["controller"]
    _check_keys(ct, _CONTROLLER_KEYS, "[controller]")
    ini = doc["initial"]
    _check_keys(ini, _INITIAL_KEYS, "[initial]")
    dist = doc.get("disturbance", {})
    _check_keys(dist, _DISTURBANCE_KEYS, "[disturbance]")

    if ("topology" in doc) == ("schedule" in doc):
        raise ConfigInvalid("exactly one of [topology] or [schedule] must be present")
    topology = None
    schedule = None
    if "topology" in doc:
        tp = doc["topology"]
        _check_keys(tp, _TOPOLOGY_KEYS, "[topology]")
        topology = Topology(
            adjacency=np.array(tp["adjacency"], dtype=float),
            leader_access=np.array(tp["leader_access"], dtype=float),
        )
    else:
        sch = doc["schedule"]
        _check_keys(sch, _SCHEDULE_KEYS, "[schedule]")
        intervals = []
        for iv in sch["intervals"]:
            _check_keys(iv, _INTERVAL_KEYS, "[schedule] interval")
            intervals.append(
                (
                    float(iv["start"]),
                    Topology(
                        adjacency=np.array(iv["adjacency"], dtype=float),
                        leader_access=np.array(iv["leader_access"], dtype=float),
                    ),
                )
            )
        schedule = TopologySchedule(intervals=tuple(intervals), period=sch.get("period"))

    mode = sc.get("mode", FULL_STATE)
    gains = ControllerGains(
        kp=float(ct["kp"]), kd=float(ct["kd"]), kq=float(ct.get("kq", 3.0)),
        alpha_p=float(ct["alpha_p"]), alpha_d=float(ct["alpha_d"]),
        alpha_q=float(ct.get("alpha_q", 0.8)), delta=float(ct["delta"]), mode=mode,
    )

    def _arr(key):
        return None if key not in ini else np.array(ini[key], dtype=float)

    cfg = SimConfig(
        scenario=str(sc.get("id", "custom")),
        topology=topology,
        schedule=schedule,
        q_init=np.array(ini["attitudes"], dtype=float),
        omega_init=np.array(ini["rates"], dtype=float),
        observer_gains=ObserverGains(
            lambda1=float(ob["lambda1"]), lambda2=float(ob["lambda2"]),
            lambda3=float(ob["lambda3"]), beta1=float(ob["beta1"]),
            beta2=float(ob["beta2"]), mu1=float(ob["mu1"]), mu2=float(ob["mu2"]),
            boundary_layer=float(ob.get("boundary_layer", 0.0)),
        ),
        controller_gains=gains,
        leader=LeaderProfile(
            amplitude=float(ld["amplitude"]), rate=float(ld["rate"]),
            q0=np.array(ld.get("q0", [1.0, 0.0, 0.0, 0.0]), dtype=float),
        ),
        body=BodyParams(inertia=np.array(doc["body"]["inertia"], dtype=float)),
        dt=float(sc.get("dt", 1e-3)),
        duration=float(sc.get("duration", 60.0)),
        comm_hz=float(sc.get("comm_hz", 100.0)),
        meas_delay=float(sc.get("meas_delay", 0.0)),
        comm_delay=float(sc.get("comm_delay", 0.0)),
        decimate=int(sc.get("decimate", 10)),
        seed=int(sc.get("seed", 0)),
        omega_ceiling=float(sc.get("omega_ceiling", 50.0)),
        torque_enabled=bool(sc.get("torque_enabled", True)),
        require_leader_rooted=bool(sc.get("require_leader_rooted", True)),
        disturbance_enabled=bool(dist.get("enabled", False)),
        disturbance_amplitude=float(dist.get("amplitude", 0.02)),
        p_init=_arr("p"),
        v_init=_arr("v"),
        z_init=_arr("z"),
        y_init=_arr("y"),
        w_init=_arr("w"),
        qbar_init=_arr("qbar"),
        h_init=_arr("h"),
        htilde_init=_arr("htilde"),
    )
    return cfg.validate()


def save_config(cfg: SimConfig, path) -> None:
    """Write a configuration as formatted JSON."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config_to_dict(cfg), f, indent=2)
        f.write("\n")


def load_config(path) -> SimConfig:
    """Read and validate a configuration file."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"malformed configuration file {path}: {exc}") from exc
    return config_from_dict(doc)
