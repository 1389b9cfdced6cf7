"""Scenario configuration: nominal parameter set, the four scenario presets,
and the flat dotted-key config file format."""

from dataclasses import dataclass, field

import numpy as np

from .attitude import AttitudeGains
from .observer import ObserverGains
from .plant import ConfigurationError, DisturbanceSpec, PhysicalParams
from .position import PositionGains
from .sensing import GyroBias, InertialReferenceSet, NoiseSpec


def nominal_references():
    """Three weighted inertial references: vertical, the diagonal direction,
    and their normalized cross product."""
    r1 = np.array([0.0, 0.0, 1.0])
    r2 = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
    r3 = np.cross(r1, r2)
    r3 /= np.linalg.norm(r3)
    return InertialReferenceSet(np.array([r1, r2, r3]),
                                np.array([0.1, 0.1, 0.1]))


def nominal_params():
    return PhysicalParams(m=0.467,
                          inertia=np.diag([8.28e-3, 8.28e-3, 15.7e-3]),
                          g=9.81)


@dataclass
class TrajectorySpec:
    """Reference trajectory selector; the figure-eight track is the default.

    psi_d is held constant (psidot_d = 0); a time-varying yaw can be added
    through the custom kind without touching the controllers.
    """

    kind: str = "lemniscate"
    psi_d: float = np.pi / 4.0
    amplitude_x: float = 2.5
    amplitude_y: float = 3.0
    altitude: float = 3.0
    period: float = 60.0

    def __post_init__(self):
        if self.kind not in ("lemniscate", "hover"):
            raise ConfigurationError("unknown trajectory kind " + self.kind)
        if self.period <= 0:
            raise ConfigurationError("trajectory period must be positive")


@dataclass
class ScenarioConfig:
    """Everything one closed-loop run needs, validated on construction."""

    scenario: int = 1
    params: PhysicalParams = field(default_factory=nominal_params)
    inertia_scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    pos_gains: PositionGains = field(default_factory=PositionGains)
    att_gains: AttitudeGains = field(default_factory=AttitudeGains)
    obs_gains: ObserverGains = field(default_factory=ObserverGains)
    refs: InertialReferenceSet = field(default_factory=nominal_references)
    bias: GyroBias = field(
        default_factory=lambda: GyroBias(np.array([0.2, 0.1, -0.1])))
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    duration: float = 60.0
    dt: float = 1e-3
    velocity_free: bool = False
    eta_mass_factor: bool = False
    apparent_accel: bool = False
    engine: str = "numba"

    def __post_init__(self):
        self.inertia_scale = np.atleast_1d(
            np.asarray(self.inertia_scale, dtype=float))
        if self.inertia_scale.size == 1:
            self.inertia_scale = np.full(3, self.inertia_scale[0])
        if self.inertia_scale.shape != (3,) or np.any(self.inertia_scale <= 0):
            raise ConfigurationError("inertia_scale needs 3 positive factors")
        if self.scenario not in (1, 2, 3, 4):
            raise ConfigurationError("scenario must be 1..4")
        if self.duration <= 0:
            raise ConfigurationError("duration must be positive")
        if not 0 < self.dt <= 0.01:
            raise ConfigurationError("dt must lie in (0, 0.01]")
        if self.engine not in ("numba", "python"):
            raise ConfigurationError("engine must be 'numba' or 'python'")

    @property
    def controller_inertia(self):
        """Inertia matrix the controllers believe in (scaled per axis)."""
        return np.diag(self.inertia_scale) @ self.params.inertia

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))


SCENARIO_NOISE = NoiseSpec(sigma_x=0.05, sigma_v=0.05,
                           sigma_omega=0.1, sigma_vec=0.1)


def scenario_config(scenario, seed=0, **overrides):
    """Preset builder for the four nominal scenarios.

    1: noise free, exact parameters. 2: measurement noise on all channels.
    3: controller-side inertia mismatch (default factor 1.3 on every axis;
    pass inertia_scale=0.7 for the low side). 4: the first reference vector
    replaced by the apparent-acceleration direction.
    """
    kw = {"scenario": scenario}
    if scenario == 2:
        kw["noise"] = NoiseSpec(sigma_x=0.05, sigma_v=0.05, sigma_omega=0.1,
                                sigma_vec=0.1, seed=seed)
    elif scenario == 3:
        kw["inertia_scale"] = np.full(3, 1.3)
    elif scenario == 4:
        kw["apparent_accel"] = True
    elif scenario != 1:
        raise ConfigurationError("scenario must be 1..4")
    kw.update(overrides)
    if "noise" not in kw and seed:
        kw["noise"] = NoiseSpec(seed=seed)
    return ScenarioConfig(**kw)


def _parse_scalar(text):
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_value(text):
    text = text.strip()
    if ";" in text:
        return np.array([[float(x) for x in row.split(",")]
                         for row in text.split(";") if row.strip()])
    if "," in text:
        return np.array([float(x) for x in text.split(",")])
    return _parse_scalar(text)


def read_config_file(path):
    """Parse a flat ``section.key = value`` text file into a dict.

    Blank lines and ``#`` comments are ignored. Vector values are
    comma-separated, matrices (reference sets) semicolon-separated rows.
    """
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(
                    "%s:%d: expected 'key = value'" % (path, lineno))
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigurationError(
                    "%s:%d: empty key" % (path, lineno))
            if key in out:
                raise ConfigurationError(
                    "%s:%d: duplicate key %s" % (path, lineno, key))
            out[key] = _parse_value(value)
    return out


def _diag3(value, what):
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.size == 1:
        return float(v[0]) * np.eye(3)
    if v.shape == (3,):
        return np.diag(v)
    if v.shape == (3, 3):
        return v
    raise ConfigurationError(what + " must be a scalar, 3-vector or 3x3")


def _vec3(value, what):
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.shape != (3,):
        raise ConfigurationError(what + " must be a 3-vector")
    return v


def config_from_entries(entries, **cli_overrides):
    """Build a ScenarioConfig from a flat key dict plus CLI overrides.

    Unknown keys are rejected so typos fail loudly instead of silently
    running the nominal value.
    """
    e = dict(entries)

    def pop(key, default=None):
        return e.pop(key, default)

    scenario = int(pop("sim.scenario", cli_overrides.get("scenario", 1)))
    params = PhysicalParams(
        m=float(pop("physical.m", 0.467)),
        inertia=_diag3(pop("physical.inertia_diag",
                           [8.28e-3, 8.28e-3, 15.7e-3]), "physical inertia"),
        g=float(pop("physical.g", 9.81)))
    pos = PositionGains(
        k=float(pop("gains.position.k", 4.0)),
        k_x=float(pop("gains.position.k_x", 0.1)),
        K_f=_diag3(pop("gains.position.kf_diag", 1.0), "K_f"),
        mu_d=float(pop("gains.position.mu_d", 0.0)))
    att = AttitudeGains(
        K_c=_diag3(pop("gains.attitude.kc_diag", 1.0), "K_c"),
        lambda_c=float(pop("gains.attitude.lambda_c", 1.0)),
        alpha1=float(pop("gains.attitude.alpha1", 1.0)),
        alpha2=float(pop("gains.attitude.alpha2", 0.01)))
    obs = ObserverGains(
        Lambda=_diag3(pop("gains.observer.lambda_diag", 10.0), "Lambda"),
        gamma_f=float(pop("gains.observer.gamma_f", 1.0e4)))

    vecs = pop("refs.vectors")
    weights = pop("refs.weights")
    if vecs is None and weights is None:
        refs = nominal_references()
    else:
        if vecs is None or weights is None:
            raise ConfigurationError(
                "refs.vectors and refs.weights must be given together")
        vecs = np.atleast_1d(np.asarray(vecs, dtype=float))
        if vecs.ndim == 1:
            if vecs.size % 3:
                raise ConfigurationError(
                    "refs.vectors needs a multiple of 3 numbers")
            vecs = vecs.reshape(-1, 3)
        refs = InertialReferenceSet(vecs, np.atleast_1d(weights))

    bias = GyroBias(_vec3(pop("bias.b", [0.2, 0.1, -0.1]), "bias.b"),
                    mu_b=float(pop("bias.mu_b", 0.5)))

    defaults = SCENARIO_NOISE if scenario == 2 else NoiseSpec()
    noise = NoiseSpec(
        sigma_x=float(pop("noise.sigma_x", defaults.sigma_x)),
        sigma_v=float(pop("noise.sigma_v", defaults.sigma_v)),
        sigma_omega=float(pop("noise.sigma_omega", defaults.sigma_omega)),
        sigma_vec=float(pop("noise.sigma_vec", defaults.sigma_vec)),
        seed=int(cli_overrides.get("seed", pop("noise.seed", 0))))

    dist = DisturbanceSpec(
        force_amp=_vec3(pop("disturbance.force.amp", [0.0] * 3), "force amp"),
        force_freq=_vec3(pop("disturbance.force.freq", [0.0] * 3),
                         "force freq"),
        force_phase=_vec3(pop("disturbance.force.phase", [0.0] * 3),
                          "force phase"),
        torque_amp=_vec3(pop("disturbance.torque.amp", [0.0] * 3),
                         "torque amp"),
        torque_freq=_vec3(pop("disturbance.torque.freq", [0.0] * 3),
                          "torque freq"),
        torque_phase=_vec3(pop("disturbance.torque.phase", [0.0] * 3),
                           "torque phase"))

    traj = TrajectorySpec(
        kind=str(pop("trajectory.kind", "lemniscate")),
        psi_d=float(pop("trajectory.psi_d", np.pi / 4.0)),
        amplitude_x=float(pop("trajectory.amplitude_x", 2.5)),
        amplitude_y=float(pop("trajectory.amplitude_y", 3.0)),
        altitude=float(pop("trajectory.altitude", 3.0)),
        period=float(pop("trajectory.period", 60.0)))

    default_scale = 1.3 if scenario == 3 else 1.0
    scale = pop("controller.inertia_scale", default_scale)

    cfg = ScenarioConfig(
        scenario=scenario,
        params=params,
        inertia_scale=np.atleast_1d(np.asarray(scale, dtype=float)),
        pos_gains=pos, att_gains=att, obs_gains=obs,
        refs=refs, bias=bias, noise=noise, disturbance=dist,
        trajectory=traj,
        duration=float(cli_overrides.get(
            "duration", pop("sim.duration", 60.0))),
        dt=float(cli_overrides.get("dt", pop("sim.dt", 1e-3))),
        velocity_free=bool(cli_overrides.get(
            "velocity_free", pop("mode.velocity_free", False))),
        eta_mass_factor=bool(pop("mode.eta_mass_factor", False)),
        apparent_accel=bool(cli_overrides.get(
            "apparent_accel",
            pop("mode.apparent_accel", scenario == 4))),
        engine=str(pop("sim.engine", "numba")))
    if e:
        raise ConfigurationError(
            "unknown config keys: " + ", ".join(sorted(e)))
    return cfg


def load_config(path=None, **cli_overrides):
    entries = read_config_file(path) if path else {}
    return config_from_entries(entries, **cli_overrides)
