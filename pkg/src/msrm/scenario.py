"""Simulation scenarios: configuration, JSON I/O and the external-force
schedule."""
import json
from dataclasses import asdict, dataclass, field, replace
from importlib import resources

import jsonschema
import numpy as np

from .errors import ConfigError
from .estimator import check_gain
from .impedance import DEFAULT_RIDGE

SCHEMA_VERSION = 1
CONTROLLERS = ("ABSM", "SM", "PD", "none")
IMPEDANCE_MODES = ("variable", "invariable", "off")


@dataclass(frozen=True)
class Pulse:
    """Wrench ``[Fx, Fy, Fz, Mx, My, Mz]`` (N, N m) on the tip, active on
    ``start <= t < end``.

    With ``ramp > 0`` the pulse is trapezoidal: the wrench rises linearly
    over ``ramp`` seconds after ``start`` and falls over the last ``ramp``
    seconds before ``end``.
    """

    start: float
    end: float
    wrench: tuple
    ramp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "wrench", tuple(float(v) for v in self.wrench))
        if len(self.wrench) != 6:
            raise ConfigError("a pulse wrench has six components")
        if not 0 <= self.start < self.end:
            raise ConfigError(f"pulse needs 0 <= start < end, got [{self.start}, {self.end}]")
        if not 0 <= 2 * self.ramp <= self.end - self.start:
            raise ConfigError("pulse ramp must be >= 0 and fit twice inside the pulse")

    def level(self, t):
        """Envelope in [0, 1] at time ``t``."""
        if not self.start <= t < self.end:
            return 0.0
        if self.ramp == 0:
            return 1.0
        return min(1.0, (t - self.start) / self.ramp, (self.end - t) / self.ramp)


# Three pulses inside [2, 8] s. At the straight pose a tip moment of 0.8 N m
# about y maps to 0.12 on both curvature coordinates; the last pulse mixes
# a lateral force with a smaller moment. The 0.25 s edges keep the load
# rate within what the residual (bandwidth K_I) can follow.
DEFAULT_RAMP = 0.25
DEFAULT_SCHEDULE = (
    Pulse(2.0, 3.0, (0.0, 0.0, 0.0, 0.0, -0.8, 0.0), DEFAULT_RAMP),
    Pulse(4.0, 5.5, (0.0, 0.0, 0.0, 0.0, 0.8, 0.0), DEFAULT_RAMP),
    Pulse(6.5, 7.5, (-1.0, 0.0, 0.0, 0.0, -0.6, 0.0), DEFAULT_RAMP),
)


def force_at(schedule, t):
    """Sum of the wrenches of all pulses active at ``t``."""
    F = np.zeros(6)
    for p in schedule:
        if p.start <= t < p.end:
            F += p.level(t) * np.array(p.wrench)
    return F


def force_active(schedule, t):
    return any(p.start <= t < p.end for p in schedule)


@dataclass(frozen=True)
class Scenario:
    name: str = "default"
    duration: float = 10.0
    dt: float = 1e-3
    controller: str = "ABSM"
    impedance: str = "variable"
    # rate constant of the variable profile; None -> certified by select_alpha
    alpha: float = None
    uncertainty: float = 0.0
    omega0: tuple = (0.02, -0.01, 0.01, -0.03)
    omega_dot0: tuple = (0.0, 0.0, 0.0, 0.0)
    omega_d: tuple = (0.0, 0.0, 0.0, 0.0)
    # std of Gaussian noise added to omega0, drawn with `seed`
    initial_noise: float = 0.0
    force_schedule: tuple = DEFAULT_SCHEDULE
    ki: float = 100.0
    feed_ground_truth_load: bool = False
    estimator_true_model: bool = False
    # "scaled": Gamma = eta M(omega_d) M(omega_d)^T; "literal": Gamma = eta I
    adaptation: str = "scaled"
    ridge: float = DEFAULT_RIDGE
    seed: int = 0
    output_dir: str = "results"
    record_every: int = 1

    def __post_init__(self):
        for key in ("omega0", "omega_dot0", "omega_d"):
            v = tuple(float(x) for x in getattr(self, key))
            if len(v) != 4:
                raise ConfigError(f"{key} needs four entries")
            object.__setattr__(self, key, v)
        sched = tuple(p if isinstance(p, Pulse) else Pulse(**p) for p in self.force_schedule)
        object.__setattr__(self, "force_schedule", sched)
        if self.dt <= 0 or self.duration < self.dt:
            raise ConfigError(f"need dt > 0 and duration >= dt, got dt={self.dt}, "
                              f"duration={self.duration}")
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}")
        if self.impedance not in IMPEDANCE_MODES:
            raise ConfigError(f"impedance must be one of {IMPEDANCE_MODES}")
        if self.adaptation not in ("scaled", "literal"):
            raise ConfigError("adaptation must be 'scaled' or 'literal'")
        if not 0 <= self.uncertainty < 1:
            raise ConfigError("uncertainty fraction must lie in [0, 1)")
        if any(p.end > self.duration + 1e-12 for p in sched):
            raise ConfigError("force pulses must lie within [0, duration]")
        if self.ki <= 0:
            raise ConfigError("estimator gain must be positive")
        check_gain(self.ki, self.dt)
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    def initial_configuration(self):
        omega0 = np.array(self.omega0)
        if self.initial_noise > 0:
            rng = np.random.default_rng(self.seed)
            omega0 = omega0 + rng.normal(scale=self.initial_noise, size=4)
        return omega0

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = asdict(self)
        d["force_schedule"] = [asdict(p) for p in self.force_schedule]
        for p in d["force_schedule"]:
            p["wrench"] = list(p["wrench"])
        for key in ("omega0", "omega_dot0", "omega_d"):
            d[key] = list(d[key])
        d["schema_version"] = SCHEMA_VERSION
        return d


def _load_schema(name):
    return json.loads(resources.files("msrm").joinpath(name).read_text())


def validate(document, schema="scenario.json"):
    try:
        jsonschema.validate(document, _load_schema(schema))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def scenario_from_dict(d):
    validate(d)
    d = dict(d)
    d.pop("schema_version")
    if d.get("force_schedule") == "default":
        d.pop("force_schedule")
    try:
        return Scenario(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path):
    try:
        with open(path) as fh:
            document = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return scenario_from_dict(document)


def save_scenario(scenario, path):
    with open(path, "w") as fh:
        json.dump(scenario.to_dict(), fh, indent=2)
        fh.write("\n")
