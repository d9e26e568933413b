"""Strict YAML scenario configuration.

Physical parameters (bath and drive) have no defaults.  Discretization and
tolerance knobs do.  Unknown keys anywhere are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .bath import BathSpec
from .errors import ConfigError, DimensionCapError
from .modulation import DriveSpec

SWEEP_VARIABLES = ("Omega", "t_cycle", "T")
MARKOVIAN_MODES = ("golden_rule", "campaign")
_REQUIRED = object()


def _number(path, v, *, positive=False, nonneg=False, allow_inf=False):
    if isinstance(v, str) and allow_inf and v.strip().lower() in ("inf", "infinity", ".inf"):
        v = math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    v = float(v)
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ConfigError(f"{path}: must be finite, got {v}")
    if positive and not v > 0:
        raise ConfigError(f"{path}: must be > 0, got {v}")
    if nonneg and not v >= 0:
        raise ConfigError(f"{path}: must be >= 0, got {v}")
    return v


def _int(path, v, *, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {v}")
    return v


def _bool(path, v):
    if not isinstance(v, bool):
        raise ConfigError(f"{path}: expected true/false, got {v!r}")
    return v


def _section(data, path, schema):
    """Validate a mapping against ``{key: (parser, default)}``; _REQUIRED marks mandatory keys."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(map(str, unknown))}")
    out = {}
    for key, (parse, default) in schema.items():
        p = f"{path}.{key}"
        if key in data and data[key] is not None:
            out[key] = parse(p, data[key])
        elif default is _REQUIRED:
            raise ConfigError(f"{p}: required")
        else:
            out[key] = default
    return out


def _opt(parser):
    return lambda p, v: None if v is None else parser(p, v)


_pos = lambda p, v: _number(p, v, positive=True)
_nonneg = lambda p, v: _number(p, v, nonneg=True)
_real = lambda p, v: _number(p, v)


@dataclass(frozen=True)
class KernelSettings:
    n_periods: int = 1
    points_per_period: int = 2000
    max_dt: float | None = 0.05
    span: float = 40.0
    ir_cutoff: float | None = None
    epsabs: float = 1e-9
    s0: float | None = None
    expansion: bool = False


@dataclass(frozen=True)
class PulseSettings:
    t_m: float
    tau_m: float
    half_window: float = 13.0


@dataclass(frozen=True)
class ExactSettings:
    n_modes: int = 5
    fock_cutoff: int = 2
    max_excitations: int | None = None
    span: float = 4.0
    dt_max: float = 0.05
    step_tol: float = 1e-8
    n_periods: float = 1.0
    include_probe: bool = False
    probe_d: float = 0.0
    probe_freq: float | None = None
    probe_bath_coupling: float = 0.0
    pulse: PulseSettings | None = None
    pulse_tol: float = 1e-10
    reuse_after: float | None = None
    convergence: bool = True
    dim_cap: int = 4096


@dataclass(frozen=True)
class SweepSettings:
    variable: str
    start: float
    stop: float
    points: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class MarkovianSettings:
    mode: str = "golden_rule"
    n_trajectories: int = 100


@dataclass(frozen=True)
class ScenarioConfig:
    bath: BathSpec
    drive: DriveSpec
    kernels: KernelSettings = field(default_factory=KernelSettings)
    exact: ExactSettings = field(default_factory=ExactSettings)
    sweep: SweepSettings | None = None
    markovian: MarkovianSettings = field(default_factory=MarkovianSettings)
    seed: int = 0


def _parse_pulse(path, v):
    d = _section(v, path, {"t_m": (_real, _REQUIRED), "tau_m": (_pos, _REQUIRED), "half_window": (_pos, 13.0)})
    return PulseSettings(**d)


def _choice(options):
    def parse(p, v):
        if v not in options:
            raise ConfigError(f"{p}: must be one of {', '.join(options)}, got {v!r}")
        return v
    return parse


def parse_config(data) -> ScenarioConfig:
    """Validate a decoded config mapping; raises ConfigError on any problem."""
    top = _section(data, "config", {
        "bath": (lambda p, v: v, _REQUIRED), "drive": (lambda p, v: v, _REQUIRED),
        "kernels": (lambda p, v: v, None), "exact": (lambda p, v: v, None),
        "sweep": (lambda p, v: v, None), "markovian": (lambda p, v: v, None),
        "tolerances": (lambda p, v: v, None), "seed": (lambda p, v: _int(p, v, minimum=0), 0),
    })
    b = _section(top["bath"], "bath", {
        "eta": (_nonneg, _REQUIRED), "omega0": (_pos, _REQUIRED), "tc": (_pos, _REQUIRED),
        "beta": (lambda p, v: _number(p, v, positive=True, allow_inf=True), _REQUIRED),
    })
    d = _section(top["drive"], "drive", {
        "omega_a": (_pos, _REQUIRED), "delta": (_real, _REQUIRED), "Omega": (_pos, _REQUIRED), "t_start": (_real, 0.0),
    })
    k = _section(top["kernels"], "kernels", {
        "n_periods": (lambda p, v: _int(p, v, minimum=1), 1),
        "points_per_period": (lambda p, v: _int(p, v, minimum=8), 2000),
        "max_dt": (_opt(_pos), 0.05), "span": (_pos, 40.0), "ir_cutoff": (_opt(_pos), None),
        "s0": (_opt(_real), None), "expansion": (_bool, False),
    })
    e = _section(top["exact"], "exact", {
        "n_modes": (lambda p, v: _int(p, v, minimum=1), 5), "fock_cutoff": (lambda p, v: _int(p, v, minimum=1), 2),
        "max_excitations": (_opt(lambda p, v: _int(p, v, minimum=1)), None), "span": (_pos, 4.0),
        "dt_max": (_pos, 0.05), "n_periods": (_pos, 1.0), "include_probe": (_bool, False),
        "probe_d": (_real, 0.0), "probe_freq": (_opt(_pos), None), "probe_bath_coupling": (_real, 0.0),
        "pulse": (_opt(_parse_pulse), None), "reuse_after": (_opt(_pos), None),
        "convergence": (_bool, True), "dim_cap": (lambda p, v: _int(p, v, minimum=4), 4096),
    })
    tol = _section(top["tolerances"], "tolerances", {
        "epsabs": (_pos, 1e-9), "step_tol": (_pos, 1e-8), "pulse_tol": (_pos, 1e-10),
    })
    mk = _section(top["markovian"], "markovian", {
        "mode": (_choice(MARKOVIAN_MODES), "golden_rule"),
        "n_trajectories": (lambda p, v: _int(p, v, minimum=1), 100),
    })
    sweep = None
    if top["sweep"] is not None:
        s = _section(top["sweep"], "sweep", {
            "variable": (_choice(SWEEP_VARIABLES), _REQUIRED), "start": (_real, _REQUIRED),
            "stop": (_real, _REQUIRED), "points": (lambda p, v: _int(p, v, minimum=0), _REQUIRED),
        })
        sweep = SweepSettings(**s)
        vals = sweep.values()
        if sweep.variable in ("Omega", "t_cycle") and np.any(vals <= 0):
            raise ConfigError(f"sweep: {sweep.variable} values must be > 0")
        if sweep.variable == "T" and np.any(vals < 0):
            raise ConfigError("sweep: T values must be >= 0")

    if not -1.0 <= e["probe_d"] <= 1.0:
        raise ConfigError("exact.probe_d: must lie in [-1, 1]")
    if k["s0"] is not None and not -0.5 <= k["s0"] <= 0.5:
        raise ConfigError("kernels.s0: must lie in [-1/2, 1/2]")
    if e["pulse"] is not None and not e["include_probe"]:
        raise ConfigError("exact.pulse: needs include_probe: true")
    if e["include_probe"] and e["pulse"] is None:
        raise ConfigError("exact.include_probe: needs a pulse section")
    if e["probe_bath_coupling"] and not e["include_probe"]:
        raise ConfigError("exact.probe_bath_coupling: needs include_probe: true")
    pulse = e.pop("pulse")
    try:
        bath = BathSpec(**b)
        drive = DriveSpec(**d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if k["max_dt"] is not None and k["max_dt"] <= 0:
        raise ConfigError("kernels.max_dt: must be > 0")
    return ScenarioConfig(
        bath=bath, drive=drive,
        kernels=KernelSettings(epsabs=tol["epsabs"], **k),
        exact=ExactSettings(step_tol=tol["step_tol"], pulse_tol=tol["pulse_tol"],
                            pulse=pulse, **e),
        sweep=sweep, markovian=MarkovianSettings(**mk), seed=top["seed"],
    )


def recipe_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("qndwork.recipes").iterdir() if p.name.endswith(".yaml"))


def resolve_config_path(name_or_path: str):
    """A file path, or the name of a shipped recipe."""
    p = Path(name_or_path)
    if p.is_file():
        return p.read_text()
    if name_or_path in recipe_names():
        return resources.files("qndwork.recipes").joinpath(f"{name_or_path}.yaml").read_text()
    raise ConfigError(f"config {name_or_path!r} is neither a file nor a recipe ({', '.join(recipe_names())})")


def load_config(name_or_path: str) -> ScenarioConfig:
    text = resolve_config_path(name_or_path)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return parse_config(data)


def exact_model(cfg: ScenarioConfig, *, n_modes: int | None = None, with_probe: bool | None = None, bath=None, drive=None):
    """Build the configured SupersystemModel; raises ConfigError on dimension-cap refusal."""
    from .exactsim import Pulse, SupersystemModel

    e = cfg.exact
    probe = e.include_probe if with_probe is None else with_probe
    pulse = None
    if probe and e.pulse is not None:
        pulse = Pulse(e.pulse.t_m, e.pulse.tau_m, e.pulse.half_window)
    try:
        return SupersystemModel(
            drive or cfg.drive, bath or cfg.bath, n_modes or e.n_modes, e.fock_cutoff,
            include_probe=probe, probe_freq=e.probe_freq, pulse=pulse, span=e.span,
            max_excitations=e.max_excitations, dim_cap=e.dim_cap,
            probe_bath_coupling=e.probe_bath_coupling if probe else 0.0,
        )
    except DimensionCapError as exc:
        raise ConfigError(str(exc)) from None
