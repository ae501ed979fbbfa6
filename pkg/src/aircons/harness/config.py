"""
Simulation configuration: a flat ``key = value`` text format.

Units are SI throughout (seconds, meters, Hz, watts) except ``power_dbm``
(dBm) and ``noise_density`` (dBm/Hz). Lines starting with ``#`` and blank
lines are ignored; unknown keys are rejected.

``neighbors`` overrides the default window topology, e.g.
``neighbors = 1:2,3; 2:1,3,4``. ``initial_offsets`` displaces followers
backwards from their formation slot, e.g. ``initial_offsets = 0.5,0,-0.2``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from aircons.channel import FadingConfig, dbm_to_watts, noise_power
from aircons.consensus import PATTERN_MODES
from aircons.errors import ConfigError
from aircons.platoon import LEADER_PROFILES, ControllerParams, predecessor_neighbors, window_neighbors

CONTROLLER_KINDS = ("aircons", "benchmark")
_GRID_TOL = 1e-9


@dataclass(frozen=True)
class SimConfig:
    n_followers: int = 10
    power_dbm: float = 23.0
    bandwidth: float = 20e6
    noise_density: float = -174.0
    pathloss_exp: float = 4.0
    target_gap: float = 5.0
    broadcast_interval: float = 0.01
    radar_interval: float = 0.01
    consensus_rounds: int = 6
    round_spacing: float = 915e-6
    rho: float = 0.9
    sigma: float = 1.0
    margin: float = 5.0
    duration: float = 30.0
    dt: float = 1e-3
    seed: int = 0
    pattern_mode: str = "exact"
    stiffness: float = 0.1
    damping: float = 60.0
    radar_stiffness: float = 0.5
    radar_damping: float = 1.0
    accel_cap: float = 10.0
    neighbor_window: int = 2
    neighbors: str = ""
    leader_profile: str = "turbulence"
    transient: float = 10.0
    stability_tol: float = 0.05
    subcarrier_spacing: float = 60e3
    symbol_duration: float = 16.7e-6
    carrier_freq: float = 5.9e9
    reciprocal: bool = False
    initial_offsets: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "initial_offsets", tuple(float(v) for v in self.initial_offsets))
        checks = [
            ("n_followers", self.n_followers >= 1, "must be >= 1"),
            ("rho", 0 < self.rho < 1, "must lie in (0, 1)"),
            ("sigma", 0 < self.sigma <= 1, "must lie in (0, 1]"),
            ("bandwidth", self.bandwidth > 0, "must be > 0"),
            ("pathloss_exp", self.pathloss_exp > 0, "must be > 0"),
            ("target_gap", self.target_gap > 0, "must be > 0"),
            ("consensus_rounds", self.consensus_rounds >= 1, "must be >= 1"),
            ("round_spacing", self.round_spacing > 0, "must be > 0"),
            ("margin", self.margin >= 0, "must be >= 0"),
            ("dt", self.dt > 0, "must be > 0"),
            ("duration", self.duration > self.dt, "must exceed dt"),
            ("pattern_mode", self.pattern_mode in PATTERN_MODES, f"must be one of {PATTERN_MODES}"),
            ("leader_profile", self.leader_profile in LEADER_PROFILES, f"must be one of {tuple(LEADER_PROFILES)}"),
            ("neighbor_window", self.neighbor_window >= 1, "must be >= 1"),
            ("stiffness", self.stiffness > 0, "must be > 0"),
            ("damping", self.damping > 0, "must be > 0"),
            ("radar_stiffness", self.radar_stiffness >= 0, "must be >= 0"),
            ("radar_damping", self.radar_damping >= 0, "must be >= 0"),
            ("accel_cap", self.accel_cap > 0, "must be > 0"),
            ("transient", self.transient >= 0, "must be >= 0"),
            ("stability_tol", self.stability_tol >= 0, "must be >= 0"),
        ]
        for name, ok, why in checks:
            if not ok:
                raise ConfigError(f"{why}, got {getattr(self, name)!r}", field=name)
        for name in ("broadcast_interval", "radar_interval"):
            ratio = getattr(self, name) / self.dt
            if ratio < 1 - _GRID_TOL or abs(ratio - round(ratio)) > _GRID_TOL * max(1.0, ratio):
                raise ConfigError(f"must be a positive multiple of dt={self.dt}", field=name)
        if len(self.initial_offsets) > self.n_followers:
            raise ConfigError("more offsets than followers", field="initial_offsets")
        try:
            self.fading_config()
        except ValueError as exc:
            raise ConfigError(str(exc), field="symbol_duration") from None
        self.neighbor_sets("aircons")

    # derived quantities

    @property
    def power_watts(self) -> float:
        return dbm_to_watts(self.power_dbm)

    @property
    def norm_len(self) -> float:
        return self.n_followers * self.target_gap + self.margin

    @property
    def consensus_latency(self) -> float:
        return self.consensus_rounds * self.round_spacing

    @property
    def subcarrier_count(self) -> int:
        return int(math.floor(self.bandwidth / self.subcarrier_spacing + 1e-9))

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.dt))

    def ticks(self, interval: float) -> int:
        return int(round(interval / self.dt))

    def fading_config(self) -> FadingConfig:
        return FadingConfig(
            pathloss_exp=self.pathloss_exp,
            noise_density=self.noise_density,
            subcarrier_spacing=self.subcarrier_spacing,
            symbol_duration=self.symbol_duration,
            carrier_freq=self.carrier_freq,
            reciprocal=self.reciprocal,
        )

    @property
    def noise_power(self) -> float:
        return noise_power(self.fading_config())

    def neighbor_sets(self, kind: str) -> dict:
        if kind == "benchmark":
            return predecessor_neighbors(self.n_followers)
        if kind != "aircons":
            raise ConfigError(f"unknown controller kind {kind!r}", field="controller")
        if not self.neighbors.strip():
            return window_neighbors(self.n_followers, self.neighbor_window)
        sets = window_neighbors(self.n_followers, self.neighbor_window)
        try:
            for entry in self.neighbors.split(";"):
                if not entry.strip():
                    continue
                owner, members = entry.split(":")
                owner = int(owner)
                ms = tuple(int(m) for m in members.split(",") if m.strip())
                if not 1 <= owner <= self.n_followers or any(not 1 <= m <= self.n_followers for m in ms):
                    raise ValueError(f"index out of range in {entry.strip()!r}")
                if owner in ms or not ms:
                    raise ValueError(f"bad neighbor set {entry.strip()!r}")
                sets[owner] = ms
        except ValueError as exc:
            raise ConfigError(str(exc), field="neighbors") from None
        return sets

    def controller_params(self, kind: str) -> ControllerParams:
        return ControllerParams(
            stiffness=self.stiffness,
            damping=self.damping,
            radar_stiffness=self.radar_stiffness,
            radar_damping=self.radar_damping,
            target_gap=self.target_gap,
            neighbor_sets=self.neighbor_sets(kind),
            accel_cap=self.accel_cap,
        )

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in fields(SimConfig)}


def _field_type(name):
    return type(_FIELDS[name].default)


def _convert(name: str, text: str, line=None):
    kind = _field_type(name)
    try:
        if kind is bool:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is tuple:
            return tuple(float(v) for v in text.split(",") if v.strip())
        return text
    except ValueError as exc:
        raise ConfigError(str(exc), line=line, field=name) from None


def parse_config(text: str) -> SimConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError("unknown key", line=lineno, field=key)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, field=key)
        values[key] = _convert(key, value, lineno)
    try:
        return SimConfig(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(source=None) -> SimConfig:
    """Load from a path, a literal config text, a mapping, or ``None`` (defaults)."""
    if source is None:
        return SimConfig()
    if isinstance(source, SimConfig):
        return source
    if isinstance(source, dict):
        return parse_config("\n".join(f"{k} = {_format(v)}" for k, v in source.items()))
    if isinstance(source, Path) or ("\n" not in str(source) and "=" not in str(source)):
        return parse_config(Path(source).read_text())
    return parse_config(str(source))


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def dump_config(cfg: SimConfig) -> str:
    """Canonical text form: every field, declaration order."""
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n" for f in fields(SimConfig))
