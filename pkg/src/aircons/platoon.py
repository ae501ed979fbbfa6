"""
Longitudinal platoon model: double-integrator AVs on a single lane, the
distributed spacing controller in its per-neighbor and averaged forms, a
RADAR gap term, the leader turbulence profile, and error metrics.

Indexing: AV 0 is the leader at the front, followers are 1..N and sit behind
it, so ``position[n] < position[n - 1]``. ``alpha[n]`` is the distance from
AV ``n`` to the leader and the formation target is ``alpha[n] == n * gap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from aircons.errors import CollisionError, DomainError


@dataclass
class VehicleState:
    position: float
    velocity: float = 0.0
    accel_cmd: float = 0.0


@dataclass(frozen=True)
class ControllerParams:
    """Gains and neighbor sets of the spacing controller.

    ``neighbor_sets[n]`` lists the AVs whose distances enter AV ``n``'s
    control. Index 0 (the leader, ``alpha == 0`` by definition) is allowed.
    """

    stiffness: float = 1.0
    damping: float = 2.0
    radar_stiffness: float = 0.5
    radar_damping: float = 1.0
    target_gap: float = 5.0
    neighbor_sets: Mapping[int, tuple] = field(default_factory=dict)
    accel_cap: float = 10.0

    def __post_init__(self):
        if not (self.stiffness > 0 and self.damping > 0 and self.target_gap > 0):
            raise DomainError("stiffness, damping and target_gap must be > 0")
        if self.radar_stiffness < 0 or self.radar_damping < 0:
            raise DomainError("radar gains must be >= 0")
        if not self.accel_cap > 0:
            raise DomainError("accel_cap must be > 0")
        sets = {int(n): tuple(int(m) for m in ms) for n, ms in self.neighbor_sets.items()}
        for n, ms in sets.items():
            if n in ms:
                raise DomainError(f"AV {n} cannot be its own neighbor")
            if any(m < 0 for m in ms):
                raise DomainError(f"negative AV index in neighbor set of AV {n}")
        object.__setattr__(self, "neighbor_sets", sets)

    def neighbors(self, n: int) -> tuple:
        ms = self.neighbor_sets.get(n, ())
        if not ms:
            raise DomainError(f"AV {n} has an empty neighbor set")
        return ms


def window_neighbors(n_followers: int, half_width: int = 2) -> dict:
    """Followers within ``half_width`` places of each follower, clipped at the ends."""
    return {
        n: tuple(m for m in range(n - half_width, n + half_width + 1) if m != n and 1 <= m <= n_followers)
        for n in range(1, n_followers + 1)
    }


def predecessor_neighbors(n_followers: int) -> dict:
    return {n: (n - 1,) for n in range(1, n_followers + 1)}


def relative_state(follower: VehicleState, leader: VehicleState):
    """Distance to the leader and velocity relative to it."""
    return abs(follower.position - leader.position), follower.velocity - leader.velocity


def pairwise_control(n: int, alphas, beta_n: float, xi_n: float, params: ControllerParams) -> float:
    """Acceleration command from every neighbor's distance individually."""
    ms = params.neighbors(n)
    d = params.target_gap
    spacing = math.fsum(alphas[n] - alphas[m] - (n - m) * d for m in ms) / len(ms)
    return params.stiffness * spacing - params.damping * beta_n + xi_n


def neighbor_average(n: int, alphas, params: ControllerParams) -> float:
    """Mean neighbor distance, the only V2V-dependent input of ``averaged_control``."""
    ms = params.neighbors(n)
    return math.fsum(alphas[m] for m in ms) / len(ms)


def averaged_control(n: int, alpha_n: float, beta_n: float, gamma_n: float, xi_n: float,
                params: ControllerParams) -> float:
    """Same command as ``pairwise_control``, needing only the neighbor average ``gamma_n``."""
    ms = params.neighbors(n)
    d = params.target_gap
    spacing = (alpha_n - n * d) - (gamma_n - d * sum(ms) / len(ms))
    return params.stiffness * spacing - params.damping * beta_n + xi_n


# operation names used by the build contract
control_eq4 = pairwise_control
control_eq5 = averaged_control


def radar_term(gap: float, rel_vel: float, params: ControllerParams) -> float:
    """PD term on the RADAR-measured predecessor gap and closing speed."""
    if not gap > 0:
        raise CollisionError(None, detail=f"non-positive predecessor gap {gap}")
    return params.radar_stiffness * (gap - params.target_gap) + params.radar_damping * rel_vel


def leader_accel(t: float) -> float:
    """Leader turbulence: 1 m/s^2 for the first 5 s, then 10 sin(t/2)."""
    if t < 0:
        raise DomainError("t must be >= 0")
    return 1.0 if t < 5.0 else 10.0 * math.sin(t / 2.0)


def no_turbulence(t: float) -> float:
    return 0.0


LEADER_PROFILES = {"turbulence": leader_accel, "none": no_turbulence}


def step_dynamics(positions, velocities, accel_cmds, dt: float, t: float | None = None):
    """Semi-implicit Euler step of every AV. Returns new (positions, velocities)."""
    if not dt > 0:
        raise DomainError("dt must be > 0")
    v = np.asarray(velocities, dtype=float) + np.asarray(accel_cmds, dtype=float) * dt
    p = np.asarray(positions, dtype=float) + v * dt
    bad = np.nonzero(p[1:] >= p[:-1])[0]
    if bad.size:
        raise CollisionError(int(bad[0]) + 1, t)
    return p, v


@dataclass
class PlatoonTrace:
    """Per-tick record of all ``N + 1`` AVs on a uniform time grid.

    Arrays are ``(T, N + 1)``; column 0 is the leader. ``gamma_used`` holds the
    neighbor average each controller actually applied (NaN where unused) and
    ``gamma_truth`` the exact neighbor average at that tick.
    """

    t: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    accels: np.ndarray
    target_gap: float
    gamma_used: np.ndarray | None = None
    gamma_truth: np.ndarray | None = None
    deliveries: list = field(default_factory=list)
    saturated_encodings: int = 0

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    @property
    def n_followers(self) -> int:
        return self.positions.shape[1] - 1

    @property
    def alphas(self) -> np.ndarray:
        return np.abs(self.positions - self.positions[:, :1])

    @property
    def spacing_error(self) -> np.ndarray:
        n = np.arange(self.positions.shape[1])
        return self.alphas - n * self.target_gap

    @classmethod
    def from_errors(cls, t, errors, target_gap: float = 5.0):
        """Build a trace with a resting leader from follower spacing errors ``(T, N)``."""
        errors = np.asarray(errors, dtype=float)
        T, N = errors.shape
        n = np.arange(1, N + 1)
        pos = np.zeros((T, N + 1))
        pos[:, 1:] = -(n * target_gap + errors)
        zeros = np.zeros_like(pos)
        return cls(np.asarray(t, dtype=float), pos, zeros, zeros.copy(), target_gap)


@dataclass(frozen=True)
class PlatoonMetrics:
    accumulated_error: float
    peak_error: np.ndarray
    string_stable: bool


def metrics(trace: PlatoonTrace, transient: float = 10.0, tol: float = 0.05) -> PlatoonMetrics:
    """Accumulated |spacing error| over time and followers, and string stability.

    Stability holds when, after ``transient`` seconds, no follower's peak error
    exceeds its predecessor's by more than ``tol``.
    """
    if len(trace.t) < 2:
        raise DomainError("trace must contain at least two samples")
    err = np.abs(trace.spacing_error[:, 1:])
    accumulated = float(err.sum() * trace.dt)
    late = trace.t >= transient
    if not late.any():
        raise DomainError("trace ends before the transient cutoff")
    peak = err[late].max(axis=0)
    stable = bool(np.all(peak[1:] <= peak[:-1] * (1.0 + tol)))
    return PlatoonMetrics(accumulated, peak, stable)
