"""
Fixed-step platoon simulation with periodic leader broadcast, RADAR scans and
back-to-back consensus processes.

Every event happens on a tick of the ``dt`` grid. Quantities received by an
AV (leader state, RADAR gap, consensus result) are held until the next
delivery. A consensus process freezes its members' distances at its start
tick, runs its rounds over the geometry of that instant, and becomes usable at
the first tick at or after ``start + consensus_rounds * round_spacing``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from aircons.channel import draw_from_std, link_std
from aircons.consensus import decode, run_consensus_batch
from aircons.harness.allocation import allocate_subcarriers, build_groups
from aircons.harness.config import CONTROLLER_KINDS, SimConfig
from aircons.errors import CollisionError, ConfigError
from aircons.platoon import (
    LEADER_PROFILES,
    PlatoonTrace,
    pairwise_control,
    averaged_control,
    neighbor_average,
    radar_term,
    step_dynamics,
)


@dataclass(frozen=True)
class Delivery:
    owner_count: int
    start: float
    due: float
    applied: float


class _ConsensusScheduler:
    """Runs one process for every group at once and hands back neighbor averages."""

    def __init__(self, config: SimConfig, params, rng):
        self.config = config
        self.groups = build_groups(config, params)
        self.plan = allocate_subcarriers(self.groups, config)
        self.rng = rng
        self.cfg = config.fading_config()
        self.noise_power = config.noise_power
        self.by_size = defaultdict(list)
        for g in self.groups:
            self.by_size[g.size].append(g)
        self.saturated = 0

    def run(self, alphas_known: np.ndarray, positions: np.ndarray) -> dict:
        """Neighbor averages decoded by every owner, keyed by owner."""
        L = self.config.norm_len
        snapshot = np.clip(alphas_known, 0.0, L)
        self.saturated += int(np.count_nonzero(snapshot != alphas_known))
        gammas = {}
        for size, groups in sorted(self.by_size.items()):
            members = np.array([g.members for g in groups])
            ref = groups[0]
            x0 = ref.amplitude_scale * snapshot[members]
            p = positions[members]
            std = link_std(np.abs(p[:, :, None] - p[:, None, :]), self.cfg)
            result = run_consensus_batch(
                x0, lambda k: draw_from_std(std, self.rng, self.cfg.reciprocal),
                ref.rho, ref.power, ref.rounds, self.rng, ref.pattern_mode, self.noise_power,
            )
            for row, g in enumerate(groups):
                own = g.owner_index
                _, gamma = decode(result.x[row, own], g, snapshot[g.owner])
                gammas[g.owner] = gamma
        return gammas


def run_simulation(config: SimConfig, controller_kind: str = "aircons", *,
                   gamma_latency: float | None = None, rng: np.random.Generator | None = None) -> PlatoonTrace:
    """Simulate the platoon for ``config.duration`` seconds.

    ``gamma_latency`` overrides the consensus delivery lag; ``math.inf``
    means no consensus result is ever delivered and the initial neighbor
    averages are held for the whole run.
    """
    if controller_kind not in CONTROLLER_KINDS:
        raise ConfigError(f"unknown controller kind {controller_kind!r}", field="controller")
    N, d, dt = config.n_followers, config.target_gap, config.dt
    T = config.n_ticks
    params = config.controller_params(controller_kind)
    leader_profile = LEADER_PROFILES[config.leader_profile]
    cap = params.accel_cap
    aircons = controller_kind == "aircons"

    pos = -d * np.arange(N + 1, dtype=float) + 0.0
    offsets = np.asarray(config.initial_offsets, dtype=float)
    pos[1:1 + len(offsets)] -= offsets
    vel = np.zeros(N + 1)
    accel = np.zeros(N + 1)

    broadcast_every = config.ticks(config.broadcast_interval)
    radar_every = config.ticks(config.radar_interval)
    latency = config.consensus_latency if gamma_latency is None else gamma_latency
    lag_ticks = None if math.isinf(latency) else max(1, math.ceil(latency / dt - 1e-9))

    scheduler = None
    if aircons:
        scheduler = _ConsensusScheduler(config, params, rng or np.random.default_rng(config.seed))

    # exact formation is common knowledge at t = 0
    alpha0 = np.abs(pos - pos[0])
    gamma_used = np.full(N + 1, np.nan)
    if aircons:
        for n in range(1, N + 1):
            gamma_used[n] = neighbor_average(n, alpha0, params)

    t_grid = np.arange(T) * dt
    rec_pos = np.empty((T, N + 1))
    rec_vel = np.empty((T, N + 1))
    rec_acc = np.empty((T, N + 1))
    rec_gu = np.empty((T, N + 1))
    rec_gt = np.full((T, N + 1), np.nan)
    deliveries = []

    pending = None  # (start_tick, deliver_tick, gammas)
    p0 = v0 = 0.0
    gap = rel = None
    for i in range(T):
        t = t_grid[i]
        if i % broadcast_every == 0:
            p0, v0 = pos[0], vel[0]
        if i % radar_every == 0:
            gap = pos[:-1] - pos[1:]
            rel = vel[:-1] - vel[1:]
        alpha_true = pos[0] - pos
        alpha_known = np.abs(pos - p0)

        if aircons and lag_ticks is not None:
            if pending is not None and pending[1] == i:
                for n, g in pending[2].items():
                    gamma_used[n] = g
                start = pending[0] * dt
                deliveries.append(Delivery(len(pending[2]), start, start + latency, t))
                pending = None
            if pending is None:
                pending = (i, i + lag_ticks, scheduler.run(alpha_known, pos))

        accel[0] = leader_profile(t)
        for n in range(1, N + 1):
            try:
                xi = radar_term(gap[n - 1], rel[n - 1], params)
            except CollisionError as exc:
                raise CollisionError(n, t, exc.detail) from None
            beta = vel[n] - v0
            if aircons:
                mu = averaged_control(n, alpha_known[n], beta, gamma_used[n], xi, params)
            else:
                view = {m: alpha_known[n] - gap[n - 1] for m in params.neighbors(n)}
                view[n] = alpha_known[n]
                mu = pairwise_control(n, view, beta, xi, params)
            accel[n] = min(max(mu, -cap), cap)
            rec_gt[i, n] = neighbor_average(n, alpha_true, params)

        rec_pos[i], rec_vel[i], rec_acc[i], rec_gu[i] = pos, vel, accel, gamma_used
        pos, vel = step_dynamics(pos, vel, accel, dt, t)

    return PlatoonTrace(t_grid, rec_pos, rec_vel, rec_acc, d, rec_gu, rec_gt, deliveries,
                        saturated_encodings=scheduler.saturated if scheduler else 0)
