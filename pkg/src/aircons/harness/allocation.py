"""First-fit contiguous subcarrier allocation, one range per consensus group."""

from __future__ import annotations

from dataclasses import dataclass

from aircons.consensus import ConsensusGroup, pattern_count
from aircons.errors import AllocationError


@dataclass(frozen=True)
class SubcarrierPlan:
    ranges: dict  # owner -> range of subcarrier indices
    total: int

    @property
    def used(self) -> int:
        return sum(len(r) for r in self.ranges.values())


def allocate_subcarriers(groups, config) -> SubcarrierPlan:
    """Give each group its own block of ``pattern_count`` adjacent subcarriers.

    ``config`` is a SimConfig, or anything with ``subcarrier_count``.
    """
    total = config.subcarrier_count if hasattr(config, "subcarrier_count") else int(config)
    ranges = {}
    cursor = 0
    for group in groups:
        need = pattern_count(group.size, group.pattern_mode)
        if cursor + need > total:
            raise AllocationError(
                f"group of AV {group.owner} needs {need} subcarriers, "
                f"only {total - cursor} of {total} left"
            )
        ranges[group.owner] = range(cursor, cursor + need)
        cursor += need
    return SubcarrierPlan(ranges, total)


def build_groups(config, params) -> list[ConsensusGroup]:
    """One consensus group per follower: itself plus its neighbor set."""
    groups = []
    for n in range(1, config.n_followers + 1):
        members = tuple(sorted(params.neighbors(n) + (n,)))
        groups.append(ConsensusGroup(
            owner=n,
            members=members,
            rho=config.rho,
            sigma=config.sigma,
            power=config.power_watts,
            norm_len=config.norm_len,
            rounds=config.consensus_rounds,
            pattern_mode=config.pattern_mode,
        ))
    return groups
