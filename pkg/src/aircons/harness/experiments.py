"""
Experiment runners: the platoon-level controller comparison and the
consensus-trajectory study over the mixing weight rho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from aircons.channel import draw_round_channels
from aircons.consensus import ConsensusGroup, ConsensusOutcome, consensus_rows, distances_from_alphas, run_consensus, spread
from aircons.deviation import equal_spacing_alphas
from aircons.errors import DomainError
from aircons.harness.config import CONTROLLER_KINDS, SimConfig
from aircons.harness.output import rows_to_csv
from aircons.harness.simulation import run_simulation
from aircons.platoon import metrics

REFERENCE_REDUCTION = 0.1422  # published accumulated-error reduction, for side-by-side reporting
MIN_SEEDS = 5
BROADCAST_NOTE = ("both arms receive the leader broadcast and RADAR scans on the same "
                  "error-free, zero-latency ticks")


@dataclass(frozen=True)
class Arm:
    """One side of a comparison: a controller and an optional consensus latency override."""

    kind: str
    gamma_latency: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise DomainError(f"unknown controller kind {self.kind!r}")
        if not self.label:
            suffix = "" if self.gamma_latency is None else f"@{self.gamma_latency!r}s"
            object.__setattr__(self, "label", self.kind + suffix)


def _as_arm(arm) -> Arm:
    return arm if isinstance(arm, Arm) else Arm(arm)


@dataclass
class ArmResult:
    label: str
    accumulated_error: np.ndarray      # one per seed
    string_stable: np.ndarray
    max_peak_ratio: np.ndarray         # worst follower-to-predecessor peak ratio after the transient
    saturated_encodings: np.ndarray


@dataclass
class ComparisonReport:
    seeds: tuple
    test: ArmResult
    reference: ArmResult
    config: SimConfig

    @property
    def per_seed_reduction(self) -> np.ndarray:
        return 1.0 - self.test.accumulated_error / self.reference.accumulated_error

    @property
    def mean_reduction(self) -> float:
        """1 - E_test / E_reference on the seed-averaged accumulated errors."""
        return float(1.0 - self.test.accumulated_error.mean() / self.reference.accumulated_error.mean())

    def rows(self):
        for i, seed in enumerate(self.seeds):
            for arm in (self.test, self.reference):
                yield {
                    "seed": seed,
                    "arm": arm.label,
                    "accumulated_error": float(arm.accumulated_error[i]),
                    "string_stable": int(arm.string_stable[i]),
                    "max_peak_ratio": float(arm.max_peak_ratio[i]),
                    "saturated_encodings": int(arm.saturated_encodings[i]),
                    "reduction": float(self.per_seed_reduction[i]),
                }

    def to_csv(self) -> str:
        return rows_to_csv(self.rows(), COMPARISON_CSV_COLUMNS)

    def summary(self) -> str:
        t, r = self.test, self.reference
        lines = [f"{'seed':>6} {t.label:>18} {r.label:>18} {'reduction':>10}"]
        for i, seed in enumerate(self.seeds):
            lines.append(f"{seed:>6} {t.accumulated_error[i]:>18.4f} {r.accumulated_error[i]:>18.4f} "
                         f"{self.per_seed_reduction[i]:>10.2%}")
        lines.append(f"{'mean':>6} {t.accumulated_error.mean():>18.4f} {r.accumulated_error.mean():>18.4f} "
                     f"{self.mean_reduction:>10.2%}")
        lines.append(f"measured reduction {self.mean_reduction:.2%} (reference value {REFERENCE_REDUCTION:.2%})")
        for arm in (t, r):
            lines.append(f"{arm.label}: string stable in {int(arm.string_stable.sum())}/{len(self.seeds)} seeds, "
                         f"worst peak ratio {arm.max_peak_ratio.max():.4f}")
        lines.append(f"note: {BROADCAST_NOTE}")
        return "\n".join(lines)


COMPARISON_CSV_COLUMNS = ("seed", "arm", "accumulated_error", "string_stable", "max_peak_ratio",
                          "saturated_encodings", "reduction")


def _run_arm(config: SimConfig, arm: Arm, seeds) -> ArmResult:
    errs, stable, ratios, sats = [], [], [], []
    for seed in seeds:
        cfg = config.replace(seed=seed)
        trace = run_simulation(cfg, arm.kind, gamma_latency=arm.gamma_latency,
                               rng=np.random.default_rng(seed))
        m = metrics(trace, cfg.transient, cfg.stability_tol)
        errs.append(m.accumulated_error)
        stable.append(m.string_stable)
        peaks = m.peak_error
        ratios.append(float(np.max(peaks[1:] / np.maximum(peaks[:-1], 1e-300))) if len(peaks) > 1 else 1.0)
        sats.append(trace.saturated_encodings)
    return ArmResult(arm.label, np.array(errs), np.array(stable), np.array(ratios), np.array(sats))


def compare_experiment(config: SimConfig, seeds, arms=("aircons", "benchmark")) -> ComparisonReport:
    """Run both arms for every seed with the same per-seed random stream and compare.

    ``arms`` is ``(test, reference)``; each entry is a controller kind or an Arm.
    """
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) < MIN_SEEDS:
        raise DomainError(f"need at least {MIN_SEEDS} seeds, got {len(seeds)}")
    test, ref = (_as_arm(a) for a in arms)
    if test.label == ref.label:
        ref = Arm(ref.kind, ref.gamma_latency, ref.label + "'")
    return ComparisonReport(seeds, _run_arm(config, test, seeds), _run_arm(config, ref, seeds), config)


# consensus trajectories


def rounds_to_spread(trace: np.ndarray, frac: float = 0.01) -> float:
    """First round whose member spread is at most ``frac`` of the initial spread (inf if never)."""
    trace = np.asarray(trace)
    s0 = spread(trace[0])
    for k, x in enumerate(trace):
        if spread(x) <= frac * s0:
            return float(k)
    return math.inf


@dataclass
class ConsensusTraceReport:
    rho_values: tuple
    seeds: tuple
    group_size: int
    alphas: np.ndarray
    outcomes: dict = field(default_factory=dict)   # (rho, seed) -> ConsensusOutcome

    def convergence_rounds(self, rho) -> np.ndarray:
        return np.array([rounds_to_spread(self.outcomes[rho, s].trace) for s in self.seeds])

    def final_bias(self, rho) -> np.ndarray:
        """|owner's decoded estimate - true mean| after the last round, one per seed."""
        return np.array([abs(self.outcomes[rho, s].epsilon) for s in self.seeds])

    def rows(self):
        for rho in self.rho_values:
            for s in self.seeds:
                o = self.outcomes[rho, s]
                truth = repr(float(o.trace[0].mean()))
                for row in consensus_rows(o):
                    yield {"rho": repr(float(rho)), "seed": s, **row, "truth": truth}

    def to_csv(self) -> str:
        return rows_to_csv(self.rows(), TRACE_STUDY_COLUMNS)


TRACE_STUDY_COLUMNS = ("rho", "seed", "round", "member", "x", "ratio", "selected_subcarrier",
                       "low_snr_flag", "truth")


def consensus_trace_experiment(rho_values, config: SimConfig | None = None, seeds=(0,), *,
                               rounds: int = 100, group_size: int = 5, alphas=None,
                               noise: bool = True) -> ConsensusTraceReport:
    """Consensus trajectories of one fixed group for several rho values.

    For a given seed every rho sees the same per-round channel draws and the
    same receiver-noise stream, so differences come from rho alone. Members
    default to equal spacing at ``config.target_gap``; the owner is the
    middle member. ``truth`` in the CSV is the mean initial amplitude.
    """
    config = config or SimConfig()
    rho_values = tuple(float(r) for r in rho_values)
    for r in rho_values:
        if not 0 < r < 1:
            raise DomainError(f"rho must lie in (0, 1), got {r}")
    if alphas is None:
        alphas = equal_spacing_alphas(group_size, config.target_gap)
    alphas = np.asarray(alphas, dtype=float)
    group_size = len(alphas)
    distances = distances_from_alphas(alphas)
    cfg = config.fading_config()
    noise_power = config.noise_power if noise else 0.0
    members = tuple(range(1, group_size + 1))
    owner = members[group_size // 2]
    report = ConsensusTraceReport(rho_values, tuple(int(s) for s in seeds), group_size, alphas)
    for seed in report.seeds:
        ch_rng = np.random.default_rng([seed, 0])
        channels = [draw_round_channels(group_size, distances, cfg, k, ch_rng) for k in range(rounds)]
        for rho in rho_values:
            group = ConsensusGroup(owner=owner, members=members, rho=rho, sigma=config.sigma,
                                   power=config.power_watts, norm_len=config.norm_len,
                                   rounds=rounds, pattern_mode=config.pattern_mode)
            outcome: ConsensusOutcome = run_consensus(group, alphas, channels,
                                                      np.random.default_rng([seed, 1]), noise_power)
            report.outcomes[rho, seed] = outcome
    return report
