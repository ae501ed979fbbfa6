"""
Consensus deviation analysis.

The consensus value is a random weighted average of the encoded distances.
Replacing every in-phase channel magnitude by its expectation gives a fixed
row-stochastic update matrix; its left Perron vector ``v`` estimates the
weights, and ``v @ alpha - mean(alpha)`` lower-bounds the expected deviation.
For equally spaced groups the expected matrix is centro-symmetric, ``v`` is
palindromic and the bound is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from aircons.channel import FadingConfig, draw_channel_batch
from aircons.consensus import ConsensusGroup, distances_from_alphas, run_consensus_batch
from aircons.errors import ConvergenceError, DomainError

POWER_ITER_MAX_STEPS = 100_000
POWER_ITER_TOL = 1e-12
MC_CHUNK = 1000


@dataclass
class DeviationReport:
    expected_matrix: np.ndarray
    left_eigvec: np.ndarray
    lower_bound: float = math.nan
    mc_mean: float = math.nan
    mc_stderr: float = math.nan


def expected_abs_inphase(distance, pathloss_exp: float):
    """E|Re h| for a link of the given length."""
    return math.sqrt(2.0 / math.pi) * np.power(distance, -pathloss_exp / 4.0)


def left_perron_vector(B: np.ndarray, tol: float = POWER_ITER_TOL,
                       max_steps: int = POWER_ITER_MAX_STEPS) -> np.ndarray:
    """Left eigenvector of a row-stochastic matrix for eigenvalue 1, summing to 1.

    Plain power iteration on ``B.T`` from the uniform vector.
    """
    S = B.shape[0]
    v = np.full(S, 1.0 / S)
    for _ in range(max_steps):
        v_next = v @ B
        v_next /= v_next.sum()
        if np.max(np.abs(v_next - v)) < tol:
            return v_next
        v = v_next
    raise ConvergenceError(f"power iteration did not converge in {max_steps} steps")


def expected_mixing_matrix(spacings, rho: float, eta: float = 4.0) -> DeviationReport:
    """Expected update matrix for a group with pairwise distances ``spacings``."""
    d = np.asarray(spacings, dtype=float)
    S = d.shape[0]
    off = ~np.eye(S, dtype=bool)
    if d.shape != (S, S) or np.any(~(d[off] > 0)):
        raise DomainError("spacings must be a square matrix with positive off-diagonal entries")
    if not 0 < rho < 1:
        raise DomainError(f"rho must lie in (0, 1), got {rho}")
    eta_bar = np.where(off, expected_abs_inphase(np.where(off, d, 1.0), eta), 0.0)
    B = rho * eta_bar / eta_bar.sum(axis=1, keepdims=True)
    B[np.arange(S), np.arange(S)] = 1.0 - rho
    return DeviationReport(expected_matrix=B, left_eigvec=left_perron_vector(B))


def deviation_lower_bound(report: DeviationReport, alphas, ground_truth_zeta=None) -> float:
    alphas = np.asarray(alphas, dtype=float)
    zeta = alphas.mean() if ground_truth_zeta is None else ground_truth_zeta
    report.lower_bound = float(report.left_eigvec @ alphas - zeta)
    return report.lower_bound


def equal_spacing_alphas(group_size: int, gap: float) -> np.ndarray:
    return gap * np.arange(1, group_size + 1, dtype=float)


def mc_deviation(group: ConsensusGroup, alphas, replications: int, rng: np.random.Generator, *,
                 distances=None, cfg: FadingConfig = FadingConfig(), noise_power: float = 0.0):
    """Monte Carlo mean and standard error of the owner's consensus deviation.

    Each replication is a full consensus process with its own channel draws.
    Replications are simulated in chunks of lockstep groups; the result is a
    deterministic function of ``rng``'s state.
    """
    if replications < 100:
        raise DomainError("mc_deviation needs at least 100 replications")
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (group.size,):
        raise DomainError(f"expected {group.size} alphas")
    if np.any(alphas < 0) or np.any(alphas > group.norm_len):
        raise DomainError(f"alphas must lie in [0, {group.norm_len}]")
    if distances is None:
        distances = distances_from_alphas(alphas)
    distances = np.asarray(distances, dtype=float)
    own = group.owner_index
    zeta = alphas.mean()
    eps = np.empty(replications)
    done = 0
    while done < replications:
        R = min(MC_CHUNK, replications - done)
        stack = np.broadcast_to(distances, (R,) + distances.shape)
        x0 = np.broadcast_to(group.amplitude_scale * alphas, (R, group.size))
        result = run_consensus_batch(
            x0, lambda k: draw_channel_batch(stack, cfg, rng), group.rho, group.power,
            group.rounds, rng, group.pattern_mode, noise_power,
        )
        eps[done:done + R] = result.x[:, own] / group.amplitude_scale - zeta
        done += R
    return float(eps.mean()), float(eps.std(ddof=1) / math.sqrt(replications))
