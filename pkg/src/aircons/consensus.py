"""
Over-the-air consensus rounds.

One round occupies a resource block of two OFDM symbols over the group's
subcarriers. In the pilot symbol every member sends the common pilot on each
subcarrier, multiplied by that subcarrier's sign pattern; each receiver keeps
the subcarrier with the strongest in-phase response, which aligns the signs of
all incoming in-phase channels. In the data symbol every member resends its
current amplitude under the same per-subcarrier patterns, and each receiver
normalizes what it hears on its chosen subcarrier by the pilot response. The
resulting update is a random row-stochastic mixing step, so all amplitudes
converge to a common weighted average of the encoded positions.

The engine works on stacks of ``R`` independent groups of equal size at once
(``_pilot`` / ``_data``); the single-group operations are thin wrappers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from aircons.channel import ChannelMatrix, FadingConfig, complex_noise, draw_round_channels
from aircons.errors import DegenerateChannelError, DomainError

PATTERN_MODES = ("exact", "paper")
LOW_SNR_FACTOR = 1e3


@dataclass(frozen=True)
class ConsensusGroup:
    """Protocol parameters of the consensus process owned by AV ``owner``.

    ``members`` is the transmitter set (the owner plus the AVs whose positions
    feed its controller), in a fixed order that indexes every per-member vector.
    """

    owner: int
    members: tuple
    pilot_id: str = "w"
    rho: float = 0.9
    sigma: float = 1.0
    power: float = 0.2
    norm_len: float = 55.0
    rounds: int = 6
    pattern_mode: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(int(m) for m in self.members))
        if not 0 < self.rho < 1:
            raise DomainError(f"rho must lie in (0, 1), got {self.rho}")
        if not 0 < self.sigma <= 1:
            raise DomainError(f"sigma must lie in (0, 1], got {self.sigma}")
        if self.members.count(self.owner) != 1:
            raise DomainError("members must contain the owner exactly once")
        if len(set(self.members)) != len(self.members):
            raise DomainError("members must be distinct")
        if len(self.members) < 2:
            raise DomainError("a consensus group needs at least 2 members")
        if self.power <= 0 or self.norm_len <= 0:
            raise DomainError("power and norm_len must be > 0")
        if self.rounds < 0:
            raise DomainError("rounds must be >= 0")
        if self.pattern_mode not in PATTERN_MODES:
            raise DomainError(f"pattern_mode must be one of {PATTERN_MODES}")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def owner_index(self) -> int:
        return self.members.index(self.owner)

    @property
    def amplitude_scale(self) -> float:
        """Amplitude per meter of encoded distance, sqrt(sigma*P)/L."""
        return math.sqrt(self.sigma * self.power) / self.norm_len


@dataclass(frozen=True)
class SignPattern:
    signs: tuple

    def __post_init__(self):
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        if any(s not in (-1, 1) for s in self.signs):
            raise DomainError("sign pattern entries must be +1 or -1")
        if not self.signs or self.signs[0] != 1:
            raise DomainError("canonical sign patterns start with +1")

    def __len__(self):
        return len(self.signs)


@dataclass
class RoundState:
    """Amplitudes after ``k`` updates, plus what was observed to produce them.

    The observation fields are ``None`` for the initial encoding (``k == 0``).
    """

    x: np.ndarray
    k: int = 0
    per_receiver_selection: np.ndarray | None = None
    pilot_obs: np.ndarray | None = None
    data_obs: np.ndarray | None = None
    ratio: np.ndarray | None = None
    low_snr: np.ndarray | None = None
    clipped: int = 0


@dataclass
class ConsensusOutcome:
    zeta_tilde: float
    gamma: float
    trace: np.ndarray
    converged_spread: float
    zeta: float
    rounds: list = field(default_factory=list, repr=False)
    low_snr_rounds: int = 0
    clip_count: int = 0

    @property
    def epsilon(self) -> float:
        return self.zeta_tilde - self.zeta


def canonical_patterns(group_size: int, mode: str = "exact") -> list[SignPattern]:
    """Sign patterns mapped one per subcarrier of the RB.

    ``exact`` gives every sign vector with a leading +1 (one per negation
    class), which contains every receiver's optimum. ``paper`` keeps the first
    half of that list in lexicographic order (+1 before -1).
    """
    if group_size < 2:
        raise DomainError(f"group size must be >= 2, got {group_size}")
    if mode not in PATTERN_MODES:
        raise DomainError(f"unknown pattern mode {mode!r}")
    patterns = [SignPattern((1,) + tail) for tail in itertools.product((1, -1), repeat=group_size - 1)]
    if mode == "paper":
        patterns = patterns[: 2 ** max(group_size - 2, 0)]
    return patterns


@lru_cache(maxsize=None)
def _pattern_matrix_cached(group_size: int, mode: str) -> np.ndarray:
    mat = np.array([p.signs for p in canonical_patterns(group_size, mode)], dtype=float)
    mat.setflags(write=False)
    return mat


def pattern_matrix(patterns) -> np.ndarray:
    """``(F, S)`` array of signs; row ``f`` is the pattern on subcarrier ``f``."""
    if isinstance(patterns, np.ndarray):
        return patterns
    return np.array([p.signs for p in patterns], dtype=float)


def pattern_count(group_size: int, mode: str) -> int:
    return _pattern_matrix_cached(group_size, mode).shape[0]


def _offdiag(h: np.ndarray) -> np.ndarray:
    S = h.shape[-1]
    if np.any(h[..., np.arange(S), np.arange(S)] != 0):
        h = h.copy()
        h[..., np.arange(S), np.arange(S)] = 0.0
    return h


def _stacked_matmul(a, b):
    # (R, S, S) @ (S, F) as one 2-D BLAS call; numpy's stacked matmul is far slower here
    R, S, _ = a.shape
    return (np.ascontiguousarray(a).reshape(R * S, S) @ b).reshape(R, S, b.shape[1])


def _pilot(h, I, power, noise_power, rng):
    """Pilot symbol for a stack of groups.

    h: (R, S, S) complex, I: (F, S). Returns (selection (R, S), r_star (R, S)).
    """
    sqrt_p = math.sqrt(power)
    if noise_power > 0:
        r_all = sqrt_p * _stacked_matmul(h, I.T) + complex_noise(rng, noise_power, h.shape[:2] + (I.shape[0],))
        sel = np.argmax(np.abs(r_all.real), axis=-1)
        r_star = np.take_along_axis(r_all, sel[..., None], axis=-1)[..., 0]
    else:
        # only the in-phase part drives the selection; skip the full complex product
        strength = _stacked_matmul(h.real, I.T)
        sel = np.argmax(np.abs(strength, out=strength), axis=-1)
        r_star = sqrt_p * np.sum(h * I[sel], axis=-1)
    return sel, r_star


def _data(h, I, x, sel, r_star, rho, power, noise_power, rng):
    """Data symbol and amplitude update for a stack of groups.

    Returns (x_next, y_star, ratio, low_snr, clipped_count).
    """
    sqrt_p = math.sqrt(power)
    y_star = np.einsum("rlm,rlm,rm->rl", h, I[sel], x)
    if noise_power > 0:
        y_star = y_star + complex_noise(rng, noise_power, y_star.shape)
    pilot_gain = r_star.real / sqrt_p
    if np.any(pilot_gain == 0):
        raise DegenerateChannelError("zero in-phase pilot response at a receiver")
    ratio = y_star.real / pilot_gain
    x_next = (1.0 - rho) * x + rho * ratio
    over = np.abs(x_next) > sqrt_p
    if over.any():
        x_next = np.clip(x_next, -sqrt_p, sqrt_p)
    low_snr = np.abs(r_star.real) < LOW_SNR_FACTOR * math.sqrt(noise_power)
    return x_next, y_star, ratio, low_snr, int(over.sum())


def pilot_phase(group: ConsensusGroup, channels: ChannelMatrix, patterns, noise_power: float,
                rng: np.random.Generator):
    """Per-receiver subcarrier selection and its raw demodulated pilot response.

    Returns ``(selected, r_star)``, arrays of length S.
    """
    h = _offdiag(np.asarray(channels.coeffs))[None]
    sel, r_star = _pilot(h, pattern_matrix(patterns), group.power, noise_power, rng)
    return sel[0], r_star[0]


def data_phase(group: ConsensusGroup, channels: ChannelMatrix, patterns, state: RoundState,
               selections, noise_power: float, rng: np.random.Generator) -> RoundState:
    """Advance ``state`` by one update using this round's pilot ``selections``."""
    sel, r_star = selections
    h = _offdiag(np.asarray(channels.coeffs))[None]
    x_next, y_star, ratio, low_snr, clipped = _data(
        h, pattern_matrix(patterns), np.asarray(state.x, dtype=float)[None],
        np.asarray(sel)[None], np.asarray(r_star)[None],
        group.rho, group.power, noise_power, rng,
    )
    return RoundState(
        x=x_next[0],
        k=state.k + 1,
        per_receiver_selection=np.asarray(sel),
        pilot_obs=np.asarray(r_star),
        data_obs=y_star[0],
        ratio=ratio[0],
        low_snr=low_snr[0],
        clipped=clipped,
    )


def encode_initial(alpha: float, group: ConsensusGroup) -> float:
    """Amplitude-modulate a relative distance into the initial transmit amplitude."""
    if not 0 <= alpha <= group.norm_len:
        raise DomainError(f"alpha={alpha} outside [0, {group.norm_len}] (platoon exceeds design length)")
    return group.amplitude_scale * alpha


def decode(outcome_x: float, group: ConsensusGroup, own_alpha: float):
    """Map a consensus amplitude back to meters.

    Returns ``(zeta_tilde, gamma)``: the estimated mean over the transmitter
    set, and the mean over the neighbors only (own distance removed).
    """
    zeta_tilde = outcome_x / group.amplitude_scale
    n_neighbors = group.size - 1
    gamma = (zeta_tilde * group.size - own_alpha) / n_neighbors
    return zeta_tilde, gamma


def mixing_matrix(channels, rho: float) -> np.ndarray:
    """Row-stochastic matrix ``B`` with ``x[k+1] = B x[k]`` in the noiseless case."""
    h = channels.coeffs if isinstance(channels, ChannelMatrix) else np.asarray(channels)
    S = h.shape[-1]
    a = np.abs(h.real)
    a[np.arange(S), np.arange(S)] = 0.0
    row = a.sum(axis=1, keepdims=True)
    if np.any(row == 0):
        raise DegenerateChannelError("a receiver has zero in-phase channel magnitude")
    B = rho * a / row
    B[np.arange(S), np.arange(S)] = 1.0 - rho
    return B


def spread(x) -> float:
    x = np.asarray(x)
    return float(x.max() - x.min())


def geometry_channel_source(distances, cfg: FadingConfig = FadingConfig()):
    """Round channel source drawing fresh i.i.d. fading over a fixed geometry."""
    distances = np.asarray(distances, dtype=float)

    def source(k, rng):
        return draw_round_channels(distances.shape[0], distances, cfg, k, rng)

    return source


def distances_from_alphas(alphas) -> np.ndarray:
    """Pairwise distances of AVs on a single lane given their distance to the leader."""
    a = np.asarray(alphas, dtype=float)
    return np.abs(a[:, None] - a[None, :])


def run_consensus(group: ConsensusGroup, alphas, round_channel_source, rng: np.random.Generator,
                  noise_power: float = 0.0) -> ConsensusOutcome:
    """Run ``group.rounds`` rounds from the encoded ``alphas`` (one per member).

    ``round_channel_source`` is either ``f(k, rng) -> ChannelMatrix`` or a
    sequence of ChannelMatrix indexed by round.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (group.size,):
        raise DomainError(f"expected {group.size} alphas, got shape {alphas.shape}")
    patterns = _pattern_matrix_cached(group.size, group.pattern_mode)
    state = RoundState(x=np.array([encode_initial(a, group) for a in alphas]), k=0)
    states = [state]
    for k in range(group.rounds):
        if callable(round_channel_source):
            channels = round_channel_source(k, rng)
        else:
            channels = round_channel_source[k]
        selections = pilot_phase(group, channels, patterns, noise_power, rng)
        state = data_phase(group, channels, patterns, state, selections, noise_power, rng)
        states.append(state)

    trace = np.array([s.x for s in states])
    own = group.owner_index
    zeta_tilde, gamma = decode(state.x[own], group, alphas[own])
    return ConsensusOutcome(
        zeta_tilde=zeta_tilde,
        gamma=gamma,
        trace=trace,
        converged_spread=spread(state.x),
        zeta=float(alphas.mean()),
        rounds=states,
        low_snr_rounds=sum(int(s.low_snr.any()) for s in states[1:]),
        clip_count=sum(s.clipped for s in states),
    )


@dataclass
class BatchResult:
    x: np.ndarray
    trace: np.ndarray | None
    low_snr_rounds: int
    clip_count: int


def run_consensus_batch(x0: np.ndarray, channel_draw: Callable[[int], np.ndarray], rho: float,
                        power: float, rounds: int, rng: np.random.Generator,
                        pattern_mode: str = "exact", noise_power: float = 0.0,
                        record: bool = False) -> BatchResult:
    """Run ``R`` independent groups of equal size in lockstep.

    x0: (R, S) initial amplitudes. ``channel_draw(k)`` returns the (R, S, S)
    coefficient stack of round ``k``.
    """
    x = np.asarray(x0, dtype=float)
    I = _pattern_matrix_cached(x.shape[1], pattern_mode)
    trace = [x] if record else None
    low, clips = 0, 0
    for k in range(rounds):
        h = _offdiag(channel_draw(k))
        sel, r_star = _pilot(h, I, power, noise_power, rng)
        x, _, _, low_snr, clipped = _data(h, I, x, sel, r_star, rho, power, noise_power, rng)
        low += int(low_snr.any(axis=1).sum())
        clips += clipped
        if record:
            trace.append(x)
    return BatchResult(x, np.array(trace) if record else None, low, clips)


def consensus_rows(outcome: ConsensusOutcome) -> list[dict]:
    """Flatten an outcome into CSV rows (one per round and member)."""
    rows = []
    for state in outcome.rounds:
        for m, xm in enumerate(state.x):
            initial = state.k == 0
            rows.append({
                "round": state.k,
                "member": m,
                "x": repr(float(xm)),
                "ratio": "" if initial else repr(float(state.ratio[m])),
                "selected_subcarrier": "" if initial else int(state.per_receiver_selection[m]),
                "low_snr_flag": 0 if initial else int(state.low_snr[m]),
            })
    return rows


CONSENSUS_CSV_COLUMNS = ("round", "member", "x", "ratio", "selected_subcarrier", "low_snr_flag")
