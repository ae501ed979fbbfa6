"""
V2V wireless layer: Rayleigh fading draws, thermal noise, superposition, and
the flat-fading (coherence) sanity check for one consensus resource block.

All randomness comes from an explicitly passed ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from aircons.errors import DomainError

SPEED_OF_LIGHT = 3e8  # m/s
MAX_GROUP_SIZE = 10


@dataclass(frozen=True)
class FadingConfig:
    """Link-level parameters.

    Attributes
    ----------
    pathloss_exp : float
        Path-loss exponent (dimensionless).
    noise_density : float
        Thermal noise spectral density in dBm/Hz.
    subcarrier_spacing : float
        OFDM subcarrier spacing in Hz.
    symbol_duration : float
        OFDM symbol duration in seconds.
    carrier_freq : float
        Carrier frequency in Hz.
    reciprocal : bool
        If True, ``h[l, m] == h[m, l]`` in every draw.
    """

    pathloss_exp: float = 4.0
    noise_density: float = -174.0
    subcarrier_spacing: float = 60e3
    symbol_duration: float = 16.7e-6
    carrier_freq: float = 5.9e9
    reciprocal: bool = False

    # 16.7 us is the rounded NR value for 60 kHz, so the check is loose.
    SPACING_TOL = 1e-2

    def __post_init__(self):
        if not self.pathloss_exp > 0:
            raise DomainError(f"pathloss_exp must be > 0, got {self.pathloss_exp}")
        if self.subcarrier_spacing <= 0 or self.symbol_duration <= 0:
            raise DomainError("subcarrier_spacing and symbol_duration must be > 0")
        if self.carrier_freq <= 0:
            raise DomainError("carrier_freq must be > 0")
        mismatch = abs(self.subcarrier_spacing * self.symbol_duration - 1.0)
        if mismatch > self.SPACING_TOL:
            raise DomainError(
                "subcarrier_spacing must equal 1/symbol_duration "
                f"(relative mismatch {mismatch:.3g})"
            )


@dataclass
class ChannelMatrix:
    """Complex coefficients of one consensus round.

    ``coeffs[l, m]`` is the channel from transmitter ``m`` to receiver ``l``.
    The diagonal is zero and never read (self-interference is cancelled).
    """

    coeffs: np.ndarray
    round_index: int = 0

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]

    @property
    def in_phase(self) -> np.ndarray:
        return self.coeffs.real


@dataclass(frozen=True)
class CoherenceReport:
    coherence_time: float
    coherence_bandwidth: float
    rb_time_span: float
    rb_freq_span: float
    flat_fading_ok: bool
    group_size_ok: bool


def fading_std(distance, pathloss_exp: float):
    """Per-quadrature standard deviation of the fading coefficient.

    Real and imaginary parts are each N(0, d^(-eta/2)), so that
    ``E|Re h| = sqrt(2/pi) * d^(-eta/4)``.
    """
    return np.power(distance, -pathloss_exp / 4.0)


def sample_pair_channel(distance: float, cfg: FadingConfig, rng: np.random.Generator, size=None):
    """Draw the fading coefficient between two AVs ``distance`` meters apart.

    With ``size`` given, returns an array of independent draws.
    """
    if not distance > 0:
        raise DomainError(f"distance must be > 0 (co-located AVs unsupported), got {distance}")
    std = fading_std(distance, cfg.pathloss_exp)
    re = rng.normal(0.0, std, size)
    im = rng.normal(0.0, std, size)
    if size is None:
        return complex(re, im)
    return re + 1j * im


def noise_power(cfg: FadingConfig) -> float:
    """Noise power in watts over one subcarrier."""
    dbm = cfg.noise_density + 10.0 * math.log10(cfg.subcarrier_spacing)
    return 10.0 ** ((dbm - 30.0) / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def complex_noise(rng: np.random.Generator, power: float, size=None):
    """Circularly symmetric CN(0, power) samples."""
    scale = math.sqrt(power / 2.0)
    return rng.normal(0.0, scale, size) + 1j * rng.normal(0.0, scale, size)


def superpose(contributions, noise: complex = 0j) -> complex:
    """Received baseband sample: sum of coefficient*symbol plus noise."""
    total = 0j
    for coefficient, symbol in contributions:
        total += coefficient * symbol
    return total + noise


def _check_distances(distances: np.ndarray):
    off = ~np.eye(distances.shape[-1], dtype=bool)
    if np.any(~(distances[..., off] > 0)):
        raise DomainError("off-diagonal distances must be > 0")


def link_std(distances: np.ndarray, cfg: FadingConfig) -> np.ndarray:
    """Per-quadrature fading std for every ordered pair, zero on the diagonal."""
    distances = np.asarray(distances, dtype=float)
    _check_distances(distances)
    S = distances.shape[-1]
    eye = np.eye(S, dtype=bool)
    return np.where(eye, 0.0, fading_std(np.where(eye, 1.0, distances), cfg.pathloss_exp))


def draw_from_std(std: np.ndarray, rng: np.random.Generator, reciprocal: bool = False) -> np.ndarray:
    """Coefficients with the given per-link std; a zero std gives a zero coefficient."""
    h = rng.normal(size=std.shape) * std + 1j * (rng.normal(size=std.shape) * std)
    if reciprocal:
        upper = np.triu(h, 1)
        h = upper + np.swapaxes(upper, -1, -2)
    return h


def draw_channel_batch(distances: np.ndarray, cfg: FadingConfig, rng: np.random.Generator) -> np.ndarray:
    """Independent coefficient matrices for a stack of ``(R, S, S)`` geometries."""
    return draw_from_std(link_std(distances, cfg), rng, cfg.reciprocal)


def draw_round_channels(group_size: int, distances, cfg: FadingConfig, round: int,
                        rng: np.random.Generator) -> ChannelMatrix:
    """One coefficient per ordered pair, held over the whole RB of ``round``."""
    distances = np.asarray(distances, dtype=float)
    if distances.shape != (group_size, group_size):
        raise DomainError(f"distances must be {group_size}x{group_size}, got {distances.shape}")
    return ChannelMatrix(draw_channel_batch(distances, cfg, rng), round)


def coherence_report(relative_speed: float, delay_spread: float, group_size: int,
                     cfg: FadingConfig = FadingConfig()) -> CoherenceReport:
    if not relative_speed > 0 or not delay_spread > 0:
        raise DomainError("relative_speed and delay_spread must be > 0")
    if group_size < 2:
        raise DomainError(f"group_size must be >= 2, got {group_size}")
    tc = SPEED_OF_LIGHT / (cfg.carrier_freq * relative_speed)
    bc = 1.0 / delay_spread
    t_span = 2.0 * cfg.symbol_duration
    f_span = cfg.subcarrier_spacing * 2.0 ** (group_size - 2)
    return CoherenceReport(
        coherence_time=tc,
        coherence_bandwidth=bc,
        rb_time_span=t_span,
        rb_freq_span=f_span,
        flat_fading_ok=(t_span <= tc and f_span <= bc),
        group_size_ok=group_size <= MAX_GROUP_SIZE,
    )
