"""biAWGN/BPSK and block-memoryless phase-noise/QPSK channels.

Both models use ``Eb/N0 = 1 / (2 R sigma^2)`` with ``R`` information bits per
channel use and ``sigma^2`` the noise variance per real dimension.

The phase-noise receiver decodes with the mismatched metric

    q(y, x, theta_hat) = exp(-|y - e^{j theta_hat} x|^2 / (2 sigma^2)) / (2 pi sigma^2)

where ``theta_hat`` is the pilot-based ML estimate of the block phase.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "ChannelKind",
    "ChannelConfig",
    "ConfigurationError",
    "ObservationBlock",
    "QPSK",
    "snr_to_sigma",
    "sigma_to_snr",
    "bpsk_modulate",
    "qpsk_modulate",
    "pilot_symbols",
    "transmit_biawgn",
    "transmit_phase_noise",
    "estimate_phase_ml",
    "mismatched_loglik",
    "biawgn_loglik_table",
    "qpsk_loglik_table",
    "bit_llrs_from_table",
    "observe",
]

_S = np.sqrt(0.5)
# Gray map, index = 2*b_I + b_Q, bit 0 -> +, bit 1 -> -
QPSK = np.array([_S + 1j * _S, _S - 1j * _S, -_S + 1j * _S, -_S - 1j * _S])


class ConfigurationError(ValueError):
    """Channel parameters that cannot describe a valid simulation."""


class ChannelKind(str, Enum):
    BIAWGN = "biawgn"
    PHASE_NOISE = "phase_noise"


def snr_to_sigma(ebn0_db: float, rate_bpcu: float) -> float:
    """Noise standard deviation per real dimension for a given Eb/N0 in dB."""
    if not rate_bpcu > 0:
        raise ValueError(f"rate must be positive, got {rate_bpcu}")
    return float(np.sqrt(1.0 / (2.0 * rate_bpcu * 10.0 ** (ebn0_db / 10.0))))


def sigma_to_snr(sigma: float, rate_bpcu: float) -> float:
    if not rate_bpcu > 0:
        raise ValueError(f"rate must be positive, got {rate_bpcu}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return float(10.0 * np.log10(1.0 / (2.0 * rate_bpcu * sigma**2)))


@dataclass(frozen=True)
class ChannelConfig:
    """Channel law and operating point.

    ``rate_bpcu`` is only used to convert between ``sigma`` and Eb/N0.
    """

    kind: ChannelKind
    sigma: float
    rate_bpcu: float
    n_pilots: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not self.rate_bpcu > 0:
            raise ConfigurationError(f"rate must be positive, got {self.rate_bpcu}")
        if self.n_pilots < 0:
            raise ConfigurationError("n_pilots must be >= 0")
        if self.kind is ChannelKind.PHASE_NOISE and self.n_pilots == 0:
            raise ConfigurationError("phase-noise decoding needs at least one pilot for the phase estimate")

    @classmethod
    def from_ebn0(cls, kind, ebn0_db: float, rate_bpcu: float, n_pilots: int = 0) -> "ChannelConfig":
        return cls(kind, snr_to_sigma(ebn0_db, rate_bpcu), rate_bpcu, n_pilots)

    @property
    def ebn0_db(self) -> float:
        return sigma_to_snr(self.sigma, self.rate_bpcu)

    @property
    def bits_per_symbol(self) -> int:
        return 1 if self.kind is ChannelKind.BIAWGN else 2


@dataclass
class ObservationBlock:
    """One received block.

    ``symbol_logliks`` has shape (n, M): natural-log likelihood of every
    constellation point at every position, indexed as in the bit mapping.
    """

    payload_obs: np.ndarray
    symbol_logliks: np.ndarray
    pilot_obs: np.ndarray | None = None
    theta_true: float | None = None
    theta_hat: float | None = None

    @property
    def bit_llrs(self) -> np.ndarray:
        return bit_llrs_from_table(self.symbol_logliks)


def bpsk_modulate(bits) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def qpsk_modulate(bits) -> np.ndarray:
    """Gray QPSK, in-phase bit first; an odd number of bits is an error."""
    b = np.asarray(bits, dtype=np.int64)
    if b.shape[-1] % 2:
        raise ValueError("QPSK needs an even number of bits")
    g = b.reshape(*b.shape[:-1], -1, 2)
    return QPSK[2 * g[..., 0] + g[..., 1]]


def pilot_symbols(n_pilots: int) -> np.ndarray:
    return np.full(n_pilots, QPSK[0])


def biawgn_loglik_table(y, sigma: float) -> np.ndarray:
    """log N(y; +1, sigma^2) and log N(y; -1, sigma^2) per position."""
    y = np.asarray(y, dtype=np.float64)
    c = -0.5 * np.log(2 * np.pi * sigma**2)
    return np.stack([c - (y - 1.0) ** 2 / (2 * sigma**2), c - (y + 1.0) ** 2 / (2 * sigma**2)], axis=-1)


def mismatched_loglik(y, x, theta_hat: float, sigma: float):
    """log q(y, x, theta_hat); broadcasts over ``y`` and ``x``."""
    d = np.asarray(y) - np.exp(1j * theta_hat) * np.asarray(x)
    return -np.log(2 * np.pi * sigma**2) - (d.real**2 + d.imag**2) / (2 * sigma**2)


def qpsk_loglik_table(y, theta_hat: float, sigma: float) -> np.ndarray:
    y = np.asarray(y)
    return mismatched_loglik(y[..., None], QPSK, theta_hat, sigma)


def bit_llrs_from_table(table) -> np.ndarray:
    """Per-bit LLRs ``log P(y|b=0) - log P(y|b=1)`` by marginalizing the symbol table.

    Bits come out MSB first within each symbol, matching the modulators.
    Exact for the metrics used here since they factor over the bits.
    """
    table = np.asarray(table, dtype=np.float64)
    M = table.shape[-1]
    bps = M.bit_length() - 1
    if M == 2:
        return table[..., 0] - table[..., 1]
    idx = np.arange(M)
    out = np.empty(table.shape[:-1] + (bps,))
    for j in range(bps):
        one = (idx >> (bps - 1 - j)) & 1 == 1
        out[..., j] = logsumexp(table[..., ~one], axis=-1) - logsumexp(table[..., one], axis=-1)
    return out.reshape(*table.shape[:-2], -1)


def transmit_biawgn(x_bits, sigma: float, rng: np.random.Generator) -> ObservationBlock:
    """BPSK over real AWGN with variance ``sigma**2``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = bpsk_modulate(x_bits)
    y = x + sigma * rng.standard_normal(x.shape)
    return ObservationBlock(y, biawgn_loglik_table(y, sigma))


def estimate_phase_ml(pilot_obs, pilot_syms) -> float:
    """ML phase estimate ``arg sum_p y_p conj(s_p)`` under a block-constant phase."""
    pilot_obs = np.asarray(pilot_obs)
    if pilot_obs.size == 0:
        raise ConfigurationError("phase estimation needs at least one pilot")
    return float(np.angle(np.sum(pilot_obs * np.conj(pilot_syms))))


def transmit_phase_noise(
    x_syms, sigma: float, n_pilots: int, rng: np.random.Generator, theta: float | None = None
) -> ObservationBlock:
    """Block-memoryless phase noise: ``y = e^{j theta} x + z`` for payload and pilots.

    ``theta`` is drawn uniformly on [0, 2 pi) unless given. Noise is
    circular complex Gaussian with variance ``sigma**2`` per component.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if n_pilots < 1:
        raise ConfigurationError("phase-noise transmission needs at least one pilot")
    x = np.asarray(x_syms, dtype=np.complex128)
    if theta is None:
        theta = rng.uniform(0.0, 2 * np.pi)
    rot = np.exp(1j * theta)
    p = pilot_symbols(n_pilots)
    z = sigma * rng.standard_normal((2, x.size + n_pilots))
    noise = z[0] + 1j * z[1]
    y = rot * x + noise[: x.size]
    yp = rot * p + noise[x.size :]
    theta_hat = estimate_phase_ml(yp, p)
    return ObservationBlock(y, qpsk_loglik_table(y, theta_hat, sigma), yp, float(theta), theta_hat)


def observe(x_bits, config: ChannelConfig, rng: np.random.Generator, theta: float | None = None) -> ObservationBlock:
    """Modulate coded bits per ``config`` and pass them through the channel."""
    if config.kind is ChannelKind.BIAWGN:
        return transmit_biawgn(x_bits, config.sigma, rng)
    return transmit_phase_noise(qpsk_modulate(x_bits), config.sigma, config.n_pilots, rng, theta)
