"""Channel families for bound evaluation.

A family turns SNR-free random draws into per-sample tables ``g[b, i, a]`` of
(possibly mismatched) log-likelihoods ``log P(y_i | a)`` over the input set
together with the transmitted input indices. Draws depend only on the RNG, so
the same draws can be re-scaled to any noise level (common random numbers).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channels import QPSK, ChannelConfig, ChannelKind, pilot_symbols

__all__ = [
    "BiAwgnFamily",
    "QpskAwgnFamily",
    "PhaseNoiseFamily",
    "BiAwgnChannel",
    "QpskChannel",
    "mismatched_bound_adapter",
    "family_for",
]


class BiAwgnChannel:
    """Memoryless BPSK channel for a fixed ``sigma``; inputs indexed 0 -> +1, 1 -> -1."""

    alphabet = np.array([1.0, -1.0])

    def __init__(self, sigma: float):
        self.sigma = float(sigma)

    def log_table(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        c = -0.5 * np.log(2 * np.pi * self.sigma**2)
        return c - (y[..., None] - self.alphabet) ** 2 / (2 * self.sigma**2)


class QpskChannel:
    """Complex AWGN with Gray QPSK, decoded with phase estimate ``theta_hat``.

    ``theta_hat = 0`` on a channel without rotation is the matched case.
    """

    alphabet = QPSK

    def __init__(self, sigma: float, theta_hat: float = 0.0):
        self.sigma = float(sigma)
        self.theta_hat = float(theta_hat)

    def log_table(self, y) -> np.ndarray:
        y = np.asarray(y)
        d = y[..., None] - np.exp(1j * self.theta_hat) * QPSK
        return -np.log(2 * np.pi * self.sigma**2) - (d.real**2 + d.imag**2) / (2 * self.sigma**2)


@dataclass(frozen=True)
class BiAwgnFamily:
    """BPSK over real AWGN; one real noise sample per channel use."""

    M: int = 2
    bits_per_symbol: int = 1

    def draw(self, rng: np.random.Generator, n: int, size: int) -> dict:
        return {"x": rng.integers(0, 2, (size, n)), "z": rng.standard_normal((size, n))}

    def tables(self, draws: dict, sigma: float):
        x = draws["x"]
        y = BiAwgnChannel.alphabet[x] + sigma * draws["z"]
        return BiAwgnChannel(sigma).log_table(y), x


@dataclass(frozen=True)
class QpskAwgnFamily:
    """Gray QPSK over complex AWGN with perfect phase knowledge."""

    M: int = 4
    bits_per_symbol: int = 2

    def draw(self, rng, n, size):
        return {"x": rng.integers(0, 4, (size, n)), "z": rng.standard_normal((size, n, 2))}

    def tables(self, draws, sigma):
        x = draws["x"]
        z = draws["z"]
        y = QPSK[x] + sigma * (z[..., 0] + 1j * z[..., 1])
        return QpskChannel(sigma).log_table(y), x


@dataclass(frozen=True)
class PhaseNoiseFamily:
    """Block-memoryless phase noise with pilot-based ML phase estimate.

    Each sample draws a phase, payload and pilot noise; likelihoods use the
    mismatched metric with that sample's estimate, so averaging over samples
    averages over the phase and its estimate. ``ideal_csi`` sets the estimate
    to the true phase.
    """

    n_pilots: int
    ideal_csi: bool = False
    M: int = 4
    bits_per_symbol: int = 2

    def __post_init__(self):
        if self.n_pilots < 1 and not self.ideal_csi:
            raise ValueError("mismatched evaluation needs at least one pilot")

    def draw(self, rng, n, size):
        return {
            "x": rng.integers(0, 4, (size, n)),
            "theta": rng.uniform(0.0, 2 * np.pi, size),
            "z": rng.standard_normal((size, n + self.n_pilots, 2)),
        }

    def tables(self, draws, sigma):
        x = draws["x"]
        n = x.shape[1]
        rot = np.exp(1j * draws["theta"])[:, None]
        z = sigma * (draws["z"][..., 0] + 1j * draws["z"][..., 1])
        y = rot * QPSK[x] + z[:, :n]
        if self.ideal_csi:
            theta_hat = draws["theta"]
        else:
            p = pilot_symbols(self.n_pilots)
            yp = rot * p + z[:, n:]
            theta_hat = np.angle(np.sum(yp * np.conj(p), axis=1))
        d = y[..., None] - np.exp(1j * theta_hat)[:, None, None] * QPSK
        g = -np.log(2 * np.pi * sigma**2) - (d.real**2 + d.imag**2) / (2 * sigma**2)
        return g, x


def mismatched_bound_adapter(config: ChannelConfig) -> PhaseNoiseFamily:
    """Bound family for a phase-noise configuration (mismatched pilot-based decoding)."""
    if config.kind is not ChannelKind.PHASE_NOISE:
        raise ValueError("adapter applies to phase-noise configurations")
    return PhaseNoiseFamily(config.n_pilots)


def family_for(kind, n_pilots: int = 0):
    kind = ChannelKind(kind)
    if kind is ChannelKind.BIAWGN:
        return BiAwgnFamily()
    return PhaseNoiseFamily(n_pilots)
