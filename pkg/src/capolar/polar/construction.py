"""Polar code construction by Gaussian-approximation density evolution."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["PolarCode", "design_ga", "ga_mean_llrs", "save_frozen", "load_frozen"]

_A, _B, _G = 0.4527, 0.86, 0.0218


def log_phi(x):
    """Log of the two-piece phi approximation (Chung et al.) used for GA density evolution."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    small = (x > 0) & (x < 10)
    big = x >= 10
    out[small] = -_A * x[small] ** _B + _G
    xb = x[big]
    out[big] = _log_phi_large(xb)
    return out


def _log_phi_large(x):
    return 0.5 * np.log(np.pi / x) - x / 4 + np.log1p(-10.0 / (7.0 * x))


# the two pieces do not meet at 10 (phi jumps up slightly); inverses prefer
# the small-x piece whenever it has a solution
_LOG_PHI_SMALL_END = -_A * 10.0**_B + _G


def _check_node_mean(m):
    # phi^{-1}(1 - (1 - phi(m))^2), in the log domain
    m = np.asarray(m, dtype=float)
    lp = log_phi(m)
    target = lp + np.log(2.0 - np.exp(lp))
    out = np.zeros_like(m)
    small = target >= _LOG_PHI_SMALL_END
    out[small] = ((_G - target[small]) / _A) ** (1.0 / _B)
    big = ~small & (m > 0)
    if np.any(big):
        t = target[big]
        lo = np.full(t.shape, 10.0)
        hi = np.maximum(m[big], 10.0)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            too_reliable = _log_phi_large(mid) < t
            hi = np.where(too_reliable, mid, hi)
            lo = np.where(too_reliable, lo, mid)
            if np.all(hi - lo <= 1e-13 * hi):
                break
        out[big] = 0.5 * (lo + hi)
    out[m <= 0] = 0.0
    return out


def ga_mean_llrs(n_c: int, design_snr_db: float, rate: float) -> np.ndarray:
    """Mean LLR of each synthetic channel (natural index order) on BPSK-AWGN.

    ``design_snr_db`` is Eb/N0 at ``rate`` information bits per coded bit.
    """
    sigma2 = 1.0 / (2.0 * rate * 10 ** (design_snr_db / 10))
    mu = np.array([2.0 / sigma2])
    while mu.size < n_c:
        nxt = np.empty(2 * mu.size)
        # the first split acts on the raw channel and ends up as the index MSB
        nxt[0::2] = _check_node_mean(mu)
        nxt[1::2] = 2.0 * mu
        mu = nxt
    return mu


@dataclass(frozen=True)
class PolarCode:
    """Inner polar code: blocklength ``n_c`` bits with ``h`` unfrozen positions."""

    n_c: int
    h: int
    frozen_set: tuple[int, ...]
    reliability_order: tuple[int, ...] = ()
    design_snr_db: float | None = None
    info_indices: np.ndarray = field(init=False, repr=False, compare=False)
    frozen_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_c < 1 or self.n_c & (self.n_c - 1):
            raise ValueError(f"n_c must be a power of two, got {self.n_c}")
        if not 0 < self.h <= self.n_c:
            raise ValueError(f"need 0 < h <= n_c, got h={self.h}")
        frozen = tuple(sorted(int(i) for i in self.frozen_set))
        if len(frozen) != self.n_c - self.h or len(set(frozen)) != len(frozen):
            raise ValueError("frozen set must hold n_c - h distinct indices")
        if frozen and not (0 <= frozen[0] and frozen[-1] < self.n_c):
            raise ValueError("frozen index out of range")
        object.__setattr__(self, "frozen_set", frozen)
        mask = np.zeros(self.n_c, dtype=np.bool_)
        mask[list(frozen)] = True
        mask.setflags(write=False)
        info = np.flatnonzero(~mask)
        info.setflags(write=False)
        object.__setattr__(self, "frozen_mask", mask)
        object.__setattr__(self, "info_indices", info)

    @property
    def rate(self) -> float:
        return self.h / self.n_c

    @property
    def m(self) -> int:
        return self.n_c.bit_length() - 1


def design_ga(n_c: int, h: int, design_snr_db: float, rate: float | None = None) -> PolarCode:
    """Freeze the ``n_c - h`` least reliable synthetic channels under GA density evolution.

    Parameters
    ----------
    n_c, h : int
        Blocklength (power of two) and number of unfrozen bits.
    design_snr_db : float
        Design Eb/N0 in dB.
    rate : float, optional
        Information bits per coded bit used to convert Eb/N0 to noise
        variance. Defaults to ``h / n_c``.
    """
    if n_c < 1 or n_c & (n_c - 1):
        raise ValueError(f"n_c must be a power of two, got {n_c}")
    if not 0 < h <= n_c:
        raise ValueError(f"need 0 < h <= n_c, got h={h}")
    mu = ga_mean_llrs(n_c, design_snr_db, h / n_c if rate is None else rate)
    order = np.argsort(mu, kind="stable")  # least reliable first
    frozen = tuple(int(i) for i in order[: n_c - h])
    return PolarCode(n_c, h, frozen, tuple(int(i) for i in order), float(design_snr_db))


def save_frozen(code: PolarCode, path) -> None:
    """Write the frozen set as sorted indices, one per line."""
    Path(path).write_text("".join(f"{i}\n" for i in code.frozen_set))


def load_frozen(path, n_c: int) -> PolarCode:
    idx = [int(tok) for tok in Path(path).read_text().split()]
    return PolarCode(n_c, n_c - len(idx), tuple(idx))
