"""Forney's erasure/list exponents for discrete memoryless channels.

    E0(s, rho) = -log2 sum_y (sum_x P(x) P(y|x)^{1-s}) (sum_x' P(x') P(y|x')^{s/rho})^rho
    E1(R, T)   = max_{0 <= s <= rho <= 1} E0(s, rho) - rho R - s T
    E2(R, T)   = E1(R, T) + T

with rates and thresholds in bits per channel use.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp
from scipy.stats import norm

from .rcu import BoundResult

__all__ = ["DmcSpec", "quantize_biawgn", "forney_e0", "forney_exponents", "forney_bound"]

LN2 = np.log(2.0)


@dataclass(frozen=True)
class DmcSpec:
    input_probs: np.ndarray
    transition: np.ndarray  # (|X|, |Y|), rows P(.|x)
    log_transition: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.asarray(self.input_probs, dtype=np.float64)
        W = np.asarray(self.transition, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] != p.size:
            raise ValueError("transition must be (|X|, |Y|) with one row per input")
        if abs(p.sum() - 1) > 1e-12 or np.any(p < 0):
            raise ValueError("input_probs must be a probability vector")
        if np.any(np.abs(W.sum(axis=1) - 1) > 1e-12) or np.any(W < 0):
            raise ValueError("transition rows must be probability vectors")
        object.__setattr__(self, "input_probs", p)
        object.__setattr__(self, "transition", W)
        with np.errstate(divide="ignore"):
            object.__setattr__(self, "log_transition", np.log(W))


def quantize_biawgn(sigma: float, levels: int = 2000, span_sigmas: float = 8.0) -> DmcSpec:
    """BPSK over AWGN with the output cut into ``levels`` bins.

    ``levels - 2`` uniform bins cover ``[-(1 + span_sigmas sigma), 1 + span_sigmas sigma]``
    and two tail bins take the rest. Inputs are uniform over {+1, -1}.
    """
    if levels < 2:
        raise ValueError("need at least two output levels")
    a = 1.0 + span_sigmas * sigma
    edges = np.concatenate([[-np.inf], np.linspace(-a, a, levels - 1), [np.inf]])
    rows = []
    for mean in (1.0, -1.0):
        # upper-tail differences keep precision in both tails
        sf = norm.sf(edges, loc=mean, scale=sigma)
        cdf = norm.cdf(edges, loc=mean, scale=sigma)
        row = np.where(edges[1:] <= mean, np.diff(cdf), -np.diff(sf))
        rows.append(row / row.sum())
    return DmcSpec(np.array([0.5, 0.5]), np.array(rows))


def _e0_grid(s, rho, dmc: DmcSpec):
    # vectorized over broadcast (s, rho); returns E0 in bits
    s = np.asarray(s, dtype=np.float64)[..., None, None]
    rho = np.asarray(rho, dtype=np.float64)[..., None, None]
    logW = dmc.log_transition  # (X, Y)
    logp = np.log(dmc.input_probs)[:, None]
    with np.errstate(invalid="ignore"):
        a = logsumexp(logp + (1 - s) * logW, axis=-2)
        b = logsumexp(logp + np.where(np.isfinite(logW), (s / rho) * logW, -np.inf), axis=-2)
    total = logsumexp(a + rho[..., 0, :] * b, axis=-1)
    return -total / LN2


def forney_e0(s: float, rho: float, dmc: DmcSpec) -> float:
    if not (0 <= s <= rho <= 1 and rho > 0):
        raise ValueError(f"need 0 <= s <= rho <= 1 and rho > 0, got s={s}, rho={rho}")
    return float(_e0_grid(s, rho, dmc))


def forney_exponents(R: float, T: float, dmc: DmcSpec, grid: int = 64) -> tuple[float, float]:
    """``(E1, E2)`` in bits; grid search on the triangle then Nelder-Mead."""
    if not R > 0:
        raise ValueError("R must be positive")
    if T < 0:
        raise ValueError("T must be >= 0")
    r = np.linspace(1.0 / grid, 1.0, grid)
    u = np.linspace(0.0, 1.0, grid)
    RHO, U = np.meshgrid(r, u, indexing="ij")
    S = U * RHO
    vals = _e0_grid(S, RHO, dmc) - RHO * R - S * T
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    best = max(float(vals[i, j]), 0.0)  # s = rho -> 0 gives 0

    # refine in (rho, s/rho) coordinates, which map the unit square onto the triangle
    def neg(p):
        rho = float(np.clip(p[0], 1e-9, 1.0))
        frac = float(np.clip(p[1], 0.0, 1.0))
        return -(float(_e0_grid(frac * rho, rho, dmc)) - rho * R - frac * rho * T)

    res = minimize(neg, [RHO[i, j], U[i, j]], method="Nelder-Mead", options={"xatol": 1e-7, "fatol": 1e-12})
    best = max(best, -float(res.fun))
    return best, best + T


def forney_bound(n: int, R: float, T: float, dmc: DmcSpec) -> BoundResult:
    """``eps_t = 2^{-n E1}``, ``eps_u = 2^{-n E2}``."""
    E1, E2 = forney_exponents(R, T, dmc)
    return BoundResult(
        float(2.0 ** (-n * E1)), float(2.0 ** (-n * E2)), {"n": n, "R": R, "T": T, "E1": E1, "E2": E2}
    )
