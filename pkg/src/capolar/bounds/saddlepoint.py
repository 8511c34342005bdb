"""Saddlepoint approximation of ``P[sum_i z_i >= omega]`` for independent z_i.

Each ``z_i`` is ``g_i(a)`` for ``a`` uniform over a finite input set, so its
cumulant generating function and the first two derivatives have closed forms

    gamma_i(zeta)   = log mean_a exp(zeta g_i(a))
    gamma_i'(zeta)  = E_zeta[g_i]
    gamma_i''(zeta) = Var_zeta[g_i]

under the tilted law ``w_a ~ exp(zeta g_i(a))``. With ``zeta`` the root of
``sum gamma_i'(zeta) = omega`` and ``V = sum gamma_i''(zeta)``, the tail is

    zeta > 0:  exp(K - zeta omega + zeta^2 V / 2) Q(zeta sqrt(V))
    zeta < 0:  1 - exp(K - zeta omega + zeta^2 V / 2) Q(-zeta sqrt(V))

with ``K = sum gamma_i(zeta)``. Here ``e^{t^2} Q(sqrt(2) t)`` is folded into
``erfcx`` so that neither factor overflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import erfcx

__all__ = [
    "SaddlepointQuery",
    "TailResult",
    "cgf_terms",
    "saddlepoint_tail",
    "saddlepoint_tail_cgf",
    "log_tail_batch",
    "log_mgf_batch",
    "ZETA0",
]

ZETA0 = 50.0
ZETA_TOL = 1e-10
ZETA_SMALL = 1e-6
_LN2 = math.log(2.0)

# flags
OK, BELOW, ABOVE, ATOM = 0, 1, 2, 3


def cgf_terms(g, zeta):
    """``(gamma, gamma', gamma'')`` of ``g(a)``, ``a`` uniform over the last axis.

    Broadcasts over leading axes of ``g``; max-subtracted for stability.
    """
    g = np.asarray(g, dtype=np.float64)
    t = zeta * g
    shift = t.max(axis=-1, keepdims=True)
    w = np.exp(t - shift)
    S = w.sum(axis=-1)
    m1 = (g * w).sum(axis=-1) / S
    var = (((g - m1[..., None]) ** 2) * w).sum(axis=-1) / S
    gam = shift[..., 0] + np.log(S / g.shape[-1])
    return gam, m1, var


@njit(cache=True, inline="always")
def _log_half_erfcx(t):
    # log(0.5 * erfcx(t)) = log Q(sqrt(2) t) + t^2
    if t < 25.0:
        return math.log(0.5 * math.erfc(t)) + t * t
    u = 1.0 / (t * t)
    series = 1.0 - 0.5 * u + 0.75 * u * u - 1.875 * u * u * u + 6.5625 * u * u * u * u
    return math.log(0.5 * series / (t * math.sqrt(math.pi)))


@njit(cache=True)
def _cgf_sum(g, zeta):
    n, M = g.shape
    K = 0.0
    d1 = 0.0
    d2 = 0.0
    if M == 2:
        # binary inputs: logistic form, one exp and one log1p per position
        for i in range(n):
            d = g[i, 1] - g[i, 0]
            t = zeta * d
            if t > 0:
                e = math.exp(-t)
                sp = t + math.log1p(e)
                p1 = 1.0 / (1.0 + e)
            else:
                e = math.exp(t)
                sp = math.log1p(e)
                p1 = e / (1.0 + e)
            K += zeta * g[i, 0] + sp - _LN2
            d1 += g[i, 0] + d * p1
            d2 += d * d * p1 * (1.0 - p1)
        return K, d1, d2
    for i in range(n):
        ref = g[i, 0]
        shift = 0.0
        for a in range(1, M):
            v = zeta * (g[i, a] - ref)
            if v > shift:
                shift = v
        S = 0.0
        m1 = 0.0
        m2 = 0.0
        for a in range(M):
            d = g[i, a] - ref
            w = math.exp(zeta * d - shift)
            S += w
            m1 += w * d
            m2 += w * d * d
        m1 /= S
        K += zeta * ref + shift + math.log(S / M)
        d1 += ref + m1
        d2 += max(m2 / S - m1 * m1, 0.0)
    return K, d1, d2


@njit(cache=True)
def _log_tail_one(g, omega, zeta0):
    """(log P[sum z >= omega], flag, zeta) for one table ``g`` of shape (n, M)."""
    n, M = g.shape
    smax = 0.0
    smin = 0.0
    atom = 0.0
    for i in range(n):
        mx = g[i, 0]
        mn = g[i, 0]
        for a in range(1, M):
            mx = max(mx, g[i, a])
            mn = min(mn, g[i, a])
        cnt = 0
        for a in range(M):
            if g[i, a] >= mx - 1e-12 * max(1.0, abs(mx)):
                cnt += 1
        smax += mx
        smin += mn
        atom += math.log(cnt / M)
    tol = 1e-9 * max(1.0, abs(omega))
    if omega > smax + tol:
        return -np.inf, ABOVE, np.inf
    if omega >= smax - tol:
        # only the all-argmax configuration reaches omega
        return atom, ATOM, np.inf
    if omega <= smin:
        return 0.0, BELOW, -np.inf

    # a root exists since smin < omega < smax; Newton safeguarded by bisection
    lo = -zeta0
    hi = zeta0
    zeta = 1.0
    K, d1, d2 = _cgf_sum(g, zeta)
    for _ in range(200):
        h = d1 - omega
        if h > 0:
            hi = zeta
        else:
            lo = zeta
        nz = zeta - h / d2 if d2 > 0 else 0.5 * (lo + hi)
        if not (lo < nz < hi):
            nz = 0.5 * (lo + hi)
        done = abs(nz - zeta) < ZETA_TOL or hi - lo < ZETA_TOL
        zeta = nz
        K, d1, d2 = _cgf_sum(g, zeta)
        if done:
            break
    if zeta >= zeta0 - ZETA_TOL:
        return -np.inf, ABOVE, zeta
    if zeta <= -zeta0 + ZETA_TOL:
        return 0.0, BELOW, zeta

    z = zeta * math.sqrt(d2)
    base = K - zeta * d1
    if zeta > -ZETA_SMALL:
        lp = base + _log_half_erfcx(z / math.sqrt(2.0))
        return min(lp, 0.0), OK, zeta
    c = math.exp(base + _log_half_erfcx(-z / math.sqrt(2.0)))
    if c >= 1.0:
        return -np.inf, OK, zeta
    return math.log1p(-c), OK, zeta


@njit(cache=True)
def log_tail_batch(G, omega, zeta0=ZETA0):
    """Vectorized tail over samples: ``G`` (B, n, M), ``omega`` (B,).

    Returns (log_p, flags, zeta).
    """
    B = G.shape[0]
    out = np.empty(B)
    flags = np.empty(B, dtype=np.int64)
    zetas = np.empty(B)
    for b in range(B):
        lp, f, z = _log_tail_one(G[b], omega[b], zeta0)
        out[b] = lp
        flags[b] = f
        zetas[b] = z
    return out, flags, zetas


@njit(cache=True)
def log_mgf_batch(G, s):
    """``sum_i log mean_a exp(s g_i(a))`` per sample."""
    B = G.shape[0]
    out = np.empty(B)
    for b in range(B):
        K, _, _ = _cgf_sum(G[b], s)
        out[b] = K
    return out


@dataclass
class SaddlepointQuery:
    """Per-position log-likelihood table ``g`` (n, |X|) and a threshold ``omega``."""

    g: np.ndarray
    omega: float
    zeta_bracket: float = ZETA0

    def __post_init__(self):
        self.g = np.ascontiguousarray(self.g, dtype=np.float64)
        if self.g.ndim != 2 or self.g.shape[1] < 2:
            raise ValueError("g must be an (n, |X|) table with |X| >= 2")
        if not np.all(np.isfinite(self.g)):
            raise ValueError("g values must be finite")


@dataclass
class TailResult:
    prob: float
    log_prob: float
    zeta: float
    flag: str  # "ok", "saturated_low" (prob 1), "saturated_high" (prob 0), "top_atom"


_FLAG_NAMES = {OK: "ok", BELOW: "saturated_low", ABOVE: "saturated_high", ATOM: "top_atom"}


def saddlepoint_tail(q: SaddlepointQuery) -> TailResult:
    """Approximate ``P[sum_i z_i >= omega]`` with ``z_i = g_i(a_i)``, ``a_i`` uniform."""
    lp, flag, zeta = _log_tail_one(q.g, float(q.omega), float(q.zeta_bracket))
    return TailResult(float(np.exp(lp)), float(lp), float(zeta), _FLAG_NAMES[int(flag)])


def saddlepoint_tail_cgf(cgf, omega: float, zeta0: float = ZETA0) -> TailResult:
    """Same approximation for an arbitrary summed CGF.

    ``cgf(zeta)`` returns ``(gamma, gamma', gamma'')`` of the sum.
    """
    from scipy.optimize import brentq

    f = lambda z: cgf(z)[1] - omega  # noqa: E731
    flo, fhi = f(-zeta0), f(zeta0)
    if flo > 0:
        return TailResult(1.0, 0.0, -zeta0, "saturated_low")
    if fhi < 0:
        return TailResult(0.0, -np.inf, zeta0, "saturated_high")
    zeta = brentq(f, -zeta0, zeta0, xtol=ZETA_TOL, rtol=4 * np.finfo(float).eps)
    K, d1, d2 = cgf(zeta)
    z = zeta * np.sqrt(d2)
    base = K - zeta * d1
    if zeta > -ZETA_SMALL:
        p = np.exp(base) * 0.5 * erfcx(z / np.sqrt(2))
    else:
        p = 1.0 - np.exp(base) * 0.5 * erfcx(-z / np.sqrt(2))
    p = float(np.clip(p, 0.0, 1.0))
    return TailResult(p, float(np.log(p)) if p > 0 else -np.inf, float(zeta), "ok")
