"""Minimum Eb/N0 at which a bound meets a pair of targets (eps_t*, eps_u*)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..channels import snr_to_sigma
from .families import BiAwgnFamily
from .forney import forney_bound, quantize_biawgn
from .rcu import BoundEvaluator, _mean_se, _rcu_terms, _thm2_from_state

__all__ = ["ThresholdResult", "delta_for_targets", "fit_lambda", "thm2_optimize", "snr_threshold_bound"]

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class ThresholdResult:
    which: str
    ebn0_db: float | None
    params: dict = field(default_factory=dict)
    samples: int = 0
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.ebn0_db is not None

    def as_dict(self) -> dict:
        return {"which": self.which, "ebn0_db": self.ebn0_db, "found": self.found, "params": self.params,
                "samples": self.samples, "reason": self.reason}


def delta_for_targets(eps_t: float, eps_u: float) -> int:
    """``ceil(log2(eps_t / eps_u))``; guards against round-off at exact powers of two."""
    r = math.log2(eps_t / eps_u)
    return max(0, math.ceil(r - 1e-12))


def _check_targets(eps_t, eps_u):
    if not (0 < eps_u <= eps_t < 1):
        raise ValueError("need 0 < eps_u* <= eps_t* < 1")


# ---------------------------------------------------------------- Theorem 2 search


def fit_lambda(st, k: int, s: float, eps_u: float, tol: float = 1e-4):
    """Smallest ``lambda`` with ``eps_u(lambda) <= eps_u*`` on the sample set in ``st``.

    ``eps_u`` is non-increasing and ``eps_t`` non-decreasing in ``lambda``, so
    the smallest feasible ``lambda`` also gives the smallest ``eps_t``.
    Returns ``(lam, eps_t, se_t, eps_u, se_u)``.
    """
    r = _thm2_from_state(st, k, s, -np.inf)
    if r[2] <= eps_u:
        return (-np.inf, *r)
    iota = st.iota(s)
    lo = float(iota.min()) / st.n - 1.0  # psi_tilde = psi below every iota
    hi = max(lo + 1.0, float(iota.max()) / st.n + 1.0)
    # above every iota all thresholds sit at or beyond the largest likelihood; widen until feasible
    for _ in range(60):
        if _thm2_from_state(st, k, s, hi)[2] <= eps_u:
            break
        hi += max(1.0, hi - lo)
    else:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _thm2_from_state(st, k, s, mid)[2] <= eps_u:
            hi = mid
        else:
            lo = mid
    mt, set_, mu, seu = _thm2_from_state(st, k, s, hi)
    return hi, mt, set_, mu, seu


def thm2_optimize(st, k: int, eps_u: float, s: float | None = None, s_max: float = 2.0, s_tol: float = 1e-3):
    """Fit ``lambda`` for a fixed ``s``, or golden-section search ``s`` in ``(0, s_max]`` for the smallest eps_t."""

    def at(sv):
        r = fit_lambda(st, k, sv, eps_u)
        return (np.inf, None) if r is None else (r[1], r)

    if s is not None:
        return float(s), at(float(s))[1]
    a, b = 1e-3, float(s_max)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, rc = at(c)
    fd, rd = at(d)
    while b - a > s_tol:
        if fc <= fd:
            b, d, fd, rd = d, c, fc, rc
            c = b - GOLDEN * (b - a)
            fc, rc = at(c)
        else:
            a, c, fc, rc = c, d, fd, rd
            d = a + GOLDEN * (b - a)
            fd, rd = at(d)
    return (c, rc) if fc <= fd else (d, rd)


# ---------------------------------------------------------------- driver


def _bisect(passes, lo, hi, tol):
    """Smallest passing SNR in ``[lo, hi]`` assuming ``passes`` is monotone."""
    ok_hi, info_hi = passes(hi)
    if not ok_hi:
        return None, None, f"targets not met at the top of the bracket ({hi} dB)"
    ok_lo, info_lo = passes(lo)
    if ok_lo:
        return lo, info_lo, f"targets already met at the bottom of the bracket ({lo} dB)"
    best = info_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok, info = passes(mid)
        if ok:
            hi, best = mid, info
        else:
            lo = mid
    return hi, best, ""


def snr_threshold_bound(
    which: str,
    n: int,
    k: int,
    eps_t: float,
    eps_u: float,
    family=None,
    bracket: tuple[float, float] = (-2.0, 10.0),
    tol: float = 0.01,
    samples: int = 100_000,
    seed: int = 0,
    s: float | None = None,
    s_max: float = 2.0,
    levels: int = 2000,
    max_samples: int | None = None,
    evaluator: BoundEvaluator | None = None,
) -> ThresholdResult:
    """Threshold search for ``which`` in {"thm1", "thm2", "forney"}.

    ``n`` counts channel uses, ``k`` information bits, so Eb/N0 uses rate k/n.
    For "thm2", ``s=None`` optimizes ``s`` at every SNR. With ``max_samples``
    the sample count doubles until the relative standard error at the
    threshold is below 10% (Monte Carlo bounds only).
    """
    _check_targets(eps_t, eps_u)
    which = which.lower()
    rate = k / n
    lo, hi = bracket
    family = family if family is not None else BiAwgnFamily()

    if which == "forney":
        T = math.log2(eps_t / eps_u) / n

        def passes(snr):
            dmc = quantize_biawgn(snr_to_sigma(snr, rate), levels)
            r = forney_bound(n, rate, T, dmc)
            return r.eps_t <= eps_t, {"T": T, "eps_t": r.eps_t, "eps_u": r.eps_u, "E1": r.params["E1"]}

        snr, info, reason = _bisect(passes, lo, hi, tol)
        return ThresholdResult("forney", snr, info or {"T": T}, 0, reason)

    if which not in ("thm1", "thm2"):
        raise ValueError(f"unknown bound {which!r}")
    ev = evaluator if evaluator is not None else BoundEvaluator(family, n, samples, seed)

    while True:
        if which == "thm1":
            delta = delta_for_targets(eps_t, eps_u)

            def passes(snr):
                st = ev.state(snr_to_sigma(snr, rate))
                m, se = _mean_se(_rcu_terms(st.logpsi, k + delta))
                info = {"delta": delta, "eps_t": m, "eps_u": m * 2.0**-delta, "se_t": se, "se_u": se * 2.0**-delta}
                return m <= eps_t, info

        else:

            def passes(snr):
                st = ev.state(snr_to_sigma(snr, rate))
                sv, r = thm2_optimize(st, k, eps_u, s=s, s_max=s_max)
                if r is None:
                    return False, {"s": sv}
                lam, mt, set_, mu, seu = r
                info = {"s": sv, "lambda": lam, "eps_t": mt, "eps_u": mu, "se_t": set_, "se_u": seu}
                return mt <= eps_t, info

        snr, info, reason = _bisect(passes, lo, hi, tol)
        if snr is None or max_samples is None or ev.samples * 2 > max_samples:
            break
        rel = max(info["se_t"] / max(info["eps_t"], 1e-300), info["se_u"] / max(info["eps_u"], 1e-300))
        if rel < 0.1:
            break
        ev = ev.with_samples(ev.samples * 2)
    return ThresholdResult(which, snr, info or {}, ev.samples, reason)
