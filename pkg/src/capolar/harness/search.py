"""SNR-threshold search for simulated schemes.

A point passes when, for some detector parameter, the upper ends of the 95%
Clopper-Pearson intervals of TEP and UEP are at most the targets. Parameters
are optimized on the same trials: ``delta1`` over ``0..delta`` for
Algorithm A, and for Algorithm B the smallest ``T >= 0`` whose UEP interval
clears the target (TEP grows with ``T``, so that ``T`` is optimal). Trial
streams are shared across SNR points.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..detectors import Scheme
from .engine import TrialStats, run_campaign
from .jobs import SimJob
from .stats import clopper_pearson

__all__ = ["ThresholdSimResult", "best_parameters", "snr_threshold_sim", "snr_thresholds_sim"]


@dataclass
class ThresholdSimResult:
    scheme: str
    ebn0_db: float | None
    params: dict = field(default_factory=dict)
    points: list = field(default_factory=list)
    reason: str = ""

    @property
    def found(self) -> bool:
        return self.ebn0_db is not None

    def as_dict(self) -> dict:
        return {"scheme": self.scheme, "ebn0_db": self.ebn0_db, "found": self.found, "params": self.params,
                "points": self.points, "reason": self.reason}


def _max_count_below(n: int, target: float) -> int:
    """Largest count ``c`` with Clopper-Pearson upper end ``<= target`` (-1 if none)."""
    if clopper_pearson(0, n)[1] > target:
        return -1
    lo, hi = 0, max(1, int(target * n) + 1)
    while clopper_pearson(hi, n)[1] <= target:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if clopper_pearson(mid, n)[1] <= target:
            lo = mid
        else:
            hi = mid
    return lo


def _alg_b_threshold(st: TrialStats, eps_u: float):
    """Smallest ``T >= 0`` meeting the UEP interval target, or None."""
    c = _max_count_below(st.trials, eps_u)
    if c < 0:
        return None
    w = np.sort(st.lam_wrong)[::-1]
    if len(w) <= c:
        return 0.0
    edge = w[c]
    if not np.isfinite(edge):
        return None
    return max(0.0, float(np.nextafter(edge / st.n_uses, np.inf)))


def _summary(n, tot, und, params):
    return {"params": params, "trials": n, "total_errors": tot, "undetected_errors": und,
            "tep_ci_hi": clopper_pearson(tot, n)[1], "uep_ci_hi": clopper_pearson(und, n)[1],
            "tep_ci_lo": clopper_pearson(tot, n)[0], "uep_ci_lo": clopper_pearson(und, n)[0]}


def best_parameters(st: TrialStats, scheme, targets) -> dict:
    """Best parameter choice for ``scheme`` on ``st`` with pass/fail/undecided status."""
    eps_t, eps_u = targets
    scheme = Scheme(scheme)
    if scheme is Scheme.REFERENCE:
        options = [_summary(*st.counts_reference(), {})]
    elif scheme is Scheme.ALG_A:
        options = [_summary(*st.counts_alg_a(d1), {"delta1": d1}) for d1 in range(st.delta + 1)]
    else:
        T = _alg_b_threshold(st, eps_u)
        options = [_summary(*st.counts_alg_b(0.0 if T is None else T), {"threshold_T": T})]
        # bounds over all T: TEP is smallest at T = 0, UEP smallest as T grows
        n = st.trials
        tep_lo = clopper_pearson(st.counts_alg_b(0.0)[1], n)[0]
        uep_floor = int(np.count_nonzero(np.isinf(st.lam_wrong)))
        uep_lo = clopper_pearson(uep_floor, n)[0]
    for o in options:
        o["passes"] = o["tep_ci_hi"] <= eps_t and o["uep_ci_hi"] <= eps_u and o["params"].get("threshold_T", 0) is not None
    passing = [o for o in options if o["passes"]]
    if passing:
        best = min(passing, key=lambda o: o["total_errors"])
        return {**best, "status": "pass"}
    if scheme is Scheme.ALG_B:
        failed = tep_lo > eps_t or uep_lo > eps_u
    else:
        failed = all(o["tep_ci_lo"] > eps_t or o["uep_ci_lo"] > eps_u for o in options)
    best = min(options, key=lambda o: (o["tep_ci_hi"] > eps_t) + (o["uep_ci_hi"] > eps_u))
    return {**best, "status": "fail" if failed else "undecided"}


def snr_thresholds_sim(
    job: SimJob,
    schemes=None,
    workers: int = 1,
    tol: float = 0.05,
    targets=None,
    bracket=None,
    log=None,
) -> dict:
    """Threshold search for several schemes sharing one set of decoded trials.

    Each SNR point runs until every scheme in ``schemes`` has passed or
    failed, or until ``job.stopping.max_trials``; an undecided point counts
    as failing. Returns ``{scheme: ThresholdSimResult}``.
    """
    targets = targets or job.targets
    bracket = bracket or job.bracket
    if targets is None or bracket is None:
        raise ValueError("threshold search needs targets and a bracket")
    schemes = [Scheme(s) for s in (schemes or [job.detector.scheme])]
    cache: dict[float, dict] = {}

    def point(snr):
        snr = round(float(snr), 6)
        if snr not in cache:
            t0 = time.perf_counter()

            def stop(st):
                return all(best_parameters(st, s, targets)["status"] != "undecided" for s in schemes)

            st, _ = run_campaign(job, snr, stop, workers)
            cache[snr] = {s: best_parameters(st, s, targets) for s in schemes}
            if log:
                msg = ", ".join(f"{s.value}:{cache[snr][s]['status']}" for s in schemes)
                log(f"{snr:.3f} dB  {st.trials} trials  {msg}  ({time.perf_counter() - t0:.1f}s)")
        return cache[snr]

    out = {}
    for s in schemes:
        lo, hi = bracket
        points = []

        def passes(snr):
            r = point(snr)[s]
            points.append({"ebn0_db": round(float(snr), 6), **r})
            return r["status"] == "pass", r

        ok, best = passes(hi)
        if not ok:
            out[s.value] = ThresholdSimResult(s.value, None, {}, points, f"no pass at the top of the bracket ({hi} dB)")
            continue
        ok_lo, r_lo = passes(lo)
        if ok_lo:
            out[s.value] = ThresholdSimResult(s.value, lo, r_lo["params"], points, f"passes at the bottom of the bracket ({lo} dB)")
            continue
        while hi - lo > tol + 1e-9:
            mid = 0.5 * (lo + hi)
            ok, r = passes(mid)
            if ok:
                hi, best = mid, r
            else:
                lo = mid
        out[s.value] = ThresholdSimResult(s.value, hi, best["params"], points)
    return out


def snr_threshold_sim(job: SimJob, workers: int = 1, tol: float = 0.05, targets=None, bracket=None, log=None):
    """Threshold of ``job.detector.scheme``; see :func:`snr_thresholds_sim`."""
    return snr_thresholds_sim(job, [job.detector.scheme], workers, tol, targets, bracket, log)[job.detector.scheme.value]

