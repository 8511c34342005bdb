"""Monte Carlo engine.

Trials are grouped in fixed chunks of consecutive trial indices. Trial ``t``
draws its message and channel realization from a Philox stream keyed by
``(seed, t)``, so results depend on the trial set only, never on how chunks
are spread over worker processes. Chunks are merged strictly in index order
and stopping rules are checked after each chunk, which makes a run with any
worker count identical to a single-process run.

One SCL decode per trial is scored against every detector parameter at once:
the reference decoder, Algorithm A for each ``delta1``, and Algorithm B
through the per-trial ``log2 Lambda`` value, which fixes the decision for any
threshold ``T``.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ..channels import observe
from ..crc import crc_encode, crc_syndrome
from ..detectors import DISABLED, Scheme
from ..polar import bits_to_symbol_index, polar_encode, scl_decode_batch
from .jobs import SimJob, SimResult
from .stats import clopper_pearson

__all__ = ["TrialStats", "trial_rng", "run_chunk", "run_campaign", "run_montecarlo"]

LN2 = np.log(2.0)
CORRECT, ERASURE, UNDETECTED = 0, 1, 2


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial: Philox keyed by ``seed * 2^64 + trial``."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(trial)))


@dataclass
class TrialStats:
    """Outcome counts of a set of trials for every detector parameter.

    ``ref`` and ``alg_a[d1]`` hold (correct, erasure, undetected) counts.
    ``lam_correct`` / ``lam_wrong`` hold ``log2 Lambda`` of the most likely
    CRC-valid candidate when it is right / wrong (``inf`` for a singleton);
    trials without such a candidate are erasures for every ``T``.
    """

    n_uses: int
    delta: int
    trials: int = 0
    ref: np.ndarray = None
    alg_a: np.ndarray = None
    lam_correct: np.ndarray = None
    lam_wrong: np.ndarray = None

    def __post_init__(self):
        if self.ref is None:
            self.ref = np.zeros(3, dtype=np.int64)
        if self.alg_a is None:
            self.alg_a = np.zeros((self.delta + 1, 3), dtype=np.int64)
        if self.lam_correct is None:
            self.lam_correct = np.zeros(0)
        if self.lam_wrong is None:
            self.lam_wrong = np.zeros(0)

    def merge(self, other: "TrialStats") -> "TrialStats":
        return TrialStats(
            self.n_uses,
            self.delta,
            self.trials + other.trials,
            self.ref + other.ref,
            self.alg_a + other.alg_a,
            np.concatenate([self.lam_correct, other.lam_correct]),
            np.concatenate([self.lam_wrong, other.lam_wrong]),
        )

    # -- per-parameter counts: (trials, total_errors, undetected_errors)

    def counts_reference(self):
        return self.trials, int(self.ref[ERASURE] + self.ref[UNDETECTED]), int(self.ref[UNDETECTED])

    def counts_alg_a(self, delta1: int):
        c = self.alg_a[delta1]
        return self.trials, int(c[ERASURE] + c[UNDETECTED]), int(c[UNDETECTED])

    def counts_alg_b(self, T):
        if T is DISABLED:
            und = len(self.lam_wrong)
            ok = len(self.lam_correct)
        else:
            thr = self.n_uses * T
            und = int(np.count_nonzero(self.lam_wrong >= thr))
            ok = int(np.count_nonzero(self.lam_correct >= thr))
        return self.trials, self.trials - ok, und

    def counts(self, scheme, delta1=None, T=DISABLED):
        scheme = Scheme(scheme)
        if scheme is Scheme.REFERENCE:
            return self.counts_reference()
        if scheme is Scheme.ALG_A:
            return self.counts_alg_a(delta1)
        return self.counts_alg_b(T)


# ---------------------------------------------------------------- one chunk

_CTX = {}


def _context(job: SimJob):
    key = id(job), job
    if _CTX.get("key") != key:
        code, crc = job.code.build()
        _CTX.clear()
        _CTX.update(key=key, code=code, crc=crc)
    return _CTX["code"], _CTX["crc"]


def _first_argmax(ll, mask):
    v = np.where(mask, ll, -np.inf)
    best = np.argmax(v, axis=1)
    return best, mask.any(axis=1)


def run_chunk(job: SimJob, ebn0_db: float, start: int, size: int) -> TrialStats:
    """Simulate trials ``start .. start + size - 1`` at ``ebn0_db``."""
    code, crc = _context(job)
    ch = job.channel.at(ebn0_db, job.code)
    k, delta, L = crc.message_len, crc.delta, job.detector.list_size
    rngs = [trial_rng(job.seed, t) for t in range(start, start + size)]
    msgs = np.stack([r.integers(0, 2, k, dtype=np.uint8) for r in rngs])
    x = polar_encode(crc_encode(msgs, crc), code)
    tables, llrs = [], []
    for b, r in enumerate(rngs):
        obs = observe(x[b], ch, r)
        tables.append(obs.symbol_logliks)
        llrs.append(obs.bit_llrs)
    tables = np.stack(tables)  # (B, n_uses, M)
    words, _, counts = scl_decode_batch(np.stack(llrs), code, L)

    B = size
    valid = np.arange(L)[None, :] < counts[:, None]
    # exact log-likelihoods of the re-encoded survivors
    sym = bits_to_symbol_index(polar_encode(words, code), job.channel.bits_per_symbol)
    ll = np.take_along_axis(tables[:, None, :, :], sym[..., None], axis=-1)[..., 0].sum(-1)
    ll = np.where(valid, ll, -np.inf)
    if not np.all(np.isfinite(ll[valid])):
        raise RuntimeError("non-finite codeword likelihood")
    syn = crc_syndrome(words, crc).astype(bool) if delta else np.zeros((B, L, 0), dtype=bool)
    right = np.all(words[..., :k] == msgs[:, None, :], axis=-1)
    rows = np.arange(B)

    stats = TrialStats(tables.shape[1], delta, B)

    def tally(best, accept):
        out = np.full(B, ERASURE)
        out[accept] = np.where(right[rows, best][accept], CORRECT, UNDETECTED)
        return np.bincount(out, minlength=3)

    ok = valid & ~syn.any(-1)
    best, has = _first_argmax(ll, ok)
    stats.ref = tally(best, has)
    for d1 in range(delta + 1):
        prune = valid & ~syn[..., :d1].any(-1)
        b1, h1 = _first_argmax(ll, prune)
        accept = h1 & ~syn[rows, b1, d1:].any(-1)
        stats.alg_a[d1] = tally(b1, accept)

    # Algorithm B: log2 Lambda of the best CRC-valid candidate
    others = ok.copy()
    others[rows, best] = False
    denom = logsumexp(np.where(others, ll, -np.inf), axis=1)
    with np.errstate(invalid="ignore"):
        lam = np.where(others.any(1), (ll[rows, best] - denom) / LN2, np.inf)
    good = right[rows, best]
    stats.lam_correct = lam[has & good]
    stats.lam_wrong = lam[has & ~good]
    return stats


# ---------------------------------------------------------------- campaigns


def _pool_init():
    _CTX.clear()


def run_campaign(job: SimJob, ebn0_db: float, stop, workers: int = 1, max_trials: int | None = None):
    """Run chunks in trial order until ``stop(stats)`` is true or ``max_trials``.

    Returns ``(stats, stopped)`` where ``stopped`` tells whether the rule fired.
    """
    max_trials = job.stopping.max_trials if max_trials is None else max_trials
    total = TrialStats(1, job.code.crc_spec().delta)
    first = True
    starts = range(0, max_trials, job.chunk)

    def size(s):
        return min(job.chunk, max_trials - s)

    def take(st):
        nonlocal total, first
        total = st if first else total.merge(st)
        first = False
        return stop(total)

    if workers <= 1:
        for s in starts:
            if take(run_chunk(job, ebn0_db, s, size(s))):
                return total, True
        return total, False

    with ProcessPoolExecutor(workers, initializer=_pool_init) as ex:
        it = iter(starts)
        pending = []
        for s in it:
            pending.append(ex.submit(run_chunk, job, ebn0_db, s, size(s)))
            if len(pending) >= 2 * workers:
                break
        while pending:
            st = pending.pop(0).result()
            if take(st):
                for f in pending:
                    f.cancel()
                return total, True
            nxt = next(it, None)
            if nxt is not None:
                pending.append(ex.submit(run_chunk, job, ebn0_db, nxt, size(nxt)))
    return total, False


def result_from_counts(trials, total, und, params, wall=0.0, status="ok") -> SimResult:
    return SimResult(
        trials,
        total,
        und,
        total / trials if trials else float("nan"),
        und / trials if trials else float("nan"),
        clopper_pearson(total, trials),
        clopper_pearson(und, trials),
        params,
        wall,
        status,
    )


def run_montecarlo(job: SimJob, workers: int = 1, ebn0_db: float | None = None) -> SimResult:
    """Simulate the job's detector at one operating point under its stopping rule."""
    ebn0_db = job.ebn0_db if ebn0_db is None else ebn0_db
    if ebn0_db is None:
        raise ValueError("job has no operating point (ebn0_db)")
    det = job.detector
    rule = job.stopping

    def stop(st):
        _, tot, und = st.counts(det.scheme, det.delta1, det.threshold_T)
        return und >= rule.min_undetected or tot >= rule.min_total

    t0 = time.perf_counter()
    stats, stopped = run_campaign(job, ebn0_db, stop, workers)
    n, tot, und = stats.counts(det.scheme, det.delta1, det.threshold_T)
    params = {"ebn0_db": ebn0_db, "delta1": det.delta1, "threshold_T": det.threshold_T}
    return result_from_counts(n, tot, und, params, time.perf_counter() - t0, "ok" if stopped else "budget_exhausted")
