"""Random-coding union bounds with CRC-style and threshold-style error detection.

Outer expectations over ``(x, y)`` are Monte Carlo averages; the inner
pairwise probabilities come from the saddlepoint approximation. All logs are
natural except the information density, which is in bits.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .saddlepoint import ATOM, SaddlepointQuery, log_mgf_batch, log_tail_batch, saddlepoint_tail

__all__ = [
    "BoundResult",
    "BoundEvaluator",
    "pairwise_psi",
    "pairwise_psi_tilde",
    "gen_info_density",
    "rcu",
    "thm1_bounds",
    "thm2_bounds",
]

LN2 = math.log(2.0)
REL_ERR_WARN = 0.2


@dataclass
class BoundResult:
    """``eps_t`` / ``eps_u`` pair with Monte Carlo standard errors.

    ``warning`` is set when the relative standard error of either estimate
    exceeds 20%.
    """

    eps_t: float
    eps_u: float
    params: dict = field(default_factory=dict)
    mc_std_err: float = 0.0
    mc_std_err_u: float = 0.0
    samples: int = 0
    warning: bool = False

    def as_dict(self) -> dict:
        return {
            "eps_t": self.eps_t,
            "eps_u": self.eps_u,
            "params": self.params,
            "mc_std_err": self.mc_std_err,
            "mc_std_err_u": self.mc_std_err_u,
            "samples": self.samples,
            "warning": self.warning,
        }


# ---------------------------------------------------------------- single (x, y)


def _table(x, y, channel):
    g = np.ascontiguousarray(channel.log_table(y), dtype=np.float64)
    x = np.asarray(x, dtype=np.int64)
    return g, float(g[np.arange(len(x)), x].sum())


def pairwise_psi(x, y, channel) -> float:
    """``P[P(y|xbar) >= P(y|x)]`` for ``xbar`` i.i.d. uniform; ``x`` holds input indices."""
    g, omega = _table(x, y, channel)
    return saddlepoint_tail(SaddlepointQuery(g, omega)).prob


def _log_lambda_tilde(g, n, s, lam):
    # log of (2^{n lam} E[P(y|xbar)^s])^{1/s}
    mgf = log_mgf_batch(g[None], s)[0]
    return (n * lam * LN2 + mgf) / s


def pairwise_psi_tilde(x, y, channel, s: float, lam: float) -> float:
    """``P[P(y|xbar) >= max(P(y|x), lambda_tilde)]``."""
    if not s > 0:
        raise ValueError("s must be positive")
    g, omega = _table(x, y, channel)
    omega = max(omega, _log_lambda_tilde(g, len(g), s, lam))
    return saddlepoint_tail(SaddlepointQuery(g, omega)).prob


def gen_info_density(x, y, s: float, channel) -> float:
    """``log2 P(y|x)^s / E[P(y|xbar)^s]`` with the expectation exact per position."""
    if not s > 0:
        raise ValueError("s must be positive")
    g, omega = _table(x, y, channel)
    return float((s * omega - log_mgf_batch(g[None], s)[0]) / LN2)


# ---------------------------------------------------------------- Monte Carlo


def _log_count(k: int) -> float:
    # log(2^k - 1)
    return k * LN2 + math.log1p(-(2.0 ** -k)) if k > 0 else -np.inf


def _rcu_terms(logpsi, k):
    return np.minimum(1.0, np.exp(np.minimum(_log_count(k) + logpsi, 0.0)))


def _mean_se(v):
    v = np.asarray(v, dtype=np.float64)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0


class _SigmaState:
    def __init__(self, G, x, n):
        self.G = G
        self.n = n
        B = G.shape[0]
        self.omega = G[np.arange(B)[:, None], np.arange(n)[None, :], x].sum(axis=1)
        self.logpsi, self.flags, _ = log_tail_batch(G, self.omega)
        self._mgf = {}

    def mgf(self, s):
        if s not in self._mgf:
            self._mgf[s] = log_mgf_batch(self.G, float(s))
        return self._mgf[s]

    def iota(self, s):
        """Generalized information density in bits per sample."""
        return (s * self.omega - self.mgf(s)) / LN2

    def logpsi_tilde(self, s, lam):
        # lambda_tilde exceeds P(y|x) exactly when iota_s < n lam
        out = self.logpsi.copy()
        if lam == -np.inf:
            return out
        mask = self.iota(s) < self.n * lam
        if mask.any():
            idx = np.flatnonzero(mask)
            om = (self.n * lam * LN2 + self.mgf(s)[idx]) / s
            out[idx] = log_tail_batch(np.ascontiguousarray(self.G[idx]), om)[0]
        return out


class BoundEvaluator:
    """Fixed Monte Carlo sample set for one channel family and blocklength.

    Samples are generated in chunks, each from its own seeded stream, so the
    set depends only on ``(seed, samples, chunk)``. Re-evaluating at another
    noise level reuses the same draws.
    """

    def __init__(self, family, n: int, samples: int = 100_000, seed: int = 0, chunk: int = 8192):
        self.family = family
        self.n = int(n)
        self.samples = int(samples)
        self.seed = int(seed)
        self.chunk = int(chunk)
        self._states: dict[float, _SigmaState] = {}

    def _draw_chunks(self):
        c = 0
        left = self.samples
        while left > 0:
            size = min(self.chunk, left)
            rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, 0xB0, c])))
            yield self.family.draw(rng, self.n, size)
            left -= size
            c += 1

    def state(self, sigma: float) -> _SigmaState:
        sigma = float(sigma)
        if sigma not in self._states:
            Gs, xs = [], []
            for draws in self._draw_chunks():
                G, x = self.family.tables(draws, sigma)
                Gs.append(G)
                xs.append(x)
            G = np.ascontiguousarray(np.concatenate(Gs), dtype=np.float64)
            # keep at most two noise levels in memory
            while len(self._states) >= 2:
                self._states.pop(next(iter(self._states)))
            self._states[sigma] = _SigmaState(G, np.concatenate(xs), self.n)
        return self._states[sigma]

    def with_samples(self, samples: int) -> "BoundEvaluator":
        return BoundEvaluator(self.family, self.n, samples, self.seed, self.chunk)


def _evaluator(family, n, samples, seed, evaluator):
    if evaluator is not None:
        if evaluator.n != n:
            raise ValueError("evaluator blocklength does not match n")
        return evaluator
    return BoundEvaluator(family, n, samples, seed)


def _finish(res: BoundResult) -> BoundResult:
    for m, se in ((res.eps_t, res.mc_std_err), (res.eps_u, res.mc_std_err_u)):
        if m > 0 and se / m > REL_ERR_WARN:
            res.warning = True
    if res.warning:
        warnings.warn(f"Monte Carlo relative error above {REL_ERR_WARN:.0%} with {res.samples} samples", stacklevel=3)
    return res


def rcu(k: int, n: int, family, sigma: float, mc_samples: int = 100_000, seed: int = 0, evaluator=None) -> BoundResult:
    """``E[min(1, (2^k - 1) psi)]`` reported as ``eps_t = eps_u``."""
    ev = _evaluator(family, n, mc_samples, seed, evaluator)
    st = ev.state(sigma)
    m, se = _mean_se(_rcu_terms(st.logpsi, k))
    return _finish(BoundResult(m, m, {"k": k, "n": n, "sigma": sigma}, se, se, ev.samples))


def thm1_bounds(
    k: int, n: int, delta: int, family, sigma: float, mc_samples: int = 100_000, seed: int = 0, evaluator=None
) -> BoundResult:
    """CRC outer-code bound: ``eps_t = RCU(k + delta, n)``, ``eps_u = eps_t 2^{-delta}``."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    ev = _evaluator(family, n, mc_samples, seed, evaluator)
    st = ev.state(sigma)
    m, se = _mean_se(_rcu_terms(st.logpsi, k + delta))
    scale = 2.0**-delta
    res = BoundResult(m, m * scale, {"k": k, "n": n, "delta": delta, "sigma": sigma}, se, se * scale, ev.samples)
    return _finish(res)


def _thm2_from_state(st, k, s, lam):
    iota = st.iota(s)
    accept = iota >= st.n * lam
    a = np.where(accept, _rcu_terms(st.logpsi, k), 1.0)
    u = _rcu_terms(st.logpsi_tilde(s, lam), k)
    mt, set_ = _mean_se(a)
    mu, seu = _mean_se(u)
    return mt, set_, mu, seu


def thm2_bounds(
    k: int,
    n: int,
    s: float,
    lam: float,
    family,
    sigma: float,
    mc_samples: int = 100_000,
    seed: int = 0,
    evaluator=None,
) -> BoundResult:
    """Information-density threshold bound.

    ``eps_t = E[min(1, (2^k-1) psi) 1{iota_s >= n lam}] + P[iota_s < n lam]`` and
    ``eps_u = E[min(1, (2^k-1) psi_tilde)]``, both on the same samples.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    ev = _evaluator(family, n, mc_samples, seed, evaluator)
    st = ev.state(sigma)
    mt, set_, mu, seu = _thm2_from_state(st, k, float(s), float(lam))
    return _finish(BoundResult(mt, mu, {"k": k, "n": n, "s": s, "lambda": lam, "sigma": sigma}, set_, seu, ev.samples))


def top_atom_fraction(evaluator: BoundEvaluator, sigma: float) -> float:
    """Share of samples whose threshold sits on the all-argmax atom (diagnostic)."""
    return float(np.mean(evaluator.state(sigma).flags == ATOM))
