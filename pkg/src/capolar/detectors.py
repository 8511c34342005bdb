"""Decoding strategies with erasure option for CRC-aided polar codes.

All three schemes share one SCL run followed by CRC expurgation:

* reference: most likely survivor that satisfies every CRC equation;
* Algorithm A: expurgate with the pruning equations only, then accept the
  most likely survivor iff it satisfies the detection equations;
* Algorithm B: expurgate with the full CRC, then accept the most likely
  survivor iff its list-restricted Forney ratio reaches ``2^{nT}``.

Decision rules are exposed as pure functions of the candidates'
log-likelihoods and CRC syndromes so that one list can be scored against many
detector parameters.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .channels import ObservationBlock
from .crc import CrcSpec, OuterSplit, crc_syndrome
from .polar import PolarCode, codeword_loglik, polar_encode, scl_decode

__all__ = [
    "Scheme",
    "Verdict",
    "DISABLED",
    "DetectorConfig",
    "DecodeOutcome",
    "CandidateList",
    "classify",
    "candidate_list",
    "score_candidates",
    "log2_lambda_scl",
    "decide_reference",
    "decide_alg_a",
    "decide_alg_b",
    "decode",
    "decode_reference",
    "decode_alg_a",
    "decode_alg_b",
]

LN2 = np.log(2.0)


class Scheme(str, Enum):
    REFERENCE = "reference"
    ALG_A = "alg_a"
    ALG_B = "alg_b"


class Verdict(str, Enum):
    CORRECT = "correct"
    ERASURE = "erasure"
    UNDETECTED = "undetected"


class _Disabled:
    """Threshold sentinel: the test always passes (as if ``T = -inf``)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DISABLED"

    def __reduce__(self):
        return (_Disabled, ())


DISABLED = _Disabled()


@dataclass(frozen=True)
class DetectorConfig:
    scheme: Scheme
    list_size: int
    delta1: int | None = None
    threshold_T: float | _Disabled = DISABLED

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.list_size < 1:
            raise ValueError("list_size must be >= 1")
        if self.scheme is Scheme.ALG_A and self.delta1 is None:
            raise ValueError("Algorithm A needs delta1")
        if self.threshold_T is not DISABLED and not self.threshold_T >= 0:
            raise ValueError("threshold_T must be >= 0 or DISABLED")


@dataclass
class DecodeOutcome:
    """Result of one decoding trial.

    ``verdict`` is None when the transmitted message was not supplied.
    """

    verdict: Verdict | None
    accepted_word: np.ndarray | None


def classify(accepted, truth) -> Verdict:
    if accepted is None:
        return Verdict.ERASURE
    return Verdict.CORRECT if np.array_equal(np.asarray(accepted), np.asarray(truth)) else Verdict.UNDETECTED


@dataclass
class CandidateList:
    """SCL survivors with exact codeword log-likelihoods and CRC syndromes.

    ``words`` are inner information words ``v`` (message then CRC parity),
    in decoder order (best path metric first).
    """

    words: np.ndarray  # (count, h)
    logliks: np.ndarray  # (count,) natural log P(y | ENC(v))
    syndromes: np.ndarray  # (count, delta)
    n_uses: int

    def __len__(self):
        return len(self.logliks)


def candidate_list(obs: ObservationBlock, code: PolarCode, crc: CrcSpec, list_size: int) -> CandidateList:
    """Run SCL on ``obs`` and score the survivors."""
    if code.h != crc.codeword_len:
        raise ValueError(f"inner code carries {code.h} bits but the CRC codeword has {crc.codeword_len}")
    res = scl_decode(obs.bit_llrs, code, list_size)
    return score_candidates(res.words, obs.symbol_logliks, code, crc)


def score_candidates(words, symbol_logliks, code: PolarCode, crc: CrcSpec) -> CandidateList:
    words = np.asarray(words, dtype=np.uint8)
    ll = codeword_loglik(polar_encode(words, code), symbol_logliks)
    ll = np.atleast_1d(np.asarray(ll, dtype=np.float64))
    if not np.all(np.isfinite(ll)):
        raise RuntimeError("non-finite codeword likelihood")
    syn = crc_syndrome(words, crc) if len(words) else np.zeros((0, crc.delta), dtype=np.uint8)
    return CandidateList(words, ll, syn, int(np.shape(symbol_logliks)[0]))


def _argmax_where(ll, mask):
    # first maximum in list order among masked entries, None if the mask is empty
    if not mask.any():
        return None
    idx = np.flatnonzero(mask)
    return int(idx[np.argmax(ll[idx])])


def log2_lambda_scl(ll, mask, best: int) -> float:
    """``log2`` of the list-restricted Forney ratio for candidate ``best``.

    ``+inf`` when ``best`` is the only masked candidate.
    """
    others = mask.copy()
    others[best] = False
    if not others.any():
        return np.inf
    return float((ll[best] - logsumexp(ll[others])) / LN2)


def decide_reference(cands: CandidateList) -> int | None:
    """Index of the accepted candidate or None for an erasure."""
    ok = ~cands.syndromes.any(axis=1)
    return _argmax_where(cands.logliks, ok)


def decide_alg_a(cands: CandidateList, split: OuterSplit) -> int | None:
    prune = list(split.prune_rows)
    detect = list(split.detect_rows)
    ok = ~cands.syndromes[:, prune].any(axis=1)
    best = _argmax_where(cands.logliks, ok)
    if best is None or cands.syndromes[best, detect].any():
        return None
    return best


def decide_alg_b(cands: CandidateList, threshold_T=DISABLED) -> int | None:
    ok = ~cands.syndromes.any(axis=1)
    best = _argmax_where(cands.logliks, ok)
    if best is None or threshold_T is DISABLED or ok.sum() == 1:
        return best
    lam = log2_lambda_scl(cands.logliks, ok, best)
    return best if lam >= cands.n_uses * threshold_T else None


def _outcome(cands: CandidateList, idx, crc: CrcSpec, truth) -> DecodeOutcome:
    word = None if idx is None else cands.words[idx, : crc.message_len].copy()
    verdict = None if truth is None else classify(word, truth)
    return DecodeOutcome(verdict, word)


def decode_reference(obs, code, crc: CrcSpec, list_size: int, truth=None) -> DecodeOutcome:
    """Reference SCL + CRC decoder. ``truth`` (the sent message) fills in the verdict."""
    cands = candidate_list(obs, code, crc, list_size)
    return _outcome(cands, decide_reference(cands), crc, truth)


def decode_alg_a(obs, code, split: OuterSplit, list_size: int, truth=None) -> DecodeOutcome:
    cands = candidate_list(obs, code, split.base, list_size)
    return _outcome(cands, decide_alg_a(cands, split), split.base, truth)


def decode_alg_b(obs, code, crc: CrcSpec, list_size: int, threshold_T=DISABLED, truth=None) -> DecodeOutcome:
    if threshold_T is not DISABLED and not threshold_T >= 0:
        raise ValueError("threshold_T must be >= 0 or DISABLED")
    cands = candidate_list(obs, code, crc, list_size)
    return _outcome(cands, decide_alg_b(cands, threshold_T), crc, truth)


def decode(obs, code, crc: CrcSpec, config: DetectorConfig, truth=None) -> DecodeOutcome:
    """Dispatch on ``config.scheme``."""
    if config.scheme is Scheme.REFERENCE:
        return decode_reference(obs, code, crc, config.list_size, truth)
    if config.scheme is Scheme.ALG_A:
        return decode_alg_a(obs, code, OuterSplit(crc, config.delta1), config.list_size, truth)
    return decode_alg_b(obs, code, crc, config.list_size, config.threshold_T, truth)
