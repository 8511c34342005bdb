"""Systematic CRC outer code and its split into list-pruning and detection checks.

Polynomials are written as hex literals that include the leading ``x^Δ`` term,
most significant bit first, so ``0x43`` is ``x^6 + x + 1``.  Encoding is plain
polynomial division: zero register, no reflection, no final XOR.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CrcSpec",
    "OuterSplit",
    "parse_polynomial",
    "crc_encode",
    "crc_check",
    "crc_syndrome",
    "split_outer",
    "check_prune",
    "check_detect",
]


def parse_polynomial(poly) -> tuple[int, ...]:
    """Return the coefficient bits (MSB first) of a CRC generator.

    Accepts a hex string such as ``"0x89"``, an ``int``, or a bit sequence.
    """
    if isinstance(poly, str):
        poly = int(poly, 16)
    if isinstance(poly, (int, np.integer)):
        value = int(poly)
        if value < 1:
            raise ValueError("CRC polynomial must be a positive integer")
        return tuple(int(b) for b in bin(value)[2:])
    bits = tuple(int(b) for b in poly)
    if not bits or bits[0] != 1 or any(b not in (0, 1) for b in bits):
        raise ValueError("polynomial bits must be 0/1 with a leading 1")
    return bits


def _parity_matrix(poly: tuple[int, ...], k: int) -> np.ndarray:
    # row i holds the parity bits of the unit message e_i (long division of x^(k-1-i+Δ))
    delta = len(poly) - 1
    P = np.zeros((k, delta), dtype=np.uint8)
    if delta == 0:
        return P
    g = np.array(poly[1:], dtype=np.uint8)
    # remainder of x^(Δ+j) for j = 0..k-1, filled from the last message bit upwards
    rem = g.copy()  # x^Δ mod g
    for j in range(k):
        P[k - 1 - j] = rem
        msb = rem[0]
        rem = np.roll(rem, -1)
        rem[-1] = 0
        if msb:
            rem ^= g
    return P


@dataclass(frozen=True)
class CrcSpec:
    """An ``(k + delta, k)`` systematic CRC code.

    ``delta == 0`` (polynomial ``(1,)``) is the no-outer-code case.
    """

    polynomial: tuple[int, ...]
    message_len: int
    delta: int = field(init=False)
    parity_matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        poly = parse_polynomial(self.polynomial)
        if self.message_len < 1:
            raise ValueError("message_len must be positive")
        object.__setattr__(self, "polynomial", poly)
        object.__setattr__(self, "delta", len(poly) - 1)
        P = _parity_matrix(poly, self.message_len)
        P.setflags(write=False)
        object.__setattr__(self, "parity_matrix", P)

    @classmethod
    def from_hex(cls, poly: str | int, message_len: int) -> "CrcSpec":
        return cls(parse_polynomial(poly), message_len)

    @classmethod
    def none(cls, message_len: int) -> "CrcSpec":
        return cls((1,), message_len)

    @property
    def codeword_len(self) -> int:
        return self.message_len + self.delta

    @property
    def hex(self) -> str:
        return hex(int("".join(map(str, self.polynomial)), 2))


def _as_bits(word, length: int, what: str) -> np.ndarray:
    arr = np.asarray(word, dtype=np.uint8)
    if arr.ndim == 0 or arr.shape[-1] != length:
        raise ValueError(f"{what} must have length {length}, got shape {arr.shape}")
    return arr


def crc_encode(msg, spec: CrcSpec) -> np.ndarray:
    """Append the ``delta`` CRC parity bits to ``msg`` (batched over leading axes)."""
    m = _as_bits(msg, spec.message_len, "message")
    parity = (m.astype(np.int64) @ spec.parity_matrix) & 1
    return np.concatenate([m, parity.astype(np.uint8)], axis=-1)


def crc_syndrome(word, spec: CrcSpec) -> np.ndarray:
    """Per-equation parity-check residuals; all zero iff ``word`` is a codeword.

    Equation ``j`` reads ``p_j + sum_i m_i P[i, j] = 0`` over GF(2).
    """
    w = _as_bits(word, spec.codeword_len, "word")
    k = spec.message_len
    recomputed = (w[..., :k].astype(np.int64) @ spec.parity_matrix) & 1
    return (recomputed.astype(np.uint8) ^ w[..., k:]).astype(np.uint8)


def crc_check(word, spec: CrcSpec):
    """True iff ``word`` belongs to the CRC code."""
    syn = crc_syndrome(word, spec)
    ok = ~syn.any(axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


@dataclass(frozen=True)
class OuterSplit:
    """Partition of the CRC parity equations into pruning and detection sets.

    Rows are indexed in parity-bit order. The pruning set is the first
    ``delta1`` rows and the detection set the remaining ``delta2`` rows, so
    together they are exactly the base code's parity checks.
    """

    base: CrcSpec
    delta1: int
    prune_rows: tuple[int, ...] = field(init=False)
    detect_rows: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if not 0 <= self.delta1 <= self.base.delta:
            raise ValueError(f"delta1 must lie in [0, {self.base.delta}], got {self.delta1}")
        rows = tuple(range(self.base.delta))
        object.__setattr__(self, "prune_rows", rows[: self.delta1])
        object.__setattr__(self, "detect_rows", rows[self.delta1 :])

    @property
    def delta2(self) -> int:
        return self.base.delta - self.delta1

    @property
    def constraint_partition(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.prune_rows, self.detect_rows


def split_outer(spec: CrcSpec, delta1: int) -> OuterSplit:
    return OuterSplit(spec, int(delta1))


def _rows_ok(word, spec: CrcSpec, rows: tuple[int, ...]):
    syn = crc_syndrome(word, spec)
    ok = ~syn[..., list(rows)].any(axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


def check_prune(word, split: OuterSplit):
    """Evaluate only the ``delta1`` list-pruning equations."""
    return _rows_ok(word, split.base, split.prune_rows)


def check_detect(word, split: OuterSplit):
    """Evaluate only the ``delta2`` error-detection equations."""
    return _rows_ok(word, split.base, split.detect_rows)
