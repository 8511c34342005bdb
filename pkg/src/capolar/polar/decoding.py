"""Successive cancellation list decoding and codeword likelihoods."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import scl_batch
from .construction import PolarCode

__all__ = ["DecoderList", "scl_decode", "scl_decode_batch", "codeword_loglik", "bits_to_symbol_index"]


@dataclass
class DecoderList:
    """Survivors of one SCL run, best first.

    ``logliks`` are natural-log likelihoods of the re-encoded candidates up
    to one additive constant shared by every entry.
    """

    words: np.ndarray  # (count, h) uint8
    logliks: np.ndarray  # (count,)

    def __len__(self):
        return len(self.logliks)


def _check_llrs(llrs, n_c):
    llrs = np.ascontiguousarray(llrs, dtype=np.float64)
    if llrs.shape[-1] != n_c:
        raise ValueError(f"expected {n_c} LLRs per block, got shape {llrs.shape}")
    if not np.all(np.isfinite(llrs)):
        raise ValueError("LLRs must be finite")
    return llrs


def scl_decode_batch(llrs, code: PolarCode, list_size: int):
    """Decode a (B, n_c) batch. Returns (words, logliks, counts) arrays.

    ``words`` has shape (B, L, h), ``logliks`` (B, L) with ``-inf`` padding
    past ``counts[b]``.
    """
    if list_size < 1:
        raise ValueError("list size must be >= 1")
    llrs = _check_llrs(llrs, code.n_c)
    if llrs.ndim != 2:
        raise ValueError("batch decode expects a 2-D array")
    B = llrs.shape[0]
    L = int(list_size)
    words = np.zeros((B, L, code.h), dtype=np.uint8)
    logliks = np.full((B, L), -np.inf)
    counts = np.zeros(B, dtype=np.int64)
    frozen = np.ascontiguousarray(code.frozen_mask)
    scl_batch(llrs, frozen, L, words, logliks, counts)
    return words, logliks, counts


def scl_decode(symbol_llrs, code: PolarCode, list_size: int) -> DecoderList:
    """SCL decoding of one block of bit LLRs ``log P(y|0) / P(y|1)``.

    Exact log-domain updates; ties in path selection go to the lower path
    index, so the output is a deterministic function of the input.
    """
    llrs = _check_llrs(symbol_llrs, code.n_c)
    if llrs.ndim != 1:
        raise ValueError("scl_decode expects a single block; use scl_decode_batch")
    words, logliks, counts = scl_decode_batch(llrs[None, :], code, list_size)
    c = counts[0]
    return DecoderList(words[0, :c].copy(), logliks[0, :c].copy())


def bits_to_symbol_index(x, bits_per_symbol: int) -> np.ndarray:
    """Group coded bits MSB-first into constellation indices."""
    x = np.asarray(x, dtype=np.int64)
    if bits_per_symbol == 1:
        return x
    if x.shape[-1] % bits_per_symbol:
        raise ValueError("codeword length is not a multiple of bits per symbol")
    g = x.reshape(*x.shape[:-1], -1, bits_per_symbol)
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1)
    return g @ weights


def codeword_loglik(x, symbol_logliks) -> np.ndarray | float:
    """Sum of per-position log-likelihoods of codeword(s) ``x``.

    ``symbol_logliks`` has shape (n, M) with M a power of two; bits of ``x``
    are grouped MSB-first into constellation indices. Batched over the
    leading axes of ``x``.
    """
    table = np.asarray(symbol_logliks, dtype=float)
    if table.ndim != 2:
        raise ValueError("symbol_logliks must be a 2-D (n, M) table")
    n, M = table.shape
    bps = M.bit_length() - 1
    if M != 1 << bps or bps < 1:
        raise ValueError("constellation size must be a power of two >= 2")
    sym = bits_to_symbol_index(x, bps)
    if sym.shape[-1] != n:
        raise ValueError(f"codeword maps to {sym.shape[-1]} symbols, table has {n}")
    vals = np.take_along_axis(np.broadcast_to(table, sym.shape + (M,)), sym[..., None], axis=-1)[..., 0]
    out = vals.sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out
