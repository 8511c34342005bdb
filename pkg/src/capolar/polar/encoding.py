"""Arikan transform encoding (natural order, no bit reversal)."""
from __future__ import annotations

import numpy as np

from .construction import PolarCode

__all__ = ["polar_transform", "polar_encode", "generator_matrix"]


def polar_transform(u) -> np.ndarray:
    """Multiply by the m-fold Kronecker power of [[1, 0], [1, 1]] over GF(2).

    Works on the last axis, batched over leading axes.
    """
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    lead = x.shape[:-1]
    s = 1
    while s < n:
        blocks = x.reshape(*lead, n // (2 * s), 2, s)
        blocks[..., 0, :] ^= blocks[..., 1, :]
        s *= 2
    return x


def polar_encode(v, code: PolarCode) -> np.ndarray:
    """Place ``v`` on the unfrozen positions (zeros elsewhere) and transform."""
    v = np.asarray(v, dtype=np.uint8)
    if v.ndim == 0 or v.shape[-1] != code.h:
        raise ValueError(f"expected {code.h} information bits, got shape {v.shape}")
    u = np.zeros(v.shape[:-1] + (code.n_c,), dtype=np.uint8)
    u[..., code.info_indices] = v
    return polar_transform(u)


def generator_matrix(n_c: int) -> np.ndarray:
    """Explicit Kronecker-power matrix; for checks on small blocklengths."""
    F = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    G = np.ones((1, 1), dtype=np.uint8)
    while G.shape[0] < n_c:
        G = np.kron(G, F)
    return G
