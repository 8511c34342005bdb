"""Numba kernel for successive cancellation list decoding.

Array pools follow the lazy-copy layout of Tal and Vardy: each tree level owns
``L`` LLR arrays and ``L`` partial-sum arrays, paths hold references per level
and copy only on write. Metrics are exact (box-plus, softplus penalties), so
``-metric`` equals ``log P(y|x)`` up to a per-block constant.

Every stored LLR carries ``e^{-|llr|}`` alongside it. The check-node update is
then arithmetic in that domain plus one log, and the variable-node update one
exp, instead of two exps and two logs per box-plus.

Everything touching the pools lives in one function: numba calls that pass
many arrays cost ~100 ns each, which dominated the runtime when split up.
"""
import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _log1pexp_neg(x):
    # log(1 + e^{-x}) for x >= 0; below double resolution past 37
    if x > 37.0:
        return 0.0
    return np.log1p(np.exp(-x))


@njit(cache=True, inline="always")
def _boxplus(a, b):
    s = 1.0
    if (a < 0.0) != (b < 0.0):
        s = -1.0
    m = min(abs(a), abs(b))
    return s * m + _log1pexp_neg(abs(a + b)) - _log1pexp_neg(abs(a - b))


@njit(cache=True, inline="always")
def _softplus(x):
    if x > 0.0:
        return x + _log1pexp_neg(x)
    return _log1pexp_neg(-x)


@njit(cache=True, inline="always")
def _check_node(la, ea, lb, eb):
    """Box-plus of (la, lb) given ea = e^{-|la|}, eb = e^{-|lb|}; returns (llr, e^{-|llr|})."""
    s = 1.0
    if (la < 0.0) != (lb < 0.0):
        s = -1.0
    ec = (ea + eb) / (1.0 + ea * eb)
    if ec > 1e-300:
        return -s * np.log(ec), ec
    # both magnitudes beyond exp range
    return s * _boxplus(abs(la), abs(lb)), 0.0


@njit(cache=True)
def scl_batch(llrs, frozen, L, out_words, out_metric, out_count):
    """Decode each row of ``llrs``; fills the output buffers in place.

    out_words : (B, L, h) uint8, out_metric : (B, L) float64 path log-likelihoods
    (``-metric``), sorted best first; out_count : (B,) number of survivors.
    """
    B, N = llrs.shape
    m = 0
    while (1 << m) < N:
        m += 1
    h = 0
    for i in range(N):
        if not frozen[i]:
            h += 1
    info_pos = np.empty(h, dtype=np.int64)
    c = 0
    for i in range(N):
        if not frozen[i]:
            info_pos[c] = i
            c += 1

    M = max(m, 1)
    base = np.zeros(M, dtype=np.int64)
    for lam in range(m):
        base[lam] = L * ((1 << lam) - 1)
    pool = L * max(N - 1, 1)
    alpha = np.zeros(pool)
    eps = np.zeros(pool)
    beta = np.zeros(pool, dtype=np.uint8)
    che = np.zeros(N)
    idx = np.zeros((M, L), dtype=np.int64)
    ref = np.zeros((M, L), dtype=np.int64)
    free = np.zeros((M, L), dtype=np.int64)
    ftop = np.zeros(M, dtype=np.int64)
    active = np.zeros(L, dtype=np.bool_)
    pfree = np.zeros(L, dtype=np.int64)
    pm = np.zeros(L)
    u = np.zeros((L, N), dtype=np.uint8)
    cur = np.zeros(max(N, 2), dtype=np.uint8)
    tmp = np.zeros(max(N, 2), dtype=np.uint8)
    leaf = np.zeros(L)
    leafe = np.zeros(L)
    act = np.zeros(L, dtype=np.int64)
    cand = np.zeros(2 * L)
    keep = np.zeros(2 * L, dtype=np.bool_)
    bits = np.zeros(L, dtype=np.uint8)
    todo = np.zeros(L, dtype=np.int64)

    for b in range(B):
        ch = llrs[b]
        for j in range(N):
            che[j] = np.exp(-abs(ch[j]))
        for lam in range(m):
            for s in range(L):
                free[lam, s] = L - 1 - s
                ref[lam, s] = 0
            ftop[lam] = L
        for p in range(L):
            pfree[p] = L - 1 - p
            active[p] = False
        pftop = L - 1
        p0 = pfree[pftop]
        active[p0] = True
        pm[p0] = 0.0
        for lam in range(m):
            ftop[lam] -= 1
            s = free[lam, ftop[lam]]
            idx[lam, p0] = s
            ref[lam, s] = 1

        for i in range(N):
            na = 0
            for p in range(L):
                if active[p]:
                    act[na] = p
                    na += 1

            # ---- leaf LLR of bit i for every active path
            if m == 0:
                leaf[0] = ch[0]
                leafe[0] = che[0]
            if i == 0:
                top = m - 1
            else:
                top = 0
                while not (i >> top) & 1:
                    top += 1
            for a in range(na):
                path = act[a]
                if m == 0:
                    continue
                for lam in range(top, -1, -1):
                    size = 1 << lam
                    s = idx[lam, path]
                    if ref[lam, s] != 1:  # copy on write
                        ftop[lam] -= 1
                        t = free[lam, ftop[lam]]
                        ref[lam, s] -= 1
                        ref[lam, t] = 1
                        src = base[lam] + s * size
                        dst = base[lam] + t * size
                        for j in range(size):
                            alpha[dst + j] = alpha[src + j]
                            eps[dst + j] = eps[src + j]
                            beta[dst + j] = beta[src + j]
                        idx[lam, path] = t
                        s = t
                    off = base[lam] + s * size
                    g_step = i != 0 and lam == top
                    if lam + 1 == m:
                        if g_step:
                            for j in range(size):
                                if beta[off + j] == 0:
                                    v = ch[j + size] + ch[j]
                                else:
                                    v = ch[j + size] - ch[j]
                                alpha[off + j] = v
                                eps[off + j] = np.exp(-abs(v))
                        else:
                            for j in range(size):
                                v, e = _check_node(ch[j], che[j], ch[j + size], che[j + size])
                                alpha[off + j] = v
                                eps[off + j] = e
                    else:
                        poff = base[lam + 1] + idx[lam + 1, path] * (2 * size)
                        if g_step:
                            for j in range(size):
                                if beta[off + j] == 0:
                                    v = alpha[poff + j + size] + alpha[poff + j]
                                else:
                                    v = alpha[poff + j + size] - alpha[poff + j]
                                alpha[off + j] = v
                                eps[off + j] = np.exp(-abs(v))
                        else:
                            for j in range(size):
                                v, e = _check_node(
                                    alpha[poff + j], eps[poff + j], alpha[poff + j + size], eps[poff + j + size]
                                )
                                alpha[off + j] = v
                                eps[off + j] = e
                leaf[a] = alpha[base[0] + idx[0, path]]
                leafe[a] = eps[base[0] + idx[0, path]]

            # ---- decide / fork
            nt = 0
            if frozen[i]:
                for a in range(na):
                    p = act[a]
                    pen = np.log1p(leafe[a])
                    if leaf[a] < 0.0:
                        pen -= leaf[a]
                    pm[p] += pen
                    u[p, i] = 0
                    todo[nt] = p
                    bits[nt] = 0
                    nt += 1
            else:
                for a in range(na):
                    # softplus(-llr) and softplus(llr) from the stored e^{-|llr|}
                    pen = np.log1p(leafe[a])
                    lv = leaf[a]
                    cand[2 * a] = pm[act[a]] + pen + (-lv if lv < 0.0 else 0.0)
                    cand[2 * a + 1] = pm[act[a]] + pen + (lv if lv > 0.0 else 0.0)
                nc = 2 * na
                if nc <= L:
                    for j in range(nc):
                        keep[j] = True
                else:
                    # L smallest metrics; ties go to the lower candidate index
                    for j in range(nc):
                        r = 0
                        cj = cand[j]
                        for q in range(nc):
                            cq = cand[q]
                            if cq < cj or (cq == cj and q < j):
                                r += 1
                        keep[j] = r < L
                for a in range(na):
                    if not keep[2 * a] and not keep[2 * a + 1]:
                        path = act[a]
                        for lam in range(m):
                            s = idx[lam, path]
                            ref[lam, s] -= 1
                            if ref[lam, s] == 0:
                                free[lam, ftop[lam]] = s
                                ftop[lam] += 1
                        active[path] = False
                        pfree[pftop] = path
                        pftop += 1
                for a in range(na):
                    p = act[a]
                    k0 = keep[2 * a]
                    k1 = keep[2 * a + 1]
                    if k0 and k1:
                        pftop -= 1
                        q = pfree[pftop]
                        active[q] = True
                        for lam in range(m):
                            s = idx[lam, p]
                            idx[lam, q] = s
                            ref[lam, s] += 1
                        for j in range(i):
                            u[q, j] = u[p, j]
                        pm[q] = cand[2 * a + 1]
                        u[q, i] = 1
                        pm[p] = cand[2 * a]
                        u[p, i] = 0
                        todo[nt] = p
                        bits[nt] = 0
                        nt += 1
                        todo[nt] = q
                        bits[nt] = 1
                        nt += 1
                    elif k0 or k1:
                        bit = 1 if k1 else 0
                        pm[p] = cand[2 * a + bit]
                        u[p, i] = bit
                        todo[nt] = p
                        bits[nt] = bit
                        nt += 1

            # ---- partial-sum propagation
            if m == 0:
                continue
            for a in range(nt):
                path = todo[a]
                cur[0] = bits[a]
                size = 1
                lam = 0
                while lam < m and (i >> lam) & 1:
                    off = base[lam] + idx[lam, path] * size
                    for j in range(size):
                        tmp[j] = beta[off + j] ^ cur[j]
                        tmp[j + size] = cur[j]
                    for j in range(2 * size):
                        cur[j] = tmp[j]
                    size *= 2
                    lam += 1
                if lam < m:
                    s = idx[lam, path]
                    if ref[lam, s] != 1:
                        ftop[lam] -= 1
                        t = free[lam, ftop[lam]]
                        ref[lam, s] -= 1
                        ref[lam, t] = 1
                        src = base[lam] + s * size
                        dst = base[lam] + t * size
                        for j in range(size):
                            alpha[dst + j] = alpha[src + j]
                            eps[dst + j] = eps[src + j]
                        idx[lam, path] = t
                        s = t
                    off = base[lam] + s * size
                    for j in range(size):
                        beta[off + j] = cur[j]

        na = 0
        for p in range(L):
            if active[p]:
                act[na] = p
                na += 1
        metrics = np.empty(na)
        for a in range(na):
            metrics[a] = pm[act[a]]
        order = np.argsort(metrics, kind="mergesort")
        out_count[b] = na
        for r in range(na):
            p = act[order[r]]
            out_metric[b, r] = -pm[p]
            for j in range(h):
                out_words[b, r, j] = u[p, info_pos[j]]
    return out_count
