import itertools
import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from capolar.bounds import (
    BiAwgnChannel,
    BiAwgnFamily,
    BoundEvaluator,
    DmcSpec,
    PhaseNoiseFamily,
    QpskAwgnFamily,
    SaddlepointQuery,
    cgf_terms,
    delta_for_targets,
    forney_bound,
    forney_e0,
    forney_exponents,
    gen_info_density,
    mismatched_bound_adapter,
    pairwise_psi,
    pairwise_psi_tilde,
    quantize_biawgn,
    rcu,
    saddlepoint_tail,
    saddlepoint_tail_cgf,
    snr_threshold_bound,
    thm1_bounds,
    thm2_bounds,
)
from capolar.bounds.saddlepoint import log_mgf_batch, log_tail_batch
from capolar.channels import ChannelConfig, snr_to_sigma


def exact_tail(g, omega):
    """P[sum_i g_i(a_i) >= omega] by enumerating all inputs."""
    n, M = g.shape
    sums = np.zeros(1)
    for i in range(n):
        sums = (sums[:, None] + g[i][None, :]).ravel()
    return float(np.mean(sums >= omega - 1e-12))


def _biawgn_sample(rng, n, snr, rate=0.5):
    sigma = snr_to_sigma(snr, rate)
    ch = BiAwgnChannel(sigma)
    x = rng.integers(0, 2, n)
    y = ch.alphabet[x] + sigma * rng.standard_normal(n)
    return x, y, ch


# ---------------------------------------------------------------- CGF and saddlepoint


def test_cgf_at_zero():
    g = np.random.default_rng(0).normal(size=(10, 4))
    gam, d1, d2 = cgf_terms(g, 0.0)
    np.testing.assert_allclose(gam, 0.0, atol=1e-15)
    np.testing.assert_allclose(d1, g.mean(1))
    np.testing.assert_allclose(d2, g.var(1))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5))
def test_cgf_convex_and_derivatives(seed, zeta):
    g = np.random.default_rng(seed).normal(scale=3, size=4)
    gam, d1, d2 = cgf_terms(g, zeta)
    assert d2 >= 0
    h = 1e-5
    fd1 = (cgf_terms(g, zeta + h)[0] - cgf_terms(g, zeta - h)[0]) / (2 * h)
    fd2 = (cgf_terms(g, zeta + h)[1] - cgf_terms(g, zeta - h)[1]) / (2 * h)
    assert abs(fd1 - d1) <= 1e-6 * max(1.0, abs(d1))
    assert abs(fd2 - d2) <= 1e-6 * max(1.0, abs(d2))


def test_cgf_extreme_zeta_is_stable():
    g = np.array([[-800.0, 0.0, 5.0]])
    gam, d1, d2 = cgf_terms(g, 40.0)
    assert np.isfinite(gam) and abs(d1[0] - 5.0) < 1e-9 and d2[0] >= 0


@pytest.mark.parametrize("n", [1, 16, 100])
def test_gaussian_sum_is_exact(n):
    res = saddlepoint_tail_cgf(lambda z: (n * z * z / 2, n * z, float(n)), 3 * math.sqrt(n))
    assert res.prob == pytest.approx(norm.sf(3.0), rel=1e-10)
    low = saddlepoint_tail_cgf(lambda z: (n * z * z / 2, n * z, float(n)), -2 * math.sqrt(n))
    assert low.prob == pytest.approx(norm.sf(-2.0), rel=1e-10)


def test_tail_monotone_in_omega_and_clamped():
    rng = np.random.default_rng(1)
    x, y, ch = _biawgn_sample(rng, 32, 1.0)
    g = ch.log_table(y)
    lo, hi = g.min(1).sum(), g.max(1).sum()
    omegas = np.linspace(lo - 1, hi + 1, 400)
    p = [saddlepoint_tail(SaddlepointQuery(g, w)).prob for w in omegas]
    assert all(0.0 <= v <= 1.0 for v in p)
    assert np.all(np.diff(p) <= 1e-12)


def test_saturation_and_atom_flags():
    g = np.array([[0.0, -1.0], [0.0, -2.0], [0.5, 0.5]])
    assert saddlepoint_tail(SaddlepointQuery(g, 5.0)).flag == "saturated_high"
    assert saddlepoint_tail(SaddlepointQuery(g, -10.0)).prob == 1.0
    top = saddlepoint_tail(SaddlepointQuery(g, 0.5))
    assert top.flag == "top_atom"
    assert top.prob == pytest.approx(exact_tail(g, 0.5))  # 1/4: the third position is a tie


def test_query_validation():
    with pytest.raises(ValueError):
        SaddlepointQuery(np.zeros((3, 1)), 0.0)
    with pytest.raises(ValueError):
        SaddlepointQuery(np.array([[0.0, np.inf]]), 0.0)


def test_batch_matches_scalar():
    rng = np.random.default_rng(2)
    G = rng.normal(size=(20, 12, 4))
    om = G.mean(axis=2).sum(1) + rng.normal(scale=3, size=20)
    lp, _, _ = log_tail_batch(G, om)
    for b in range(20):
        assert saddlepoint_tail(SaddlepointQuery(G[b], om[b])).log_prob == pytest.approx(lp[b], abs=1e-12)


def _median_rel_err(n, snr, reps=60, seed=3):
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(reps):
        x, y, ch = _biawgn_sample(rng, n, snr)
        g = ch.log_table(y)
        ex = exact_tail(g, g[np.arange(n), x].sum())
        errs.append(abs(pairwise_psi(x, y, ch) - ex) / ex)
    return float(np.median(errs))


def test_psi_error_shrinks_with_n():
    # the o(1/sqrt(n)) terms dominate at very short n; see the ledger
    e8, e16 = _median_rel_err(8, 0.0), _median_rel_err(16, 0.0)
    assert e16 < e8 < 0.3


def test_psi_close_to_enumeration_at_n20():
    assert _median_rel_err(20, -1.0, reps=30) < 0.12


def test_psi_permutation_invariant():
    rng = np.random.default_rng(4)
    x, y, ch = _biawgn_sample(rng, 24, 1.0)
    perm = rng.permutation(24)
    assert pairwise_psi(x[perm], y[perm], ch) == pytest.approx(pairwise_psi(x, y, ch), rel=1e-9)


def test_psi_at_likelihood_maximum_is_atom():
    rng = np.random.default_rng(5)
    _, y, ch = _biawgn_sample(rng, 10, 2.0)
    x = np.argmax(ch.log_table(y), axis=1)
    assert pairwise_psi(x, y, ch) == pytest.approx(2.0**-10)


def test_psi_tilde_limits():
    rng = np.random.default_rng(6)
    x, y, ch = _biawgn_sample(rng, 16, 1.0)
    assert pairwise_psi_tilde(x, y, ch, 1.0, -1e6) == pairwise_psi(x, y, ch)
    assert pairwise_psi_tilde(x, y, ch, 1.0, 1e3) == 0.0
    with pytest.raises(ValueError):
        pairwise_psi_tilde(x, y, ch, 0.0, 0.0)


def test_psi_tilde_threshold_matches_enumeration():
    rng = np.random.default_rng(7)
    n, s, lam = 12, 1.0, 0.4
    x, y, ch = _biawgn_sample(rng, n, 0.0)
    g = ch.log_table(y)
    om = max(g[np.arange(n), x].sum(), (n * lam * math.log(2) + log_mgf_batch(g[None], s)[0]) / s)
    ex = exact_tail(g, om)
    assert ex > 0
    assert abs(pairwise_psi_tilde(x, y, ch, s, lam) - ex) / ex < 0.3


# ---------------------------------------------------------------- information density


def test_info_density_zero_when_equidistant():
    ch = BiAwgnChannel(0.8)
    assert gen_info_density(np.array([0, 1, 0]), np.zeros(3), 1.0, ch) == pytest.approx(0.0, abs=1e-12)


def test_info_density_additive():
    rng = np.random.default_rng(8)
    x, y, ch = _biawgn_sample(rng, 20, 1.0)
    whole = gen_info_density(x, y, 0.7, ch)
    parts = gen_info_density(x[:7], y[:7], 0.7, ch) + gen_info_density(x[7:], y[7:], 0.7, ch)
    assert whole == pytest.approx(parts, rel=1e-12)


def test_markov_bound_for_independent_codeword():
    # iota_1 of an independent codeword exceeds n lambda with probability <= 2^{-n lambda}
    rng = np.random.default_rng(9)
    n, sigma = 16, 0.9
    ch = BiAwgnChannel(sigma)
    for lam in (0.1, 0.2):
        hits = 0
        reps = 20000
        x = rng.integers(0, 2, (reps, n))
        xbar = rng.integers(0, 2, (reps, n))
        y = ch.alphabet[x] + sigma * rng.standard_normal((reps, n))
        g = ch.log_table(y)
        num = g[np.arange(reps)[:, None], np.arange(n), xbar].sum(1)
        iota = (num - log_mgf_batch(g, 1.0)) / math.log(2)
        hits = np.mean(iota >= n * lam)
        bound = 2.0 ** (-n * lam)
        assert hits <= bound + 3 * math.sqrt(bound / reps)


# ---------------------------------------------------------------- RCU / Theorems 1 and 2


@pytest.fixture(scope="module")
def ev64():
    return BoundEvaluator(BiAwgnFamily(), 64, 4000, seed=11)


SIG64 = snr_to_sigma(3.0, 0.5)


def test_thm1_ratio_and_delta0(ev64):
    base = rcu(32, 64, None, SIG64, evaluator=ev64)
    d0 = thm1_bounds(32, 64, 0, None, SIG64, evaluator=ev64)
    assert d0.eps_t == d0.eps_u == base.eps_t
    for delta in (1, 7, 12):
        r = thm1_bounds(32, 64, delta, None, SIG64, evaluator=ev64)
        assert r.eps_u / r.eps_t == 2.0**-delta
        assert r.eps_u <= r.eps_t
    assert thm1_bounds(32, 64, 7, None, SIG64, evaluator=ev64).eps_t > base.eps_t
    with pytest.raises(ValueError):
        thm1_bounds(32, 64, -1, None, SIG64, evaluator=ev64)


def test_rcu_monotone_in_k(ev64):
    vals = [rcu(k, 64, None, SIG64, evaluator=ev64).eps_t for k in range(20, 45, 3)]
    assert np.all(np.diff(vals) >= 0)
    assert all(0 <= v <= 1 for v in vals)


def test_thm2_reduces_to_rcu(ev64):
    base = rcu(32, 64, None, SIG64, evaluator=ev64)
    r = thm2_bounds(32, 64, 1.0, -1e6, None, SIG64, evaluator=ev64)
    assert abs(r.eps_t - base.eps_t) <= 2 * base.mc_std_err
    assert abs(r.eps_u - base.eps_u) <= 2 * base.mc_std_err


def test_thm2_monotone_in_lambda(ev64):
    lams = np.linspace(0.2, 0.9, 12)
    res = [thm2_bounds(32, 64, 0.6, lam, None, SIG64, evaluator=ev64) for lam in lams]
    eu = [r.eps_u for r in res]
    et = [r.eps_t for r in res]
    assert np.all(np.diff(eu) <= 1e-15)
    assert np.all(np.diff(et) >= -1e-15)
    assert all(r.eps_t >= rcu(32, 64, None, SIG64, evaluator=ev64).eps_t - 1e-15 for r in res)


def test_evaluator_reproducible():
    a = BoundEvaluator(BiAwgnFamily(), 16, 3000, seed=4, chunk=1000)
    b = BoundEvaluator(BiAwgnFamily(), 16, 3000, seed=4, chunk=1000)
    np.testing.assert_array_equal(a.state(0.8).logpsi, b.state(0.8).logpsi)
    # a larger sample set extends the smaller one
    c = a.with_samples(5000)
    np.testing.assert_array_equal(c.state(0.8).logpsi[:3000], a.state(0.8).logpsi)


def test_warning_when_samples_too_few():
    ev = BoundEvaluator(BiAwgnFamily(), 64, 50, seed=0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        r = rcu(32, 64, None, SIG64, evaluator=ev)
    assert r.warning and w


def test_ideal_csi_matches_matched_qpsk():
    sigma = snr_to_sigma(2.0, 1.0)
    a = rcu(24, 24, QpskAwgnFamily(), sigma, mc_samples=6000, seed=1)
    b = rcu(24, 24, PhaseNoiseFamily(0, ideal_csi=True), sigma, mc_samples=6000, seed=2)
    assert abs(a.eps_t - b.eps_t) < 3 * math.hypot(a.mc_std_err, b.mc_std_err)


def test_many_pilots_approach_matched():
    sigma = snr_to_sigma(2.0, 1.0)
    a = rcu(24, 24, QpskAwgnFamily(), sigma, mc_samples=6000, seed=1)
    b = rcu(24, 24, PhaseNoiseFamily(10_000), sigma, mc_samples=6000, seed=3)
    few = rcu(24, 24, PhaseNoiseFamily(1), sigma, mc_samples=6000, seed=3)
    assert abs(a.eps_t - b.eps_t) < 3 * math.hypot(a.mc_std_err, b.mc_std_err)
    assert few.eps_t > b.eps_t


def test_adapter():
    cfg = ChannelConfig.from_ebn0("phase_noise", 3.0, 1.0, n_pilots=10)
    assert mismatched_bound_adapter(cfg) == PhaseNoiseFamily(10)
    with pytest.raises(ValueError):
        mismatched_bound_adapter(ChannelConfig.from_ebn0("biawgn", 3.0, 0.5))
    with pytest.raises(ValueError):
        PhaseNoiseFamily(0)


# ---------------------------------------------------------------- Forney


def bsc(p):
    return DmcSpec(np.array([0.5, 0.5]), np.array([[1 - p, p], [p, 1 - p]]))


def test_e0_high_precision_oracle():
    mpmath.mp.dps = 50
    p, s, rho = mpmath.mpf("0.11"), mpmath.mpf("0.5"), mpmath.mpf("0.5")
    W = [[1 - p, p], [p, 1 - p]]
    total = mpmath.mpf(0)
    for y in range(2):
        a = sum(mpmath.mpf("0.5") * W[x][y] ** (1 - s) for x in range(2))
        b = sum(mpmath.mpf("0.5") * W[x][y] ** (s / rho) for x in range(2))
        total += a * b**rho
    want = float(-mpmath.log(total, 2))
    assert forney_e0(0.5, 0.5, bsc(0.11)) == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("rho", [0.1, 0.5, 1.0])
def test_e0_zero_at_s0(rho):
    assert abs(forney_e0(0.0, rho, bsc(0.2))) < 1e-12
    assert abs(forney_e0(0.0, rho, quantize_biawgn(0.9, 200))) < 1e-12


def test_e0_useless_channel():
    dmc = DmcSpec(np.array([0.3, 0.7]), np.array([[0.2, 0.5, 0.3]] * 2))
    for s, rho in [(0.1, 0.2), (0.5, 0.5), (0.3, 1.0)]:
        assert abs(forney_e0(s, rho, dmc)) < 1e-12


def test_e0_domain():
    for s, rho in [(-0.1, 0.5), (0.6, 0.5), (0.5, 1.2), (0.0, 0.0)]:
        with pytest.raises(ValueError):
            forney_e0(s, rho, bsc(0.1))


def test_dmc_validation():
    with pytest.raises(ValueError):
        DmcSpec(np.array([0.5, 0.5]), np.array([[0.9, 0.2], [0.1, 0.9]]))
    with pytest.raises(ValueError):
        DmcSpec(np.array([0.6, 0.5]), np.array([[0.9, 0.1], [0.1, 0.9]]))
    with pytest.raises(ValueError):
        quantize_biawgn(1.0, 1)


def test_quantizer_rows_and_symmetry():
    dmc = quantize_biawgn(0.7, 500)
    assert np.all(np.abs(dmc.transition.sum(1) - 1) < 1e-12)
    np.testing.assert_allclose(dmc.transition[0], dmc.transition[1][::-1], rtol=1e-9, atol=1e-300)


def test_exponents_identities():
    dmc = quantize_biawgn(snr_to_sigma(3.0, 0.5), 400)
    e1, e2 = forney_exponents(0.5, 0.0, dmc)
    assert e1 == e2 and e1 > 0
    Rs = np.linspace(0.05, 0.9, 10)
    E = [forney_exponents(R, 0.05, dmc)[0] for R in Rs]
    assert np.all(np.diff(E) <= 1e-12)
    assert all(e >= 0 for e in E)
    with pytest.raises(ValueError):
        forney_exponents(0.0, 0.1, dmc)
    with pytest.raises(ValueError):
        forney_exponents(0.5, -0.1, dmc)


def test_exponent_quantization_converges():
    sigma = snr_to_sigma(3.0, 0.5)
    e = {L: forney_exponents(0.5, 0.05, quantize_biawgn(sigma, L))[0] for L in (1000, 2000, 4000)}
    assert abs(e[2000] - e[1000]) / e[2000] < 0.01
    assert abs(e[4000] - e[2000]) / e[2000] < 0.005


def test_forney_bound_relations():
    dmc = quantize_biawgn(snr_to_sigma(3.0, 0.5), 300)
    r0 = forney_bound(64, 0.5, 0.0, dmc)
    assert r0.eps_t == r0.eps_u
    r = forney_bound(64, 0.5, 0.1, dmc)
    assert r.eps_u == pytest.approx(r.eps_t * 2.0 ** (-64 * 0.1), rel=1e-12)
    r2 = forney_bound(128, 0.5, 0.1, dmc)
    assert r2.eps_t == pytest.approx(r.eps_t**2, rel=1e-9)


# ---------------------------------------------------------------- thresholds


def test_delta_for_targets():
    assert delta_for_targets(1e-3, 1e-5) == 7
    assert delta_for_targets(1e-3, 1e-3) == 0
    assert delta_for_targets(0.5, 0.125) == 2


def test_threshold_not_found_and_validation():
    r = snr_threshold_bound("thm1", 16, 8, 1e-3, 1e-5, bracket=(-2.0, -1.0), samples=500)
    assert not r.found and "not met" in r.reason
    with pytest.raises(ValueError):
        snr_threshold_bound("thm1", 16, 8, 1e-5, 1e-3)
    with pytest.raises(ValueError):
        snr_threshold_bound("bogus", 16, 8, 1e-3, 1e-5)


def test_threshold_searches_small():
    ev = BoundEvaluator(BiAwgnFamily(), 32, 3000, seed=1)
    kw = dict(evaluator=ev, tol=0.05, bracket=(0.0, 12.0))
    t1 = snr_threshold_bound("thm1", 32, 16, 1e-2, 1e-3, **kw)
    t2 = snr_threshold_bound("thm2", 32, 16, 1e-2, 1e-3, **kw)
    plain = snr_threshold_bound("thm1", 32, 16, 1e-2, 1e-2, **kw)
    assert t1.found and t2.found and plain.found
    assert t1.params["delta"] == 4
    # both detection schemes cost SNR relative to plain RCU at the TEP target
    assert t1.ebn0_db >= plain.ebn0_db and t2.ebn0_db >= plain.ebn0_db - 0.05
    assert t2.params["eps_u"] <= 1e-3 and t2.params["eps_t"] <= 1e-2
    f = snr_threshold_bound("forney", 32, 16, 1e-2, 1e-3, tol=0.05, bracket=(0.0, 12.0), levels=300)
    assert f.found and f.ebn0_db > t1.ebn0_db
