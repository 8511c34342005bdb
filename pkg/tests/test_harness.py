import importlib
import json

import numpy as np
import pytest
from scipy.stats import beta, norm

from capolar import cli
from capolar.channels import observe
from capolar.crc import crc_encode, split_outer
from capolar.detectors import (
    DISABLED,
    DetectorConfig,
    Verdict,
    candidate_list,
    classify,
    decide_alg_a,
    decide_alg_b,
    decide_reference,
)
from capolar.harness import (
    CodeSpec,
    ChannelSpec,
    SimJob,
    SimResult,
    StoppingRule,
    best_parameters,
    clopper_pearson,
    grid_cells,
    job_from_dict,
    job_to_dict,
    run_chunk,
    run_montecarlo,
    snr_threshold_sim,
    snr_thresholds_sim,
    sweep,
    trial_rng,
)
from capolar.polar import polar_encode

sweep_mod = importlib.import_module("capolar.harness.sweep")


def small_job(**kw):
    base = dict(
        code=CodeSpec(32, 16, "0x7", 3.0),
        detector=DetectorConfig("reference", 4),
        ebn0_db=2.0,
        stopping=StoppingRule(50, 200, 2000),
        seed=7,
        chunk=250,
    )
    base.update(kw)
    return SimJob(**base)


# ---------------------------------------------------------------- statistics


def test_clopper_pearson_edges():
    assert clopper_pearson(0, 0) == (0.0, 1.0)
    lo, hi = clopper_pearson(0, 100)
    assert lo == 0.0 and hi == pytest.approx(1 - 0.025 ** (1 / 100))
    lo, hi = clopper_pearson(100, 100)
    assert hi == 1.0 and lo == pytest.approx(0.025 ** (1 / 100))
    with pytest.raises(ValueError):
        clopper_pearson(5, 4)


def test_clopper_pearson_coverage():
    rng = np.random.default_rng(0)
    reps = 10_000
    for p, n in [(0.1, 50), (0.01, 400), (0.3, 20)]:
        ks = rng.binomial(n, p, reps)
        table = np.array([clopper_pearson(k, n) for k in range(n + 1)])
        cover = np.mean((table[ks, 0] <= p) & (p <= table[ks, 1]))
        assert cover >= 0.95 - 3 * np.sqrt(0.95 * 0.05 / reps)


# ---------------------------------------------------------------- engine


def test_trial_streams_independent_of_layout():
    a = trial_rng(3, 10).standard_normal(4)
    b = trial_rng(3, 10).standard_normal(4)
    c = trial_rng(3, 11).standard_normal(4)
    d = trial_rng(4, 10).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c) and not np.allclose(a, d)


def test_noiseless_no_errors():
    job = small_job(ebn0_db=40.0, stopping=StoppingRule(1, 1, 10_000), chunk=2000)
    res = run_montecarlo(job)
    assert res.trials == 10_000 and res.total_errors == 0
    assert res.status == "budget_exhausted"


def test_rate_one_toy_matches_uncoded_bpsk():
    job = SimJob(CodeSpec(2, 2, "none", 0.0), DetectorConfig("reference", 2), ebn0_db=0.0,
                 stopping=StoppingRule(40_000, 40_000, 40_000), seed=1, chunk=5000)
    res = run_montecarlo(job)
    sigma = job.channel.at(0.0, job.code).sigma
    p = 1 - (1 - norm.sf(1 / sigma)) ** 2
    assert res.tep_ci[0] <= p <= res.tep_ci[1]
    assert res.undetected_errors == res.total_errors  # no CRC: every error is undetected


def test_repeat_is_bit_identical():
    a = run_montecarlo(small_job())
    b = run_montecarlo(small_job())
    a.wall_time = b.wall_time = 0.0
    assert a == b


def test_shard_merge_equivalence():
    job = small_job(detector=DetectorConfig("alg_b", 4, threshold_T=0.02))
    whole = run_chunk(job, 1.5, 0, 600)
    parts = run_chunk(job, 1.5, 0, 200).merge(run_chunk(job, 1.5, 200, 150)).merge(run_chunk(job, 1.5, 350, 250))
    assert whole.trials == parts.trials
    np.testing.assert_array_equal(whole.ref, parts.ref)
    np.testing.assert_array_equal(whole.alg_a, parts.alg_a)
    np.testing.assert_array_equal(whole.lam_correct, parts.lam_correct)
    np.testing.assert_array_equal(whole.lam_wrong, parts.lam_wrong)


def test_workers_give_identical_results():
    job = small_job(detector=DetectorConfig("alg_a", 4, delta1=1))
    a = run_montecarlo(job, workers=1)
    b = run_montecarlo(job, workers=2)
    a.wall_time = b.wall_time = 0.0
    assert a == b


@pytest.mark.parametrize("channel", [ChannelSpec(), ChannelSpec("phase_noise", 4)])
def test_engine_matches_per_trial_detectors(channel):
    job = small_job(channel=channel)
    snr = 1.0
    st = run_chunk(job, snr, 0, 300)
    code, crc = job.code.build()
    ch = channel.at(snr, job.code)
    Ts = [0.0, 0.05, 0.2]
    ref = np.zeros(3, dtype=int)
    alga = np.zeros((crc.delta + 1, 3), dtype=int)
    algb = {T: [0, 0] for T in Ts}
    order = [Verdict.CORRECT, Verdict.ERASURE, Verdict.UNDETECTED]

    def verdict(c, idx, m):
        return order.index(classify(None if idx is None else c.words[idx, : crc.message_len], m))

    for t in range(300):
        r = trial_rng(job.seed, t)
        m = r.integers(0, 2, crc.message_len, dtype=np.uint8)
        obs = observe(polar_encode(crc_encode(m, crc), code), ch, r)
        c = candidate_list(obs, code, crc, 4)
        ref[verdict(c, decide_reference(c), m)] += 1
        for d1 in range(crc.delta + 1):
            alga[d1, verdict(c, decide_alg_a(c, split_outer(crc, d1)), m)] += 1
        for T in Ts:
            v = verdict(c, decide_alg_b(c, T), m)
            algb[T][0] += v != 0
            algb[T][1] += v == 2
    np.testing.assert_array_equal(st.ref, ref)
    np.testing.assert_array_equal(st.alg_a, alga)
    for T in Ts:
        _, tot, und = st.counts_alg_b(T)
        assert [tot, und] == algb[T]
    assert st.counts_alg_b(DISABLED) == st.counts_reference()


def test_counts_invariants_and_threshold_monotone():
    st = run_chunk(small_job(), 0.5, 0, 500)
    prev = None
    for T in np.linspace(0, 0.5, 11):
        n, tot, und = st.counts_alg_b(T)
        assert 0 <= und <= tot <= n
        if prev is not None:
            assert tot >= prev[0] and und <= prev[1]
        prev = (tot, und)
    for d1 in range(st.delta + 1):
        n, tot, und = st.counts_alg_a(d1)
        assert und <= tot <= n


def test_stopping_rule():
    res = run_montecarlo(small_job(ebn0_db=0.0, stopping=StoppingRule(5, 10**5, 10**5)))
    assert res.status == "ok" and res.undetected_errors >= 5 and res.trials < 10**5
    with pytest.raises(ValueError):
        StoppingRule(100, 10_000, 50)
    with pytest.raises(ValueError):
        SimResult(10, 2, 3, 0.2, 0.3, (0, 1), (0, 1))
    with pytest.raises(ValueError):
        run_montecarlo(small_job(ebn0_db=None))


# ---------------------------------------------------------------- parameter optimization and threshold search


def test_alg_b_threshold_is_smallest_feasible():
    st = run_chunk(small_job(), 1.0, 0, 2000)
    targets = (0.8, 0.08)
    r = best_parameters(st, "alg_b", targets)
    T = r["params"]["threshold_T"]
    assert T is not None
    _, _, und = st.counts_alg_b(T)
    assert clopper_pearson(und, st.trials)[1] <= targets[1]
    if T > 0:
        _, _, und2 = st.counts_alg_b(np.nextafter(T, 0) - 1e-9)
        assert clopper_pearson(und2, st.trials)[1] > targets[1]


def test_alg_a_parameters_cover_all_splits():
    st = run_chunk(small_job(), 2.0, 0, 1000)
    r = best_parameters(st, "alg_a", (0.3, 0.1))
    assert r["status"] == "pass" and 0 <= r["params"]["delta1"] <= st.delta


def test_threshold_search_small():
    job = small_job(targets=(0.1, 0.02), bracket=(-1.0, 6.0), stopping=StoppingRule(3000, 3000, 3000))
    res = snr_thresholds_sim(job, ["reference", "alg_a", "alg_b"], tol=0.25)
    for r in res.values():
        assert r.found and -1.0 < r.ebn0_db <= 6.0
        assert r.points[0]["status"] == "pass"
    # Algorithm A includes the reference decoder (delta1 = delta)
    assert res["alg_a"].ebn0_db <= res["reference"].ebn0_db + 1e-9
    miss = snr_threshold_sim(job.replace(bracket=(-3.0, -2.0)))
    assert not miss.found and "top of the bracket" in miss.reason


# ---------------------------------------------------------------- configuration and sweeps


def test_config_round_trip():
    job = small_job(channel=ChannelSpec("phase_noise", 10), targets=(1e-3, 1e-5), bracket=(2.0, 5.0),
                    detector=DetectorConfig("alg_b", 8, threshold_T=0.1))
    d = json.loads(json.dumps(job_to_dict(job)))
    assert job_from_dict(d) == job
    d["bogus"] = 1
    with pytest.raises(ValueError):
        job_from_dict(d)
    with pytest.raises(ValueError):
        small_job(targets=(1e-5, 1e-3))


def _sweep_cfg(grid):
    return {**job_to_dict(small_job(stopping=StoppingRule(20, 50, 500))), "grid": grid}


def test_sweep_empty_grid(tmp_path):
    out = tmp_path / "empty.csv"
    assert sweep(_sweep_cfg({}), out) == []
    assert out.read_text().strip().startswith("scheme,n,k,L")
    assert sweep(_sweep_cfg({"ebn0_db": []}), out) == []


def test_sweep_grid_rows_and_idempotence(tmp_path, monkeypatch):
    out = tmp_path / "grid.csv"
    cfg = _sweep_cfg({"list_size": [2, 4], "ebn0_db": [1.0, 2.0]})
    rows = sweep(cfg, out)
    assert [(r["L"], r["ebn0_db"]) for r in rows] == [(2, 1.0), (2, 2.0), (4, 1.0), (4, 2.0)]
    before = out.read_text()

    def boom(*a, **k):
        raise AssertionError("completed cells must not rerun")

    monkeypatch.setattr(sweep_mod, "run_montecarlo", boom)
    assert sweep(cfg, out) == rows
    assert out.read_text() == before


def test_sweep_records_failures_and_continues(tmp_path):
    out = tmp_path / "partial.csv"
    cfg = _sweep_cfg({"list_size": [0, 2]})
    rows = sweep(cfg, out)
    assert len(rows) == 1 and rows[0]["L"] == 2
    marks = sorted((tmp_path / "partial.csv.cells").glob("*.json"))
    status = sorted(json.loads(m.read_text())["status"] for m in marks)
    assert status == ["done", "error"]


def test_sweep_n_axis_uses_per_length_crc():
    cfg = _sweep_cfg({"n": [16, 32]})
    cfg["rate"] = 0.5
    cfg["code_by_n"] = {"16": {"crc": "0x7"}, "32": {"crc": "0xB"}}
    cells = grid_cells(cfg)
    assert [(c[2]["code"]["n"], c[2]["code"]["k"], c[2]["code"]["crc"]) for c in cells] == [(16, 8, "0x7"), (32, 16, "0xB")]


# ---------------------------------------------------------------- CLI


def test_cli_bound_record(capsys):
    cli.main(["bound", "--which", "thm2", "--n", "16", "--k", "8", "--snr-db", "3", "--samples", "500", "--s", "1", "--lam", "0.3"])
    recs = json.loads(capsys.readouterr().out)
    assert set(recs[0]) == {"which", "params", "eps_t", "eps_u", "mc_std_err"}
    assert recs[0]["which"] == "thm2" and recs[0]["eps_u"] <= 1


def test_cli_simulate_and_design(tmp_path, capsys):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps(job_to_dict(small_job())))
    out = tmp_path / "res.csv"
    cli.main(["simulate", "--config", str(cfg), "--out", str(out), "--seed", "3"])
    lines = out.read_text().splitlines()
    assert len(lines) == 2 and lines[1].endswith(",3")
    capsys.readouterr()
    cli.main(["design", "--n", "32", "--k", "16", "--crc", "0x7", "--out", str(tmp_path / "f.txt")])
    rec = json.loads(capsys.readouterr().out)
    assert rec["h"] == 18 and len(rec["frozen"]) == 14
