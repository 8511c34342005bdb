"""Command line entry point: ``capolar {design,simulate,threshold,bound,sweep}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bounds import (
    BoundEvaluator,
    family_for,
    forney_bound,
    quantize_biawgn,
    rcu,
    snr_threshold_bound,
    thm1_bounds,
    thm2_bounds,
)
from .channels import snr_to_sigma
from .harness import (
    CSV_COLUMNS,
    CodeSpec,
    job_from_dict,
    load_config,
    run_montecarlo,
    snr_thresholds_sim,
    sweep,
)
from .polar import save_frozen

log = logging.getLogger("capolar")


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _emit(obj, out: str | None):
    text = json.dumps(obj, indent=2, default=_default)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _job(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if getattr(args, "ebn0_db", None) is not None:
        cfg["ebn0_db"] = args.ebn0_db
    return job_from_dict(cfg)


# ---------------------------------------------------------------- subcommands


def cmd_design(args):
    spec = CodeSpec(args.n, args.k, args.crc, args.design_snr_db)
    code, crc = spec.build()
    rec = {"n": code.n_c, "h": code.h, "k": crc.message_len, "crc": args.crc, "design_snr_db": args.design_snr_db,
           "frozen": list(code.frozen_set)}
    if args.out:
        save_frozen(code, args.out)
    print(json.dumps(rec))


def cmd_simulate(args):
    job = _job(args)
    res = run_montecarlo(job, args.workers)
    row = res.csv_row(job)
    if args.out and args.out.endswith(".csv"):
        new = not Path(args.out).exists()
        with open(args.out, "a", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            if new:
                w.writeheader()
            w.writerow(row)
        _emit({**row, "status": res.status, "wall_time": res.wall_time}, None)
    else:
        _emit({**row, "status": res.status, "wall_time": res.wall_time, "tep_ci": res.tep_ci, "uep_ci": res.uep_ci}, args.out)


def cmd_threshold(args):
    job = _job(args)
    schemes = args.schemes.split(",") if args.schemes else None
    res = snr_thresholds_sim(job, schemes, args.workers, args.tol, log=log.info)
    _emit({k: v.as_dict() for k, v in res.items()}, args.out)


def _bound_record(which, params, r):
    return {"which": which, "params": params, "eps_t": r.eps_t, "eps_u": r.eps_u, "mc_std_err": r.mc_std_err}


def cmd_bound(args):
    family = family_for(args.channel, args.n_pilots)
    rate = args.k / args.n
    records = []
    if args.targets:
        eps_t, eps_u = (float(v) for v in args.targets.split(","))
        which = "thm1" if args.which == "rcu" else args.which
        if args.which == "rcu":
            eps_u = eps_t
        r = snr_threshold_bound(which, args.n, args.k, eps_t, eps_u, family, tuple(args.bracket), args.tol,
                                args.samples, args.seed, s=args.s, levels=args.levels)
        records.append({"which": args.which, "params": {"n": args.n, "k": args.k, "targets": [eps_t, eps_u],
                        "ebn0_db": r.ebn0_db, "found": r.found, "reason": r.reason, **r.params},
                        "eps_t": r.params.get("eps_t"), "eps_u": r.params.get("eps_u"),
                        "mc_std_err": r.params.get("se_t")})
    else:
        ev = None if args.which == "forney" else BoundEvaluator(family, args.n, args.samples, args.seed)
        for snr in args.snr_db:
            sigma = snr_to_sigma(snr, rate)
            base = {"n": args.n, "k": args.k, "ebn0_db": snr, "sigma": sigma}
            if args.which == "rcu":
                r = rcu(args.k, args.n, family, sigma, evaluator=ev)
                p = base
            elif args.which == "thm1":
                r = thm1_bounds(args.k, args.n, args.delta, family, sigma, evaluator=ev)
                p = {**base, "delta": args.delta}
            elif args.which == "thm2":
                s = 1.0 if args.s is None else args.s
                r = thm2_bounds(args.k, args.n, s, args.lam, family, sigma, evaluator=ev)
                p = {**base, "s": s, "lambda": args.lam}
            else:
                r = forney_bound(args.n, rate, args.T, quantize_biawgn(sigma, args.levels))
                p = {**base, "T": args.T, "E1": r.params["E1"], "E2": r.params["E2"]}
            records.append(_bound_record(args.which, p, r))
    _emit(records, args.out)


def cmd_sweep(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = args.out or str(Path(args.config).with_suffix(".csv"))
    rows = sweep(cfg, out, args.workers, log=log.info)
    print(json.dumps({"out": out, "rows": len(rows)}))


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="capolar", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="JSON job configuration")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", default=None, help="output path (.csv or .json)")

    d = sub.add_parser("design", help="emit the frozen set of a CA polar code")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--crc", default="none")
    d.add_argument("--design-snr-db", type=float, default=3.0)
    common(d, config=False)
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", help="simulate one operating point")
    common(s)
    s.add_argument("--ebn0-db", type=float, default=None)
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("threshold", help="minimum Eb/N0 meeting (eps_t*, eps_u*)")
    common(t)
    t.add_argument("--schemes", default=None, help="comma list, e.g. reference,alg_a,alg_b")
    t.add_argument("--tol", type=float, default=0.05)
    t.set_defaults(func=cmd_threshold)

    b = sub.add_parser("bound", help="evaluate an achievability bound or its SNR threshold")
    b.add_argument("--which", choices=["thm1", "thm2", "forney", "rcu"], required=True)
    b.add_argument("--n", type=int, required=True, help="channel uses")
    b.add_argument("--k", type=int, required=True, help="information bits")
    g = b.add_mutually_exclusive_group(required=True)
    g.add_argument("--snr-db", type=float, nargs="+")
    g.add_argument("--targets", help="eps_t*,eps_u*")
    b.add_argument("--samples", type=int, default=100_000)
    b.add_argument("--channel", choices=["biawgn", "phase_noise"], default="biawgn")
    b.add_argument("--n-pilots", type=int, default=10)
    b.add_argument("--delta", type=int, default=0, help="CRC bits (thm1)")
    b.add_argument("--s", type=float, default=None, help="thm2 s; optimized when searching if omitted")
    b.add_argument("--lam", type=float, default=0.0, help="thm2 lambda")
    b.add_argument("--T", type=float, default=0.0, help="forney threshold")
    b.add_argument("--levels", type=int, default=2000)
    b.add_argument("--bracket", type=float, nargs=2, default=[-2.0, 10.0])
    b.add_argument("--tol", type=float, default=0.01)
    common(b, config=False)
    b.set_defaults(func=cmd_bound)

    w = sub.add_parser("sweep", help="run a parameter grid to CSV")
    common(w)
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    if args.cmd == "bound" and args.seed is None:
        args.seed = 0
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
