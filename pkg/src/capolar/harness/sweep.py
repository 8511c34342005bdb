"""Cartesian parameter sweeps with per-cell completion markers.

A sweep configuration is a job configuration (see :mod:`capolar.harness.jobs`)
plus a ``"grid"`` object whose keys are axes::

    "grid": {
      "n": [64, 128],                      # code length; k = round(rate * n)
      "list_size": [8, 32],
      "scheme": ["reference", {"scheme": "alg_b", "threshold_T": 0.05}],
      "ebn0_db": [2.0, 2.5, 3.0],
      "channel": [{"kind": "biawgn"}, {"kind": "phase_noise", "n_pilots": 10}]
    },
    "code_by_n": {"64": {"crc": "0x43"}, "128": {"crc": "0x89"}},
    "rate": 0.5

Absent axes keep the base job's value. Each cell is one ``run_montecarlo``
call; its CSV row is stored in ``<out>.cells/<cell>.json`` as soon as the cell
finishes, and the CSV is rewritten from the markers in grid order. Cells with
a marker are skipped on rerun. A failing cell is recorded in its marker and
the sweep moves on; failed cells are retried on the next run.
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import os
import traceback
from pathlib import Path

from .engine import run_montecarlo
from .jobs import CSV_COLUMNS, job_from_dict

__all__ = ["AXES", "grid_cells", "sweep"]

AXES = ("n", "list_size", "scheme", "ebn0_db", "channel")


def _cell_config(base: dict, axes: dict) -> dict:
    d = json.loads(json.dumps({k: v for k, v in base.items() if k not in ("grid", "code_by_n", "rate")}))
    if "n" in axes:
        n = int(axes["n"])
        code = d.setdefault("code", {})
        code["n"] = n
        if "rate" in base:
            code["k"] = int(round(base["rate"] * n))
        code.update(base.get("code_by_n", {}).get(str(n), {}))
    det = d.setdefault("detector", {})
    if "list_size" in axes:
        det["list_size"] = int(axes["list_size"])
    if "scheme" in axes:
        s = axes["scheme"]
        det.update({"scheme": s} if isinstance(s, str) else s)
    if "ebn0_db" in axes:
        d["ebn0_db"] = float(axes["ebn0_db"])
    if "channel" in axes:
        c = axes["channel"]
        d["channel"] = {"kind": c} if isinstance(c, str) else dict(c)
    return d


def grid_cells(config: dict) -> list[tuple[str, dict, dict]]:
    """``(cell_id, axis_values, job_config)`` for every grid cell in order."""
    grid = config.get("grid") or {}
    unknown = set(grid) - set(AXES)
    if unknown:
        raise ValueError(f"unknown sweep axes: {sorted(unknown)}")
    names = [a for a in AXES if a in grid]
    if not names:
        return []
    cells = []
    for values in itertools.product(*(grid[a] for a in names)):
        axes = dict(zip(names, values))
        cfg = _cell_config(config, axes)
        digest = hashlib.sha1(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:12]
        cells.append((digest, axes, cfg))
    return cells


def _write_atomic(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def sweep(config: dict, out, workers: int = 1, log=None) -> list[dict]:
    """Run every pending cell and (re)write the CSV at ``out``. Returns the rows."""
    out = Path(out)
    marks = out.with_name(out.name + ".cells")
    marks.mkdir(parents=True, exist_ok=True)
    cells = grid_cells(config)
    for cid, axes, cfg in cells:
        mark = marks / f"{cid}.json"
        if mark.exists() and json.loads(mark.read_text()).get("status") == "done":
            continue
        try:
            job = job_from_dict(cfg)
            res = run_montecarlo(job, workers)
            rec = {"status": "done", "axes": axes, "row": res.csv_row(job), "result": res.as_dict()}
        except Exception as exc:  # recorded per cell; the sweep continues
            rec = {"status": "error", "axes": axes, "error": repr(exc), "traceback": traceback.format_exc()}
        _write_atomic(mark, json.dumps(rec, default=str, indent=1))
        if log:
            log(f"cell {cid} {axes}: {rec['status']}")

    rows = []
    for cid, _, _ in cells:
        rec = json.loads((marks / f"{cid}.json").read_text())
        if rec["status"] == "done":
            rows.append(rec["row"])
    with open(out.with_suffix(out.suffix + ".tmp"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    os.replace(out.with_suffix(out.suffix + ".tmp"), out)
    return rows
