"""Simulation job description, results and the JSON configuration schema.

A configuration file is one JSON object::

    {
      "code": {"n": 128, "k": 64, "crc": "0x89", "design_snr_db": 3.5,
               "frozen_path": null},
      "detector": {"scheme": "alg_b", "list_size": 32, "delta1": null,
                   "threshold_T": 0.05},
      "channel": {"kind": "biawgn", "n_pilots": 0},
      "ebn0_db": 3.5,
      "targets": [1e-3, 1e-5],
      "bracket": [2.0, 5.0],
      "stopping": {"min_undetected": 100, "min_total": 10000,
                   "max_trials": 1000000000},
      "seed": 1,
      "chunk": 500
    }

``code.n`` is the polar length and ``code.k`` the message length, so the
polar code carries ``k + delta`` bits. ``threshold_T`` may be ``null`` for the
disabled test. ``ebn0_db`` is the operating point for ``simulate``;
``targets`` and ``bracket`` drive ``threshold``. A sweep file adds a
``"grid"`` object, see :mod:`capolar.harness.sweep`.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from ..channels import ChannelConfig, ChannelKind, snr_to_sigma
from ..crc import CrcSpec
from ..detectors import DISABLED, DetectorConfig, Scheme
from ..polar import PolarCode, design_ga, load_frozen

__all__ = ["CodeSpec", "ChannelSpec", "StoppingRule", "SimJob", "SimResult", "job_from_dict", "job_to_dict", "load_config"]

CSV_COLUMNS = (
    "scheme", "n", "k", "L", "delta1", "delta2", "T", "channel", "n_pilots", "ebn0_db",
    "trials", "total_errors", "undetected_errors", "tep", "uep", "tep_ci_hi", "uep_ci_hi", "seed",
)  # fmt: skip

DEFAULT_DESIGN_SNR_DB = 3.0


@dataclass(frozen=True)
class CodeSpec:
    """CA polar code: polar length ``n``, message length ``k``, outer CRC polynomial.

    ``crc`` of ``"none"`` means no outer code. The frozen set comes from
    ``frozen_path`` if given, otherwise from GA construction at ``design_snr_db``.
    """

    n: int
    k: int
    crc: str = "none"
    design_snr_db: float = DEFAULT_DESIGN_SNR_DB
    frozen_path: str | None = None

    def crc_spec(self) -> CrcSpec:
        return CrcSpec.none(self.k) if str(self.crc).lower() == "none" else CrcSpec.from_hex(self.crc, self.k)

    def build(self) -> tuple[PolarCode, CrcSpec]:
        crc = self.crc_spec()
        if self.frozen_path:
            code = load_frozen(self.frozen_path, self.n)
            if code.h != crc.codeword_len:
                raise ValueError(f"frozen set carries {code.h} bits, CRC codeword has {crc.codeword_len}")
        else:
            code = design_ga(self.n, crc.codeword_len, self.design_snr_db, rate=self.k / self.n)
        return code, crc


@dataclass(frozen=True)
class ChannelSpec:
    kind: ChannelKind = ChannelKind.BIAWGN
    n_pilots: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))

    @property
    def bits_per_symbol(self) -> int:
        return 1 if self.kind is ChannelKind.BIAWGN else 2

    def at(self, ebn0_db: float, code: CodeSpec) -> ChannelConfig:
        """Channel at ``ebn0_db``; energy per information bit, pilots not counted."""
        rate = code.k * self.bits_per_symbol / code.n
        return ChannelConfig(self.kind, snr_to_sigma(ebn0_db, rate), rate, self.n_pilots)


@dataclass(frozen=True)
class StoppingRule:
    """Stop at ``min_undetected`` undetected or ``min_total`` total errors, or ``max_trials``."""

    min_undetected: int = 100
    min_total: int = 10_000
    max_trials: int = 10**9

    def __post_init__(self):
        if min(self.min_undetected, self.min_total, self.max_trials) < 1:
            raise ValueError("stopping quotas must be positive")
        if self.max_trials < min(self.min_undetected, self.min_total):
            raise ValueError("max_trials cannot reach either error quota")


@dataclass(frozen=True)
class SimJob:
    code: CodeSpec
    detector: DetectorConfig
    channel: ChannelSpec = ChannelSpec()
    ebn0_db: float | None = None
    targets: tuple[float, float] | None = None
    bracket: tuple[float, float] | None = None
    stopping: StoppingRule = StoppingRule()
    seed: int = 0
    chunk: int = 500

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.chunk < 1:
            raise ValueError("chunk must be positive")
        if self.targets is not None:
            eps_t, eps_u = self.targets
            if not 0 < eps_u <= eps_t < 1:
                raise ValueError("targets need 0 < eps_u* <= eps_t* < 1")
            object.__setattr__(self, "targets", (float(eps_t), float(eps_u)))
        if self.bracket is not None:
            lo, hi = self.bracket
            if not lo < hi:
                raise ValueError("bracket must be (low, high) with low < high")
            object.__setattr__(self, "bracket", (float(lo), float(hi)))
        if self.channel.kind is ChannelKind.PHASE_NOISE and self.code.n % 2:
            raise ValueError("QPSK needs an even code length")

    def replace(self, **kw) -> "SimJob":
        return dataclasses.replace(self, **kw)


@dataclass
class SimResult:
    trials: int
    total_errors: int
    undetected_errors: int
    tep_hat: float
    uep_hat: float
    tep_ci: tuple[float, float]
    uep_ci: tuple[float, float]
    params_used: dict = field(default_factory=dict)
    wall_time: float = 0.0
    status: str = "ok"  # or "budget_exhausted"

    def __post_init__(self):
        if not 0 <= self.undetected_errors <= self.total_errors <= self.trials:
            raise ValueError("need undetected <= total errors <= trials")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["tep_ci"] = list(self.tep_ci)
        d["uep_ci"] = list(self.uep_ci)
        return d

    def csv_row(self, job: SimJob) -> dict:
        det = job.detector
        delta = job.code.crc_spec().delta
        d1 = self.params_used.get("delta1", det.delta1)
        T = self.params_used.get("threshold_T", det.threshold_T)
        return {
            "scheme": det.scheme.value,
            "n": job.code.n,
            "k": job.code.k,
            "L": det.list_size,
            "delta1": "" if d1 is None or det.scheme is not Scheme.ALG_A else d1,
            "delta2": "" if d1 is None or det.scheme is not Scheme.ALG_A else delta - d1,
            "T": "" if det.scheme is not Scheme.ALG_B or T is DISABLED or T is None else T,
            "channel": job.channel.kind.value,
            "n_pilots": job.channel.n_pilots,
            "ebn0_db": self.params_used.get("ebn0_db", job.ebn0_db),
            "trials": self.trials,
            "total_errors": self.total_errors,
            "undetected_errors": self.undetected_errors,
            "tep": self.tep_hat,
            "uep": self.uep_hat,
            "tep_ci_hi": self.tep_ci[1],
            "uep_ci_hi": self.uep_ci[1],
            "seed": job.seed,
        }


# ---------------------------------------------------------------- (de)serialization


def _detector_from(d: dict) -> DetectorConfig:
    T = d.get("threshold_T")
    return DetectorConfig(
        d.get("scheme", "reference"),
        int(d.get("list_size", 8)),
        None if d.get("delta1") is None else int(d["delta1"]),
        DISABLED if T is None else float(T),
    )


def job_from_dict(d: dict) -> SimJob:
    unknown = set(d) - {f.name for f in dataclasses.fields(SimJob)} - {"grid"}
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    code = CodeSpec(**d["code"])
    return SimJob(
        code=code,
        detector=_detector_from(d.get("detector", {})),
        channel=ChannelSpec(**d.get("channel", {})),
        ebn0_db=d.get("ebn0_db"),
        targets=tuple(d["targets"]) if d.get("targets") is not None else None,
        bracket=tuple(d["bracket"]) if d.get("bracket") is not None else None,
        stopping=StoppingRule(**{k: int(v) for k, v in d.get("stopping", {}).items()}),
        seed=int(d.get("seed", 0)),
        chunk=int(d.get("chunk", 500)),
    )


def job_to_dict(job: SimJob) -> dict:
    det = job.detector
    return {
        "code": dataclasses.asdict(job.code),
        "detector": {
            "scheme": det.scheme.value,
            "list_size": det.list_size,
            "delta1": det.delta1,
            "threshold_T": None if det.threshold_T is DISABLED else det.threshold_T,
        },
        "channel": {"kind": job.channel.kind.value, "n_pilots": job.channel.n_pilots},
        "ebn0_db": job.ebn0_db,
        "targets": None if job.targets is None else list(job.targets),
        "bracket": None if job.bracket is None else list(job.bracket),
        "stopping": dataclasses.asdict(job.stopping),
        "seed": job.seed,
        "chunk": job.chunk,
    }


def load_config(path) -> dict:
    with open(path) as fh:
        d = json.load(fh)
    if not isinstance(d, dict):
        raise ValueError("configuration must be a JSON object")
    return d

