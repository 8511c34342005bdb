"""Finite-blocklength achievability bounds with error detection, error exponents
and SNR-threshold searches."""
from .families import (
    BiAwgnChannel,
    BiAwgnFamily,
    PhaseNoiseFamily,
    QpskAwgnFamily,
    QpskChannel,
    family_for,
    mismatched_bound_adapter,
)
from .forney import DmcSpec, forney_bound, forney_e0, forney_exponents, quantize_biawgn
from .rcu import (
    BoundEvaluator,
    BoundResult,
    gen_info_density,
    pairwise_psi,
    pairwise_psi_tilde,
    rcu,
    thm1_bounds,
    thm2_bounds,
)
from .saddlepoint import SaddlepointQuery, TailResult, cgf_terms, saddlepoint_tail, saddlepoint_tail_cgf
from .threshold import ThresholdResult, delta_for_targets, snr_threshold_bound

__all__ = [
    "BiAwgnChannel",
    "BiAwgnFamily",
    "PhaseNoiseFamily",
    "QpskAwgnFamily",
    "QpskChannel",
    "family_for",
    "mismatched_bound_adapter",
    "DmcSpec",
    "forney_bound",
    "forney_e0",
    "forney_exponents",
    "quantize_biawgn",
    "BoundEvaluator",
    "BoundResult",
    "gen_info_density",
    "pairwise_psi",
    "pairwise_psi_tilde",
    "rcu",
    "thm1_bounds",
    "thm2_bounds",
    "SaddlepointQuery",
    "TailResult",
    "cgf_terms",
    "saddlepoint_tail",
    "saddlepoint_tail_cgf",
    "ThresholdResult",
    "delta_for_targets",
    "snr_threshold_bound",
]
