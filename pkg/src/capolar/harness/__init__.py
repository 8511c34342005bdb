"""Monte Carlo campaigns, SNR-threshold searches and parameter sweeps."""
from .engine import TrialStats, run_campaign, run_chunk, run_montecarlo, trial_rng
from .jobs import (
    CSV_COLUMNS,
    ChannelSpec,
    CodeSpec,
    SimJob,
    SimResult,
    StoppingRule,
    job_from_dict,
    job_to_dict,
    load_config,
)
from .search import ThresholdSimResult, best_parameters, snr_threshold_sim, snr_thresholds_sim
from .stats import clopper_pearson
from .sweep import grid_cells, sweep

__all__ = [
    "TrialStats",
    "run_campaign",
    "run_chunk",
    "run_montecarlo",
    "trial_rng",
    "CSV_COLUMNS",
    "ChannelSpec",
    "CodeSpec",
    "SimJob",
    "SimResult",
    "StoppingRule",
    "job_from_dict",
    "job_to_dict",
    "load_config",
    "ThresholdSimResult",
    "best_parameters",
    "snr_threshold_sim",
    "snr_thresholds_sim",
    "clopper_pearson",
    "grid_cells",
    "sweep",
]
