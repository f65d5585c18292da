"""Locally differentially private succinct histograms over coded reports."""

from .decoder import DecodeOutcome, llr_from_aggregate, ml_decode, sc_decode, scl_decode
from .harness import (
    ExperimentConfig,
    GridPoint,
    SweepResult,
    TrialResult,
    build_grid,
    generate_population,
    increase_pvalue,
    run_sweep,
    run_trial,
    trial_seed,
)
from .polar import (
    CodeParams,
    bhattacharyya_parameters,
    construct_code,
    encode,
    max_codeword_weight,
    message_from_index,
    message_space_size,
)
from .privacy import (
    PrivacyParams,
    calibrate_sigma,
    classical_sigma,
    compute_sensitivity,
    gaussian_cdf,
    perturb,
    privacy_profile,
)
from .protocol import (
    BaselineTrace,
    ClientReport,
    RoundTrace,
    SuccinctHistogram,
    aggregate,
    aggregate_sparse,
    baseline_client_report,
    client_report,
    estimate_frequency,
    map_item,
    randomized_response_scale,
    run_round_baseline,
    run_round_proposed,
)

__version__ = "0.1.0"

__all__ = [
    "BaselineTrace",
    "ClientReport",
    "CodeParams",
    "DecodeOutcome",
    "ExperimentConfig",
    "GridPoint",
    "PrivacyParams",
    "RoundTrace",
    "SuccinctHistogram",
    "SweepResult",
    "TrialResult",
    "aggregate",
    "aggregate_sparse",
    "baseline_client_report",
    "bhattacharyya_parameters",
    "build_grid",
    "calibrate_sigma",
    "classical_sigma",
    "client_report",
    "compute_sensitivity",
    "construct_code",
    "encode",
    "estimate_frequency",
    "gaussian_cdf",
    "generate_population",
    "increase_pvalue",
    "llr_from_aggregate",
    "map_item",
    "max_codeword_weight",
    "message_from_index",
    "message_space_size",
    "ml_decode",
    "perturb",
    "privacy_profile",
    "randomized_response_scale",
    "run_round_baseline",
    "run_round_proposed",
    "run_sweep",
    "run_trial",
    "sc_decode",
    "scl_decode",
    "trial_seed",
]
