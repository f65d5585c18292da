"""Deterministic Monte Carlo harness for block-error and frequency sweeps.

Every trial derives its own generator seed from (config seed, grid-point
index, trial index) through a splitmix64 chain, so any trial can be replayed
in isolation and results are identical regardless of how trials are sliced
across worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import fisher_exact

from .polar import CodeParams, construct_code, message_from_index, message_space_size
from .privacy import PrivacyParams, calibrate_sigma, compute_sensitivity
from .protocol import (
    randomized_response_scale,
    run_round_baseline,
    run_round_proposed,
)

PROTOCOLS = ("proposed", "baseline")

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one sweep; hashable and picklable.

    ``noiseless`` is a test-mode switch for the coded protocol only: it runs
    rounds with sigma = 0 so decode and estimation paths can be checked
    deterministically.
    """

    protocol: str
    n: int
    k: int
    N: int
    f_true: float
    delta: float
    epsilon_grid: tuple[float, ...]
    trials: int
    list_size: int
    seed: int
    restrict_last_bit: bool = False
    mode: str = "min_sum"
    design_erasure_prob: float = 0.5
    noiseless: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid)
        )
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"k must satisfy 1 <= k <= n, got {self.k}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not 0.0 < self.f_true <= 1.0:
            raise ValueError(f"f_true must lie in (0, 1], got {self.f_true}")
        if _round_half_up(self.f_true * self.N) < 1:
            raise ValueError("f_true * N must round to at least one holder")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.epsilon_grid:
            raise ValueError("epsilon_grid must be nonempty")
        if any(e <= 0.0 for e in self.epsilon_grid):
            raise ValueError("epsilon_grid entries must be positive")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.list_size < 1:
            raise ValueError(f"list_size must be >= 1, got {self.list_size}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be an explicit nonnegative integer")
        if self.mode not in ("exact", "min_sum"):
            raise ValueError(f"mode must be 'exact' or 'min_sum', got {self.mode!r}")
        if not 0.0 < self.design_erasure_prob < 1.0:
            raise ValueError(
                f"design_erasure_prob must lie in (0, 1), got {self.design_erasure_prob}"
            )
        if self.noiseless and self.protocol != "proposed":
            raise ValueError("noiseless test mode applies to the proposed protocol only")


@dataclass(frozen=True)
class GridPoint:
    """One epsilon on the sweep grid with its derived constants."""

    index: int
    epsilon: float
    sigma: float
    sensitivity: float
    rr_scale: float


@dataclass(frozen=True)
class TrialResult:
    decoded_ok: bool
    f_hat: float
    abs_err: float
    trial_seed: int


@dataclass(frozen=True)
class SweepResult:
    """Aggregated statistics of one (config, epsilon) cell."""

    protocol: str
    n: int
    k: int
    N: int
    f_true: float
    delta: float
    epsilon: float
    sigma: float
    trials: int
    bler: float
    mean_abs_err: float
    mean_abs_err_given_correct: float
    err_std_given_correct: float


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(seed: int, point_index: int, trial_index: int) -> int:
    """64-bit seed for one trial: a splitmix64 chain over the three inputs."""
    s = _splitmix64(seed & _MASK64)
    s = _splitmix64(s ^ (point_index & _MASK64))
    s = _splitmix64(s ^ (trial_index & _MASK64))
    return s


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@lru_cache(maxsize=None)
def _code_for(
    n: int, k: int, design_erasure_prob: float, restrict_last_bit: bool
) -> CodeParams:
    return construct_code(n, k, design_erasure_prob, restrict_last_bit)


@lru_cache(maxsize=None)
def _sensitivity_for(
    n: int, k: int, design_erasure_prob: float, restrict_last_bit: bool
) -> float:
    return compute_sensitivity(
        _code_for(n, k, design_erasure_prob, restrict_last_bit)
    )


def config_code(cfg: ExperimentConfig) -> CodeParams:
    return _code_for(cfg.n, cfg.k, cfg.design_erasure_prob, cfg.restrict_last_bit)


def config_sensitivity(cfg: ExperimentConfig) -> float:
    return _sensitivity_for(cfg.n, cfg.k, cfg.design_erasure_prob, cfg.restrict_last_bit)


def generate_population(
    cfg: ExperimentConfig, rng: np.random.Generator
) -> tuple[np.ndarray, list[np.ndarray | None]]:
    """Draw the heavy item and lay out the client inputs.

    The item is uniform over the admissible message space; exactly
    round-half-up(f_true * N) clients hold it, placed at the head of the
    list, and everyone else holds nothing.
    """
    params = config_code(cfg)
    index = int(rng.integers(0, message_space_size(params)))
    u_star = message_from_index(index, params)
    holders = _round_half_up(cfg.f_true * cfg.N)
    inputs: list[np.ndarray | None] = [u_star] * holders + [None] * (cfg.N - holders)
    return u_star, inputs


def build_grid(cfg: ExperimentConfig) -> list[GridPoint]:
    """Calibrate per-epsilon constants once for the whole sweep."""
    points = []
    for index, epsilon in enumerate(cfg.epsilon_grid):
        if cfg.protocol == "proposed":
            sensitivity = config_sensitivity(cfg)
            sigma = 0.0 if cfg.noiseless else calibrate_sigma(epsilon, cfg.delta, sensitivity)
            rr = math.nan
        else:
            sensitivity = math.nan
            sigma = math.nan
            rr = randomized_response_scale(epsilon)
        points.append(
            GridPoint(
                index=index,
                epsilon=epsilon,
                sigma=sigma,
                sensitivity=sensitivity,
                rr_scale=rr,
            )
        )
    return points


def run_trial(cfg: ExperimentConfig, point: GridPoint, trial_index: int) -> TrialResult:
    """Run one self-contained trial; replayable from its derived seed."""
    seed = trial_seed(cfg.seed, point.index, trial_index)
    rng = np.random.default_rng(seed)
    params = config_code(cfg)
    u_star, inputs = generate_population(cfg, rng)
    if cfg.protocol == "proposed":
        if cfg.noiseless:
            privacy = PrivacyParams.noiseless(point.epsilon, cfg.delta, point.sensitivity)
        else:
            privacy = PrivacyParams(
                epsilon=point.epsilon,
                delta=cfg.delta,
                sensitivity=point.sensitivity,
                sigma=point.sigma,
            )
        hist = run_round_proposed(inputs, params, privacy, cfg.list_size, rng, cfg.mode)
    else:
        hist = run_round_baseline(inputs, params, point.epsilon, rng)
    decoded_ok = bool(np.array_equal(hist.item_estimate, u_star))
    return TrialResult(
        decoded_ok=decoded_ok,
        f_hat=hist.frequency_estimate,
        abs_err=abs(hist.frequency_estimate - cfg.f_true),
        trial_seed=seed,
    )


def _trial_block(args) -> list[TrialResult]:
    cfg, point, start, stop = args
    return [run_trial(cfg, point, t) for t in range(start, stop)]


def _reduce_point(cfg: ExperimentConfig, point: GridPoint, rows: list[TrialResult]) -> SweepResult:
    ok = np.array([r.decoded_ok for r in rows], dtype=bool)
    abs_err = np.array([r.abs_err for r in rows], dtype=np.float64)
    f_hat = np.array([r.f_hat for r in rows], dtype=np.float64)
    failures = int((~ok).sum())
    bler = failures / cfg.trials
    mean_abs_err = float(abs_err.mean())
    n_ok = int(ok.sum())
    if n_ok >= 1:
        mean_abs_err_ok = float(abs_err[ok].mean())
    else:
        mean_abs_err_ok = math.nan
    if n_ok >= 2:
        err_std_ok = float(np.std(f_hat[ok] - cfg.f_true, ddof=1))
    else:
        err_std_ok = math.nan
    return SweepResult(
        protocol=cfg.protocol,
        n=cfg.n,
        k=cfg.k,
        N=cfg.N,
        f_true=cfg.f_true,
        delta=cfg.delta,
        epsilon=point.epsilon,
        sigma=point.sigma,
        trials=cfg.trials,
        bler=bler,
        mean_abs_err=mean_abs_err,
        mean_abs_err_given_correct=mean_abs_err_ok,
        err_std_given_correct=err_std_ok,
    )


def run_sweep(cfg: ExperimentConfig, workers: int = 1) -> list[SweepResult]:
    """Run every (epsilon, trial) cell and reduce to per-epsilon statistics.

    Trials are always reduced in (grid point, trial index) order, so the
    output is bitwise independent of ``workers``.  Any trial failure aborts
    the sweep with no partial results.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    points = build_grid(cfg)
    per_point_rows: list[list[TrialResult]] = []
    if workers == 1:
        for point in points:
            per_point_rows.append(
                [run_trial(cfg, point, t) for t in range(cfg.trials)]
            )
    else:
        block = max(1, math.ceil(cfg.trials / (workers * 4)))
        tasks = []
        for point in points:
            for start in range(0, cfg.trials, block):
                tasks.append((cfg, point, start, min(start + block, cfg.trials)))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_trial_block, tasks))
        cursor = 0
        for point in points:
            rows: list[TrialResult] = []
            while len(rows) < cfg.trials:
                rows.extend(blocks[cursor])
                cursor += 1
            per_point_rows.append(rows)
    return [
        _reduce_point(cfg, point, rows)
        for point, rows in zip(points, per_point_rows)
    ]


def increase_pvalue(
    fail_ref: int, trials_ref: int, fail_new: int, trials_new: int
) -> float:
    """One-sided p-value that the failure rate rose from ref to new.

    Fisher's exact test on the 2x2 failure table; small values mean the new
    cell fails significantly more often than the reference cell.
    """
    table = [
        [fail_new, trials_new - fail_new],
        [fail_ref, trials_ref - fail_ref],
    ]
    return float(fisher_exact(table, alternative="greater")[1])
