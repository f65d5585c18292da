"""Client-side report generation and server-side estimation.

One round of the coded protocol: every client holding the (unique) heavy item
submits the BPSK image of its codeword plus Gaussian noise, everyone else
submits pure noise around the zero vector; the server averages the reports,
list-decodes the average, and reads the frequency off the inner product with
the re-encoded item.  The hard-decision baseline replaces the coded report
with a single randomized-response coordinate and a correlation decoder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decoder import llr_from_aggregate, ml_decode, scl_decode
from .polar import CodeParams, encode
from .privacy import PrivacyParams, perturb

# LLR scale floor when a test-mode round runs with sigma == 0.
_ZERO_SIGMA_LLR_FLOOR = 1e-6


@dataclass(frozen=True)
class ClientReport:
    """One client's submission, dense (coded) or sparse (baseline).

    Sparse reports carry exactly one nonzero coordinate whose magnitude is
    the randomized-response scale times sqrt(n).
    """

    kind: str
    vector: np.ndarray | None = None
    index: int | None = None
    value: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "dense":
            if self.vector is None or self.index is not None or self.value is not None:
                raise ValueError("dense reports carry a vector and nothing else")
        elif self.kind == "sparse":
            if self.vector is not None or self.index is None or self.value is None:
                raise ValueError("sparse reports carry (index, value) and no vector")
        else:
            raise ValueError(f"kind must be 'dense' or 'sparse', got {self.kind!r}")

    def to_dense(self, n: int) -> np.ndarray:
        if self.kind == "dense":
            return np.asarray(self.vector, dtype=np.float64)
        out = np.zeros(n, dtype=np.float64)
        out[self.index] = self.value
        return out


@dataclass(frozen=True)
class SuccinctHistogram:
    """Decoded item estimate and its estimated frequency."""

    item_estimate: np.ndarray
    frequency_estimate: float


@dataclass(frozen=True)
class RoundTrace:
    """White-box view of one coded round.

    The aggregate is formed as ``holder_fraction * x_star + mean_noise``,
    which the mean of the individual reports equals identically (the held
    signals are constant across holders), so the decomposition is available
    exactly rather than up to float reassociation.
    """

    x_star: np.ndarray
    mean_noise: np.ndarray
    holder_fraction: float
    aggregate: np.ndarray


@dataclass(frozen=True)
class BaselineTrace:
    """White-box view of one baseline round."""

    aggregate: np.ndarray
    rounded: np.ndarray
    scale: float


def map_item(item: np.ndarray | None, params: CodeParams) -> np.ndarray:
    """Normalized BPSK image of an item, or the zero vector for no item.

    Codeword bit b maps to (2b - 1) / sqrt(n), so every held item lands on
    the unit sphere and the null report is the origin.
    """
    if item is None:
        return np.zeros(params.n, dtype=np.float64)
    word = encode(item, params)
    return (2.0 * word.astype(np.float64) - 1.0) / math.sqrt(params.n)


def client_report(
    item: np.ndarray | None,
    params: CodeParams,
    privacy: PrivacyParams,
    rng: np.random.Generator,
) -> ClientReport:
    """Coded client report: mapped item plus iid Gaussian noise."""
    x = map_item(item, params)
    z = perturb(x, privacy.sigma, rng, allow_zero=privacy.test_mode)
    return ClientReport(kind="dense", vector=z)


def aggregate(reports: list[ClientReport]) -> np.ndarray:
    """Coordinatewise mean of the reports, in list order."""
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    first = reports[0]
    n = first.vector.shape[0] if first.kind == "dense" else None
    if n is None:
        raise ValueError("sparse reports need an explicit length; use aggregate_sparse")
    total = np.zeros(n, dtype=np.float64)
    for report in reports:
        if report.kind == "dense":
            total += report.vector
        else:
            total[report.index] += report.value
    return total / len(reports)


def aggregate_sparse(reports: list[ClientReport], n: int) -> np.ndarray:
    """Mean of sparse (or mixed) reports when no dense vector fixes n."""
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    total = np.zeros(n, dtype=np.float64)
    for report in reports:
        if report.kind == "dense":
            total += report.vector
        else:
            total[report.index] += report.value
    return total / len(reports)


def estimate_frequency(
    item_estimate: np.ndarray, y: np.ndarray, params: CodeParams
) -> float:
    """Frequency estimate: inner product of the re-encoded item with y."""
    return float(np.dot(map_item(item_estimate, params), np.asarray(y, dtype=np.float64)))


def _holder_signal(
    inputs: list[np.ndarray | None], params: CodeParams
) -> tuple[int, np.ndarray | None]:
    """Count holders and return the unique held item (None if nobody holds)."""
    if not inputs:
        raise ValueError("need at least one client input")
    held = [item for item in inputs if item is not None]
    for other in held[1:]:
        if not np.array_equal(held[0], other):
            raise ValueError("all holders must report the same unique item")
    return len(held), (held[0] if held else None)


def run_round_proposed(
    inputs: list[np.ndarray | None],
    params: CodeParams,
    privacy: PrivacyParams,
    list_size: int,
    rng: np.random.Generator,
    mode: str = "min_sum",
    return_trace: bool = False,
):
    """One full round of the coded protocol.

    Noise is drawn as one (N, n) block, which consumes the generator exactly
    like N successive per-client draws.  The aggregate and the frequency
    estimate are evaluated through the signal/noise decomposition (see
    ``RoundTrace``); the estimate is the inner product of the decoded BPSK
    word with the aggregate, split over the two components.
    """
    holders, item = _holder_signal(inputs, params)
    count = len(inputs)
    x_star = map_item(item, params)
    noise = rng.normal(0.0, privacy.sigma, size=(count, params.n))
    mean_noise = noise.mean(axis=0)
    holder_fraction = holders / count
    y = holder_fraction * x_star + mean_noise

    sigma_eff = privacy.sigma if privacy.sigma > 0.0 else _ZERO_SIGMA_LLR_FLOOR
    # The aggregate carries bit 1 as +1/sqrt(n) while the list decoder reads
    # positive LLRs as evidence for bit 0, so the bridge flips the sign.
    outcome = scl_decode(-llr_from_aggregate(y, sigma_eff), params, list_size, mode)
    x_hat = map_item(outcome.message, params)
    f_hat = holder_fraction * float(np.dot(x_hat, x_star)) + float(
        np.dot(x_hat, mean_noise)
    )
    hist = SuccinctHistogram(item_estimate=outcome.message, frequency_estimate=f_hat)
    if not return_trace:
        return hist
    trace = RoundTrace(
        x_star=x_star,
        mean_noise=mean_noise,
        holder_fraction=holder_fraction,
        aggregate=y,
    )
    return hist, trace


def randomized_response_scale(epsilon: float) -> float:
    """Debiasing constant (exp(eps) + 1) / (exp(eps) - 1) of the baseline."""
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    e = math.exp(epsilon)
    return (e + 1.0) / (e - 1.0)


def _baseline_sign_units(
    held: np.ndarray,
    coords: np.ndarray,
    rolls: np.ndarray,
    x_star: np.ndarray,
    epsilon: float,
) -> np.ndarray:
    """Signed report units (+1 or -1) for picked coordinates.

    Every client pushes its picked entry through the same binary randomized
    response (keep probability e^eps/(1+e^eps)); a non-holder substitutes a
    dummy entry of +1/sqrt(n).  Every report therefore carries the same
    magnitude c * sqrt(n) (which is what makes the response eps-LDP across
    the whole input alphabet including "no item"), so only the sign unit is
    returned and callers multiply the common magnitude back on.  Keeping the
    aggregate a scaled integer count makes exact sign ties land on zero
    instead of on summation dust.
    """
    keep_p = math.exp(epsilon) / (1.0 + math.exp(epsilon))
    rr_sign = np.where(rolls < keep_p, 1.0, -1.0)
    entry_sign = np.where(held, np.sign(x_star)[coords], 1.0)
    return rr_sign * entry_sign


def baseline_client_report(
    item: np.ndarray | None,
    params: CodeParams,
    epsilon: float,
    rng: np.random.Generator,
) -> ClientReport:
    """Single-coordinate randomized-response report of the baseline."""
    coord = int(rng.integers(0, params.n))
    roll = rng.random()
    x = map_item(item, params)
    unit = _baseline_sign_units(
        np.array([item is not None]),
        np.array([coord]),
        np.array([roll]),
        x,
        epsilon,
    )[0]
    value = randomized_response_scale(epsilon) * math.sqrt(params.n) * unit
    return ClientReport(kind="sparse", index=coord, value=float(value))


def run_round_baseline(
    inputs: list[np.ndarray | None],
    params: CodeParams,
    epsilon: float,
    rng: np.random.Generator,
    return_trace: bool = False,
):
    """One full round of the hard-decision baseline.

    Coordinates for all clients are drawn first, then all rolls, so the
    round consumes the generator in two blocks.  The decoder sees the
    aggregate rounded to +/- 1/sqrt(n) (ties to +), while the frequency
    estimate uses the unrounded aggregate.
    """
    holders, item = _holder_signal(inputs, params)
    count = len(inputs)
    n = params.n
    x_star = map_item(item, params)
    coords = rng.integers(0, n, size=count)
    rolls = rng.random(size=count)
    held = np.array([inp is not None for inp in inputs])
    units = _baseline_sign_units(held, coords, rolls, x_star, epsilon)
    net = np.bincount(coords, weights=units, minlength=n)
    y = (randomized_response_scale(epsilon) * math.sqrt(n) / count) * net

    amp = 1.0 / math.sqrt(n)
    rounded = np.where(y >= 0.0, amp, -amp)
    outcome = ml_decode(rounded, params)
    f_hat = estimate_frequency(outcome.message, y, params)
    hist = SuccinctHistogram(item_estimate=outcome.message, frequency_estimate=f_hat)
    if not return_trace:
        return hist
    trace = BaselineTrace(
        aggregate=y, rounded=rounded, scale=randomized_response_scale(epsilon)
    )
    return hist, trace
