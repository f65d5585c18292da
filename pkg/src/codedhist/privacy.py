"""Analytic Gaussian mechanism calibration and report sensitivity.

The noise scale is the smallest sigma whose privacy profile
``Phi(D/(2s) - e*s/D) - exp(e) * Phi(-D/(2s) - e*s/D)`` stays below delta,
found by bisection; this is tight for every epsilon rather than only the
epsilon <= 1 regime of the classical calibration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .polar import CodeParams, max_codeword_weight

_SIGMA_LOWER_FACTOR = 1e-6
_BRACKET_WIDENINGS = 3
_CONDITION_SLACK = 1e-9


def gaussian_cdf(x: float) -> float:
    """Standard normal CDF through the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _validate(epsilon: float, delta: float, sensitivity: float) -> None:
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if sensitivity <= 0.0:
        raise ValueError(f"sensitivity must be positive, got {sensitivity}")


def privacy_profile(sigma: float, epsilon: float, sensitivity: float) -> float:
    """Left-hand side of the Gaussian (epsilon, delta) condition at ``sigma``.

    Strictly decreasing in sigma; calibration drives it down to delta.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    a = sensitivity / (2.0 * sigma) - epsilon * sigma / sensitivity
    b = -sensitivity / (2.0 * sigma) - epsilon * sigma / sensitivity
    head = gaussian_cdf(a)
    tail = gaussian_cdf(b)
    if tail <= 0.0:
        return head
    log_term = epsilon + math.log(tail)
    if log_term > 700.0:
        return math.inf
    return head - math.exp(log_term)


def classical_sigma(epsilon: float, delta: float, sensitivity: float) -> float:
    """Noise scale of the classical Gaussian mechanism bound."""
    _validate(epsilon, delta, sensitivity)
    return sensitivity * math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon


def calibrate_sigma(epsilon: float, delta: float, sensitivity: float) -> float:
    """Minimal Gaussian noise scale meeting the (epsilon, delta) condition.

    Bisection runs on a bracket from ``sensitivity * 1e-6`` to ten times the
    classical scale (widened by factors of 10 up to three times if the upper
    end does not yet satisfy the condition) and is iterated until the bracket
    collapses to machine precision, well inside a 1e-12 relative tolerance.
    Returns the upper end, the smallest value verified to satisfy the
    condition.
    """
    _validate(epsilon, delta, sensitivity)
    lo = sensitivity * _SIGMA_LOWER_FACTOR
    hi = 10.0 * classical_sigma(epsilon, delta, sensitivity)
    if privacy_profile(lo, epsilon, sensitivity) <= delta:
        # The profile tends to 1 as sigma -> 0, so the lower end must violate.
        raise ValueError(
            "bisection bracket invalid: lower end already satisfies the condition"
        )
    widenings = 0
    while privacy_profile(hi, epsilon, sensitivity) > delta:
        if widenings >= _BRACKET_WIDENINGS:
            raise ValueError(
                f"no satisfying sigma found up to {hi} for "
                f"epsilon={epsilon}, delta={delta}, sensitivity={sensitivity}"
            )
        hi *= 10.0
        widenings += 1
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if privacy_profile(mid, epsilon, sensitivity) <= delta:
            hi = mid
        else:
            lo = mid
    return hi


def compute_sensitivity(
    params: CodeParams,
    exclude_all_ones: bool = False,
    include_bottom: bool = True,
) -> float:
    """Worst-case L2 distance between two normalized client signals.

    Two held items differ by ``2 * sqrt(w_max / n)`` where ``w_max`` is the
    largest codeword weight (the difference of two codewords is again a
    codeword).  ``include_bottom`` also admits the null signal, whose distance
    to any held item is exactly 1, and is on by default because clients
    without the item are part of the threat model.
    """
    w_max = max_codeword_weight(params, exclude_all_ones=exclude_all_ones)
    pairwise = 2.0 * math.sqrt(w_max / params.n)
    if include_bottom:
        return max(pairwise, 1.0)
    return pairwise


@dataclass(frozen=True)
class PrivacyParams:
    """Privacy budget plus the noise scale that satisfies it.

    ``sigma`` must satisfy the (epsilon, delta) condition at the stored
    sensitivity; anything larger than the calibrated minimum is accepted.
    ``test_mode`` permits sigma == 0 so deterministic fixtures can bypass the
    mechanism; production paths leave it off and are rejected if under-noised.
    """

    epsilon: float
    delta: float
    sensitivity: float
    sigma: float
    test_mode: bool = False

    def __post_init__(self) -> None:
        _validate(self.epsilon, self.delta, self.sensitivity)
        if self.sigma == 0.0:
            if not self.test_mode:
                raise ValueError("sigma == 0 requires test_mode=True")
            return
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
        lhs = privacy_profile(self.sigma, self.epsilon, self.sensitivity)
        if lhs > self.delta * (1.0 + _CONDITION_SLACK):
            raise ValueError(
                f"sigma={self.sigma} does not satisfy the (epsilon, delta) "
                f"condition: profile {lhs} > delta {self.delta}"
            )

    @classmethod
    def calibrated(cls, epsilon: float, delta: float, sensitivity: float) -> "PrivacyParams":
        return cls(
            epsilon=epsilon,
            delta=delta,
            sensitivity=sensitivity,
            sigma=calibrate_sigma(epsilon, delta, sensitivity),
        )

    @classmethod
    def noiseless(cls, epsilon: float, delta: float, sensitivity: float) -> "PrivacyParams":
        """Test-mode parameters that disable the perturbation."""
        return cls(
            epsilon=epsilon,
            delta=delta,
            sensitivity=sensitivity,
            sigma=0.0,
            test_mode=True,
        )


def perturb(
    x: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    *,
    allow_zero: bool = False,
) -> np.ndarray:
    """Add iid Gaussian noise of scale ``sigma`` to ``x``.

    sigma == 0 is rejected unless ``allow_zero`` marks an explicit test-mode
    call; the generator is always consumed so call sequences stay aligned.
    """
    if sigma < 0.0 or (sigma == 0.0 and not allow_zero):
        raise ValueError(f"sigma must be positive (or zero with allow_zero), got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    return x + rng.normal(0.0, sigma, size=x.shape)
