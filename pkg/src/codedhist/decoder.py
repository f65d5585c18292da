"""Successive-cancellation, list, and maximum-likelihood decoding.

All decoders consume log-likelihood ratios (or the raw aggregate for the
correlation decoder) and emit the message bits in ascending information-index
order.  Two LLR kernels are supported: ``exact`` uses the boxplus check-node
update and log-domain path penalties, ``min_sum`` the usual hardware-style
approximation whose decisions are invariant to positive rescaling of the
input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polar import CodeParams, iter_codeword_chunks

MODES = ("exact", "min_sum")


@dataclass(frozen=True)
class DecodeOutcome:
    """Decode result: message bits, the winning path metric, and the mode.

    Path metrics are additive penalties (smaller is better).  ``ml_decode``
    reports the negated correlation score so the convention is shared.
    """

    message: np.ndarray
    path_metric: float
    mode: str


def llr_from_aggregate(y: np.ndarray, sigma: float) -> np.ndarray:
    """Per-coordinate channel LLRs of the averaged reports.

    For a Gaussian perturbation with scale ``sigma`` the aggregate carries
    LLR (2 / sigma**2) * y; any common positive factor is irrelevant to the
    min-sum decoder but matters to the exact kernel.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    y = np.asarray(y, dtype=np.float64)
    return (2.0 / (sigma * sigma)) * y


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _f_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Stable boxplus; the log-domain corrections belong inside the signed
    # magnitude because boxplus is odd in each argument.
    sa, sb = np.abs(a), np.abs(b)
    mag = np.minimum(sa, sb)
    mag += np.log1p(np.exp(-(sa + sb))) - np.log1p(np.exp(-np.abs(sa - sb)))
    return np.sign(a) * np.sign(b) * mag


def _f_min_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def _g(a: np.ndarray, b: np.ndarray, u: np.ndarray) -> np.ndarray:
    return b + (1.0 - 2.0 * u.astype(np.float64)) * a


def _penalty(llr, u_bit: int, mode: str):
    """Metric increment for deciding ``u_bit`` against LLR ``llr``."""
    sign = 1.0 - 2.0 * u_bit
    if mode == "exact":
        return np.logaddexp(0.0, -sign * llr)
    # min_sum: pay |llr| only when the decision contradicts the LLR sign.
    return np.maximum(-sign * llr, 0.0)


def sc_decode(llr: np.ndarray, params: CodeParams, mode: str = "min_sum") -> DecodeOutcome:
    """Plain successive-cancellation decoding.

    Ties (LLR exactly zero) resolve to bit 0, and frozen or restricted
    positions always emit 0 while still accruing their metric penalty, so the
    result matches ``scl_decode`` with list size 1 bit for bit.
    """
    _check_mode(mode)
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (params.n,):
        raise ValueError(f"llr must have shape ({params.n},), got {llr.shape}")
    f_fn = _f_exact if mode == "exact" else _f_min_sum
    fmask = params.frozen_mask()
    decisions = np.zeros(params.n, dtype=np.uint8)
    metric = 0.0

    def descend(seg: np.ndarray, base: int) -> np.ndarray:
        nonlocal metric
        if seg.size == 1:
            l = float(seg[0])
            if fmask[base]:
                u = 0
            else:
                u = 0 if l >= 0.0 else 1
            metric += float(_penalty(l, u, mode))
            decisions[base] = u
            return np.array([u], dtype=np.uint8)
        half = seg.size // 2
        a, b = seg[:half], seg[half:]
        left = descend(f_fn(a, b), base)
        right = descend(_g(a, b, left), base + half)
        return np.concatenate([left ^ right, right])

    descend(llr, 0)
    message = decisions[list(params.info_set)]
    return DecodeOutcome(message=message, path_metric=metric, mode=mode)


def scl_decode(
    llr: np.ndarray,
    params: CodeParams,
    list_size: int,
    mode: str = "min_sum",
) -> DecodeOutcome:
    """Successive-cancellation list decoding without CRC.

    At every information bit each surviving path forks into a bit-0
    continuation (keeping its slot) and a bit-1 continuation (slot offset by
    the list size); the best ``list_size`` candidates survive under a stable
    sort, so metric ties go to the lower slot.  The returned message is the
    finished path with the smallest metric, again preferring the lower slot.
    """
    _check_mode(mode)
    if list_size < 1:
        raise ValueError(f"list_size must be >= 1, got {list_size}")
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (params.n,):
        raise ValueError(f"llr must have shape ({params.n},), got {llr.shape}")

    n, m, L = params.n, params.m, list_size
    f_fn = _f_exact if mode == "exact" else _f_min_sum
    fmask = params.frozen_mask()

    llrs = np.zeros((L, m + 1, n), dtype=np.float64)
    llrs[:, 0, :] = llr
    bits = np.zeros((L, m + 1, n), dtype=np.uint8)
    metrics = np.full(L, np.inf)
    metrics[0] = 0.0
    node_state = np.zeros(2 * n, dtype=np.int8)

    depth = 0
    node = 0
    while True:
        if depth == m:
            pos = node
            l = llrs[:, m, pos]
            if fmask[pos]:
                bits[:, m, pos] = 0
                metrics = metrics + _penalty(l, 0, mode)
            else:
                cand = np.concatenate(
                    [metrics + _penalty(l, 0, mode), metrics + _penalty(l, 1, mode)]
                )
                keep = np.argsort(cand, kind="stable")[:L]
                src = keep % L
                llrs = llrs[src]
                bits = bits[src]
                metrics = cand[keep]
                bits[:, m, pos] = (keep >= L).astype(np.uint8)
            if pos == n - 1:
                break
            node //= 2
            depth -= 1
            continue

        seg = n >> depth
        half = seg >> 1
        lo = node * seg
        key = (1 << depth) + node
        a = llrs[:, depth, lo : lo + half]
        b = llrs[:, depth, lo + half : lo + seg]
        state = node_state[key]
        if state == 0:
            llrs[:, depth + 1, lo : lo + half] = f_fn(a, b)
            node_state[key] = 1
            depth += 1
            node = 2 * node
        elif state == 1:
            left = bits[:, depth + 1, lo : lo + half]
            llrs[:, depth + 1, lo + half : lo + seg] = _g(a, b, left)
            node_state[key] = 2
            depth += 1
            node = 2 * node + 1
        else:
            left = bits[:, depth + 1, lo : lo + half]
            right = bits[:, depth + 1, lo + half : lo + seg]
            bits[:, depth, lo : lo + half] = left ^ right
            bits[:, depth, lo + half : lo + seg] = right
            node //= 2
            depth -= 1

    best = int(np.argmin(metrics))
    message = bits[best, m, list(params.info_set)]
    return DecodeOutcome(message=message, path_metric=float(metrics[best]), mode=mode)


def ml_decode(y: np.ndarray, params: CodeParams) -> DecodeOutcome:
    """Maximum-likelihood decoding by exhaustive correlation.

    Maximizes the inner product between ``y`` and every admissible BPSK
    codeword (bit b maps to (2b - 1) / sqrt(n)); score ties resolve to the
    lexicographically smallest message because enumeration is lexicographic
    and only strict improvements replace the incumbent.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (params.n,):
        raise ValueError(f"y must have shape ({params.n},), got {y.shape}")
    amp = 1.0 / np.sqrt(params.n)
    best_score = -np.inf
    best_msg: np.ndarray | None = None
    for _, msgs, words in iter_codeword_chunks(params):
        scores = ((2.0 * words - 1.0) * amp) @ y
        j = int(np.argmax(scores))
        if scores[j] > best_score:
            best_score = float(scores[j])
            best_msg = msgs[j]
    assert best_msg is not None
    return DecodeOutcome(message=best_msg, path_metric=-best_score, mode="ml")
