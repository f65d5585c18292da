"""Polar code construction and encoding over GF(2).

The generator is the m-fold Kronecker power of [[1, 0], [1, 1]] in natural
(non-bit-reversed) index order.  Channel reliabilities are ranked with the
Bhattacharyya-parameter recursion for an erasure design channel, so code
construction is deterministic and needs no Monte Carlo step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ENUMERABLE_K = 24
_CHUNK_BITS = 14


@dataclass(frozen=True)
class CodeParams:
    """Frozen description of one (n, k) polar code instance.

    Attributes
    ----------
    n : int
        Block length, a power of two, n = 2**m with m >= 1.
    k : int
        Number of information bits, 0 <= k <= n.  Codes built by
        ``construct_code`` always have k >= 1; k = 0 is the degenerate
        zero-rate code (only the zero codeword) and is representable so
        downstream sensitivity analysis can reason about it.
    info_set : tuple[int, ...]
        Information-bit indices, sorted ascending.
    frozen_set : tuple[int, ...]
        Complement of ``info_set``, sorted ascending.
    restrict_last_info_bit : bool
        When True the message bit carried on index n - 1 is pinned to zero,
        which removes the all-one word from the code and shrinks the report
        sensitivity below 2.
    """

    n: int
    k: int
    m: int
    info_set: tuple[int, ...]
    frozen_set: tuple[int, ...]
    restrict_last_info_bit: bool = False

    def __post_init__(self) -> None:
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")
        if self.m != self.n.bit_length() - 1:
            raise ValueError(f"m={self.m} inconsistent with n={self.n}")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"k must be in [0, n], got k={self.k}, n={self.n}")
        if len(self.info_set) != self.k:
            raise ValueError("info_set size does not match k")
        if tuple(sorted(self.info_set)) != self.info_set:
            raise ValueError("info_set must be sorted ascending")
        if len(set(self.info_set) | set(self.frozen_set)) != self.n:
            raise ValueError("info_set and frozen_set must partition range(n)")
        if self.k >= 1 and self.info_set[-1] != self.n - 1:
            raise ValueError("index n-1 must carry an information bit")
        if self.restrict_last_info_bit and self.k < 1:
            raise ValueError("cannot restrict the last info bit of a k=0 code")

    @property
    def message_length(self) -> int:
        return self.k

    def frozen_mask(self) -> np.ndarray:
        """Boolean length-n mask, True where the decoder must emit zero.

        The restricted information bit (index n - 1 under
        ``restrict_last_info_bit``) is treated exactly like a frozen bit.
        """
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.info_set)] = False
        if self.restrict_last_info_bit:
            mask[self.n - 1] = True
        return mask


def bhattacharyya_parameters(n: int, design_erasure_prob: float = 0.5) -> np.ndarray:
    """Bhattacharyya parameters of the n synthesized bit channels.

    Starting from the design channel's value z0, each polarization level maps
    a value z to the pair (2z - z**2, z**2); the first entry is the degraded
    (lower) branch and lands on the even child index, the second on the odd
    child index.  Index ordering therefore matches the natural-order encoder.
    """
    if n < 2 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 2, got {n}")
    if not 0.0 < design_erasure_prob < 1.0:
        raise ValueError(
            f"design_erasure_prob must lie in (0, 1), got {design_erasure_prob}"
        )
    z = np.array([design_erasure_prob], dtype=np.float64)
    while z.size < n:
        worse = 2.0 * z - z * z
        better = z * z
        z = np.stack([worse, better], axis=1).reshape(-1)
    return z


def construct_code(
    n: int,
    k: int,
    design_erasure_prob: float = 0.5,
    restrict_last_info_bit: bool = False,
) -> CodeParams:
    """Build an (n, k) polar code for an erasure design channel.

    The k information positions are the k most reliable synthesized channels
    (smallest Bhattacharyya parameter); ties prefer the larger index.
    """
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= n, got k={k}, n={n}")
    z = bhattacharyya_parameters(n, design_erasure_prob)
    # Sort by (z, -index) so equal-z ties go to the larger index.
    order = sorted(range(n), key=lambda i: (z[i], -i))
    info = tuple(sorted(order[:k]))
    frozen = tuple(sorted(set(range(n)) - set(info)))
    return CodeParams(
        n=n,
        k=k,
        m=n.bit_length() - 1,
        info_set=info,
        frozen_set=frozen,
        restrict_last_info_bit=restrict_last_info_bit,
    )


def _validate_message(u: np.ndarray, params: CodeParams) -> np.ndarray:
    u = np.asarray(u)
    if u.shape != (params.k,):
        raise ValueError(f"message must have shape ({params.k},), got {u.shape}")
    u = u.astype(np.uint8)
    if np.any(u > 1):
        raise ValueError("message bits must be 0 or 1")
    if params.restrict_last_info_bit and params.k >= 1 and u[-1] != 0:
        raise ValueError("restricted code requires the last message bit to be zero")
    return u


def _butterfly(v: np.ndarray) -> np.ndarray:
    """In-place Kronecker-power transform along the last axis."""
    n = v.shape[-1]
    half = 1
    while half < n:
        step = 2 * half
        for start in range(0, n, step):
            v[..., start : start + half] ^= v[..., start + half : start + step]
        half = step
    return v


def encode(u: np.ndarray, params: CodeParams) -> np.ndarray:
    """Encode k message bits into an n-bit codeword.

    Message bits fill the information positions in ascending index order,
    frozen positions are zero, and the butterfly network applies the
    generator in O(n log n) bit operations.
    """
    u = _validate_message(u, params)
    v = np.zeros(params.n, dtype=np.uint8)
    if params.k:
        v[list(params.info_set)] = u
    return _butterfly(v)


def message_space_size(params: CodeParams) -> int:
    """Number of admissible messages, accounting for the restriction."""
    bits = params.k - 1 if params.restrict_last_info_bit else params.k
    return 1 << max(bits, 0) if params.k >= 1 else 1


def message_from_index(index: int, params: CodeParams) -> np.ndarray:
    """The message whose bits, read MSB first, spell ``index`` in binary.

    Enumerating ``index`` in increasing order walks the admissible message
    space in lexicographic bit order.  For restricted codes the pinned last
    bit stays zero and ``index`` covers the remaining k - 1 bits.
    """
    size = message_space_size(params)
    if not 0 <= index < size:
        raise ValueError(f"message index {index} outside [0, {size})")
    if params.restrict_last_info_bit:
        index <<= 1
    shifts = np.arange(params.k - 1, -1, -1)
    return ((index >> shifts) & 1).astype(np.uint8)


def _messages_from_indices(indices: np.ndarray, params: CodeParams) -> np.ndarray:
    if params.restrict_last_info_bit:
        indices = indices << 1
    shifts = np.arange(params.k - 1, -1, -1)
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def iter_codeword_chunks(params: CodeParams, chunk_size: int = 1 << _CHUNK_BITS):
    """Yield (message_indices, messages, codewords) over the whole code.

    Enumeration order is lexicographic in the message bits.  Chunking keeps
    the working set bounded for k up to MAX_ENUMERABLE_K.
    """
    if params.k > MAX_ENUMERABLE_K:
        raise ValueError(
            f"codeword enumeration needs k <= {MAX_ENUMERABLE_K}, got k={params.k}"
        )
    size = message_space_size(params)
    info = list(params.info_set)
    for start in range(0, size, chunk_size):
        idx = np.arange(start, min(start + chunk_size, size), dtype=np.int64)
        msgs = _messages_from_indices(idx, params)
        block = np.zeros((idx.size, params.n), dtype=np.uint8)
        if params.k:
            block[:, info] = msgs
        yield idx, msgs, _butterfly(block)


def max_codeword_weight(params: CodeParams, exclude_all_ones: bool = False) -> int:
    """Maximum Hamming weight over the code's codewords by full enumeration.

    With ``exclude_all_ones`` the all-one word is skipped when present; it is
    the image of the message that sets only the bit carried on index n - 1,
    so restricted codes never contain it in the first place.
    """
    best = 0
    n = params.n
    for _, _, words in iter_codeword_chunks(params):
        weights = words.sum(axis=1, dtype=np.int64)
        if exclude_all_ones:
            weights = weights[weights < n]
            if weights.size == 0:
                continue
        best = max(best, int(weights.max()))
    return best
