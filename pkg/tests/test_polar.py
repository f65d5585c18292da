"""Encoder and code-construction checks against explicit matrix oracles."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from codedhist.polar import (
    CodeParams,
    bhattacharyya_parameters,
    construct_code,
    encode,
    iter_codeword_chunks,
    max_codeword_weight,
    message_from_index,
    message_space_size,
)


def generator_matrix(n: int) -> np.ndarray:
    """GF(2) generator built the slow way, by explicit Kronecker powers."""
    g = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    out = np.array([[1]], dtype=np.uint8)
    while out.shape[0] < n:
        out = np.kron(out, g)
    return out


def encode_by_matrix(u: np.ndarray, params: CodeParams) -> np.ndarray:
    full = np.zeros(params.n, dtype=np.uint8)
    full[list(params.info_set)] = u
    return (full @ generator_matrix(params.n)) % 2


def exact_bhattacharyya(n: int, z0: Fraction) -> list[Fraction]:
    """Erasure-channel recursion in exact rational arithmetic."""
    zs = [z0]
    while len(zs) < n:
        nxt = []
        for z in zs:
            nxt.append(2 * z - z * z)
            nxt.append(z * z)
        zs = nxt
    return zs


def info_set_oracle(n: int, k: int) -> tuple[int, ...]:
    zs = exact_bhattacharyya(n, Fraction(1, 2))
    # k smallest parameters; on equal values prefer the larger index.
    order = sorted(range(n), key=lambda i: (zs[i], -i))
    return tuple(sorted(order[:k]))


@pytest.mark.parametrize("n,k", [(8, 4), (16, 8)])
def test_encode_matches_generator_matrix(n, k):
    params = construct_code(n, k)
    for idx in range(1 << k):
        u = message_from_index(idx, params)
        assert np.array_equal(encode(u, params), encode_by_matrix(u, params))


def test_bhattacharyya_hand_values():
    z = bhattacharyya_parameters(4, 0.5)
    assert np.allclose(z, [0.9375, 0.5625, 0.4375, 0.0625], rtol=0, atol=0)


def test_bhattacharyya_matches_exact_recursion():
    for n in (2, 8, 64):
        exact = [float(z) for z in exact_bhattacharyya(n, Fraction(1, 2))]
        assert np.allclose(bhattacharyya_parameters(n, 0.5), exact, rtol=1e-12)


@pytest.mark.parametrize(
    "n,k,expected",
    [
        (2, 1, (1,)),
        (4, 2, (2, 3)),
        (64, 8, None),
    ],
)
def test_info_set_selection(n, k, expected):
    params = construct_code(n, k)
    if expected is None:
        expected = info_set_oracle(n, k)
    assert params.info_set == expected
    assert params.info_set == info_set_oracle(n, k)


def test_default_64_8_info_set_value():
    params = construct_code(64, 8)
    assert params.info_set == (31, 47, 55, 59, 60, 61, 62, 63)


@pytest.mark.parametrize("n,k", [(2, 1), (8, 3), (64, 8), (256, 8)])
def test_last_index_always_information(n, k):
    assert n - 1 in construct_code(n, k).info_set


def test_encode_hand_examples():
    p22 = construct_code(2, 2)
    assert np.array_equal(encode(np.array([1, 1]), p22), [0, 1])
    p42 = construct_code(4, 2)
    assert np.array_equal(encode(np.array([1, 0]), p42), [1, 0, 1, 0])


@pytest.mark.parametrize("n,k", [(4, 2), (64, 8)])
def test_unit_last_bit_encodes_to_all_ones(n, k):
    params = construct_code(n, k)
    u = np.zeros(k, dtype=np.uint8)
    u[-1] = 1
    assert np.array_equal(encode(u, params), np.ones(n, dtype=np.uint8))


def test_encode_linearity():
    params = construct_code(16, 8)
    rng = np.random.default_rng(7)
    for _ in range(50):
        u = rng.integers(0, 2, size=8)
        v = rng.integers(0, 2, size=8)
        lhs = encode((u ^ v), params)
        rhs = encode(u, params) ^ encode(v, params)
        assert np.array_equal(lhs, rhs)


def test_message_enumeration_is_lexicographic():
    params = construct_code(8, 3)
    assert message_space_size(params) == 8
    seen = [tuple(message_from_index(i, params)) for i in range(8)]
    assert seen == sorted(seen)
    assert seen[0] == (0, 0, 0)
    assert seen[-1] == (1, 1, 1)


def test_restricted_message_space():
    params = construct_code(8, 3, restrict_last_info_bit=True)
    assert message_space_size(params) == 4
    for i in range(4):
        assert message_from_index(i, params)[-1] == 0


def test_iter_codeword_chunks_covers_code():
    params = construct_code(8, 4)
    g = generator_matrix(8)
    total = 0
    for indices, messages, codewords in iter_codeword_chunks(params, chunk_size=5):
        total += len(indices)
        for u, c in zip(messages, codewords):
            full = np.zeros(8, dtype=np.uint8)
            full[list(params.info_set)] = u
            assert np.array_equal(c, (full @ g) % 2)
    assert total == 16


def test_max_weight_default_code():
    params = construct_code(64, 8)
    # The all-one word is in the code, so the max weight is the block length.
    assert max_codeword_weight(params) == 64


def test_max_weight_excluding_all_ones_matches_enumeration():
    params = construct_code(64, 8)
    best = 0
    for _, _, codewords in iter_codeword_chunks(params):
        weights = codewords.sum(axis=1)
        full = weights == 64
        if full.any():
            weights = weights[~full]
        if weights.size:
            best = max(best, int(weights.max()))
    assert max_codeword_weight(params, exclude_all_ones=True) == best
    assert best < 64


def test_restricted_code_drops_all_ones_word():
    restricted = construct_code(64, 8, restrict_last_info_bit=True)
    unrestricted = construct_code(64, 8)
    assert max_codeword_weight(restricted) == max_codeword_weight(
        unrestricted, exclude_all_ones=True
    )


def test_construct_code_validation():
    with pytest.raises(ValueError):
        construct_code(3, 1)
    with pytest.raises(ValueError):
        construct_code(8, 0)
    with pytest.raises(ValueError):
        construct_code(8, 9)
    with pytest.raises(ValueError):
        construct_code(8, 4, design_erasure_prob=0.0)


def test_encode_rejects_bad_messages():
    params = construct_code(8, 4)
    with pytest.raises(ValueError):
        encode(np.array([1, 0, 1]), params)
    with pytest.raises(ValueError):
        encode(np.array([0, 2, 0, 1]), params)


def test_code_params_consistency_checks():
    with pytest.raises(ValueError):
        CodeParams(n=8, k=2, m=3, info_set=(1, 2), frozen_set=(0, 3, 4, 5, 6, 7))
    with pytest.raises(ValueError):
        CodeParams(n=8, k=2, m=2, info_set=(6, 7), frozen_set=(0, 1, 2, 3, 4, 5))
