import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hadamard_msr import codec
from hadamard_msr.codec import (
    CodeParams,
    DEMO_COEFFICIENTS,
    bits_per_symbol,
    chunk_file,
    coding_matrix,
    coefficient_violations,
    decode,
    demo_params,
    encode,
    encode_blocks,
    find_coefficients,
    inverse_coding_matrix,
    search_params,
    unchunk,
    validate_coefficients,
)


class TestCoefficientConstraints:
    def test_demo_profiles_pass(self):
        for k, (q, a, b) in DEMO_COEFFICIENTS.items():
            assert coefficient_violations(k, q, a, b) == []
            assert validate_coefficients(k, q, a, b)

    def test_zero_coefficient_flagged(self):
        problems = coefficient_violations(2, 7, (0, 1), (3, 4))
        assert any("a_1 is zero" in p for p in problems)

    def test_norm_condition_flagged(self):
        # a_1^2 - b_1^2 = 1 - 1 = 1 != -1 mod 7
        problems = coefficient_violations(2, 7, (1, 1), (1, 4))
        assert any("a_1^2 - b_1^2" in p for p in problems)

    def test_cross_condition_flagged(self):
        # both pairs satisfy a^2 - b^2 = -1 mod 7, but the sums clash:
        # a_1 - a_2 = 0 = b_1 - b_2
        assert (1 - 3 * 3) % 7 == 6
        problems = coefficient_violations(2, 7, (1, 1), (3, 3))
        assert problems
        assert all("a_1" in p and "a_2" in p for p in problems)

    def test_wrong_length_reported(self):
        problems = coefficient_violations(2, 7, (1,), (3, 4))
        assert problems and "need 2 coefficients" in problems[0]
        assert not validate_coefficients(2, 7, (1,), (3, 4))


class TestCodeParams:
    def test_shapes(self, demo_k2, demo_k3):
        assert (demo_k2.n, demo_k2.nodes) == (8, 4)
        assert (demo_k3.n, demo_k3.nodes) == (16, 5)

    def test_field_modulus_too_small(self):
        with pytest.raises(ValueError):
            CodeParams(3, 7, (1, 1, 1), (1, 1, 1))

    def test_composite_modulus_rejected_even_unchecked(self):
        with pytest.raises(ValueError):
            CodeParams(2, 9, (1, 1), (3, 4), check=False)

    def test_unchecked_params_skip_coefficient_validation(self):
        p = CodeParams(2, 7, (0, 1), (3, 4), check=False)
        assert p.a == (0, 1)
        with pytest.raises(ValueError):
            CodeParams(2, 7, (0, 1), (3, 4))

    def test_coefficients_reduced_mod_q(self):
        p = CodeParams(2, 7, (8, 8), (10, 11), check=True)
        assert p.a == (1, 1)
        assert p.b == (3, 4)


class TestSearch:
    def test_smallest_solution_k2(self):
        assert find_coefficients(2, 7) == ((1, 1), (3, 4))

    def test_smallest_solution_k3(self):
        assert find_coefficients(3, 11) == ((2, 2, 5), (4, 7, 2))

    def test_demo_profile_k3_differs_from_search(self, demo_k3):
        assert (demo_k3.a, demo_k3.b) != find_coefficients(3, 11)
        assert validate_coefficients(3, 11, demo_k3.a, demo_k3.b)

    def test_search_params_picks_first_viable_prime(self):
        p = search_params(2)
        assert (p.q, p.a, p.b) == (7, (1, 1), (3, 4))

    @pytest.mark.parametrize("k", [4, 5, 6])
    def test_search_results_validate(self, k, searched_params):
        p = searched_params[k]
        assert p.q >= 2 * k + 3
        assert coefficient_violations(k, p.q, p.a, p.b) == []

    def test_prefer_units_still_valid(self):
        p = search_params(3, prefer_units=True)
        assert coefficient_violations(3, p.q, p.a, p.b) == []

    def test_demo_params_frozen(self):
        assert demo_params(2).q == 7
        assert demo_params(3).q == 11
        with pytest.raises(ValueError):
            demo_params(4)


class TestCodingMatrices:
    def test_entries_never_zero(self, demo_k2, demo_k3, searched_params):
        for p in (demo_k2, demo_k3, *searched_params.values()):
            for i in range(1, p.k + 1):
                assert int(coding_matrix(p, i).min()) > 0

    def test_pairwise_entry_distinct(self, demo_k3):
        for i, j in itertools.combinations(range(1, 4), 2):
            assert np.all(coding_matrix(demo_k3, i) != coding_matrix(demo_k3, j))

    def test_inverse(self, demo_k3):
        for i in range(1, 4):
            prod = coding_matrix(demo_k3, i) * inverse_coding_matrix(demo_k3, i)
            assert np.all(prod % demo_k3.q == 1)

    def test_structure(self, demo_k2):
        # diagonal entries are a_i * x_i + b_i * x_0 + 1 over the sign grid
        a, b, q = demo_k2.a, demo_k2.b, demo_k2.q
        j = np.arange(8)
        x0 = 1 - 2 * (j & 1)
        for i in (1, 2):
            xi = 1 - 2 * ((j >> i) & 1)
            expected = (a[i - 1] * xi + b[i - 1] * x0 + 1) % q
            assert np.array_equal(coding_matrix(demo_k2, i), expected)

    def test_index_bounds(self, demo_k2):
        with pytest.raises(ValueError):
            coding_matrix(demo_k2, 0)
        with pytest.raises(ValueError):
            coding_matrix(demo_k2, 3)


class TestEncode:
    def test_parity_definitions(self, demo_k3, rng):
        p = demo_k3
        parts = rng.integers(0, p.q, size=(p.k, p.n), dtype=np.int64)
        word = encode(p, parts)
        assert np.array_equal(word[: p.k], parts)
        assert np.array_equal(word[p.k], parts.sum(axis=0) % p.q)
        mixed = sum(
            coding_matrix(p, i + 1) * parts[i] for i in range(p.k)
        ) % p.q
        assert np.array_equal(word[p.k + 1], mixed)

    def test_rejects_bad_shape(self, demo_k2):
        with pytest.raises(ValueError):
            encode(demo_k2, np.zeros((2, 4), dtype=np.int64))

    def test_inputs_reduced_mod_q(self, demo_k2):
        parts = np.full((2, 8), 7, dtype=np.int64)
        assert np.array_equal(encode(demo_k2, parts), np.zeros((4, 8), dtype=np.int64))

    def test_blocks_match_single(self, demo_k2, rng):
        blocks = rng.integers(0, 7, size=(5, 2, 8), dtype=np.int64)
        stacked = encode_blocks(demo_k2, blocks)
        for c in range(5):
            assert np.array_equal(stacked[c], encode(demo_k2, blocks[c]))


class TestDecode:
    @pytest.mark.parametrize("k", [2, 3])
    def test_all_erasure_patterns(self, k, rng):
        p = demo_params(k)
        parts = rng.integers(0, p.q, size=(p.k, p.n), dtype=np.int64)
        word = encode(p, parts)
        nodes = range(1, p.k + 3)
        patterns = [()] + [(x,) for x in nodes] + list(itertools.combinations(nodes, 2))
        for gone in patterns:
            available = {m: word[m - 1] for m in nodes if m not in gone}
            assert np.array_equal(decode(p, available), word), gone

    def test_needs_k_nodes(self, demo_k2, rng):
        parts = rng.integers(0, 7, size=(2, 8), dtype=np.int64)
        word = encode(demo_k2, parts)
        with pytest.raises(ValueError):
            decode(demo_k2, {1: word[0]})

    def test_detects_corrupt_survivor(self, demo_k2, rng):
        parts = rng.integers(0, 7, size=(2, 8), dtype=np.int64)
        word = encode(demo_k2, parts)
        available = {m: word[m - 1].copy() for m in (1, 2, 3)}
        available[3][0] = (available[3][0] + 1) % 7
        with pytest.raises(ValueError, match="inconsistent"):
            decode(demo_k2, available)

    def test_unknown_node_id_rejected(self, demo_k2, rng):
        parts = rng.integers(0, 7, size=(2, 8), dtype=np.int64)
        word = encode(demo_k2, parts)
        available = {m: word[m - 1] for m in (1, 2)}
        available[9] = word[0]
        with pytest.raises(ValueError):
            decode(demo_k2, available)


class TestPacking:
    @pytest.mark.parametrize(
        "q,bits", [(7, 2), (11, 3), (17, 4), (127, 6), (251, 7), (257, 8), (12289, 8)]
    )
    def test_bits_per_symbol(self, q, bits):
        assert bits_per_symbol(q) == bits

    @given(st.binary(max_size=400))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_k2(self, data):
        p = demo_params(2)
        blocks = chunk_file(data, p)
        assert blocks.ndim == 3 and blocks.shape[1:] == (2, 8)
        assert unchunk(blocks, len(data), p) == data

    def test_round_trip_byte_mode(self):
        p = CodeParams(3, 257, (1, 1, 4), (60, 197, 70))
        data = bytes(range(256)) * 3
        blocks = chunk_file(data, p)
        assert unchunk(blocks, len(data), p) == data

    def test_empty_file(self, demo_k2):
        blocks = chunk_file(b"", demo_k2)
        assert blocks.shape == (0, 2, 8)
        assert unchunk(blocks, 0, demo_k2) == b""

    def test_chunk_capacity_exact(self, demo_k2):
        # k*N symbols at 2 bits each = 4 bytes per chunk
        blocks = chunk_file(b"abcd", demo_k2)
        assert blocks.shape[0] == 1
        blocks = chunk_file(b"abcde", demo_k2)
        assert blocks.shape[0] == 2

    def test_unchunk_rejects_out_of_range_symbol(self):
        p = CodeParams(3, 257, (1, 1, 4), (60, 197, 70))
        blocks = chunk_file(b"hello world", p)
        blocks[0, 0, 0] = 256  # valid field element, invalid packed byte
        with pytest.raises(ValueError):
            unchunk(blocks, 11, p)

    def test_unchunk_rejects_bad_length(self, demo_k2):
        blocks = chunk_file(b"abcd", demo_k2)
        with pytest.raises(ValueError):
            unchunk(blocks, 5, demo_k2)


class TestDecodeAgainstMatrixOracle:
    def test_two_missing_systematic_solves_exact_system(self, demo_k2, rng):
        # cross-check the paired solver against brute-force linear solves
        p = demo_k2
        parts = rng.integers(0, p.q, size=(p.k, p.n), dtype=np.int64)
        word = encode(p, parts)
        available = {3: word[2], 4: word[3]}
        got = decode(p, available)
        a1 = coding_matrix(p, 1).astype(np.int64)
        a2 = coding_matrix(p, 2).astype(np.int64)
        for j in range(p.n):
            m = np.array([[1, 1], [a1[j], a2[j]]], dtype=np.int64)
            rhs = np.array([word[2, j], word[3, j]], dtype=np.int64)
            sol = p.field.inv_matrix(m) @ rhs % p.q
            assert got[0, j] == sol[0] and got[1, j] == sol[1]
