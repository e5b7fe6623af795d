import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dclab.core import (
    BUDGET_ENV_VAR,
    HYBRID,
    STANDARD,
    DenseState,
    DihedralParams,
    ResourceLimitError,
    StateIndex,
    all_bit_vectors,
    all_int_vectors,
    derive_rng,
    dft_matrix,
    frame_transform,
    index_decode,
    index_encode,
    inner_product,
    omega,
    to_hybrid,
    to_standard,
)

GRID = [(2, 1), (2, 2), (3, 2), (4, 2), (5, 1), (4, 3)]


def random_state(params, rng):
    v = rng.normal(size=params.full_dim) + 1j * rng.normal(size=params.full_dim)
    return DenseState(v / np.linalg.norm(v), params)


class TestParams:
    def test_dimensions(self):
        p = DihedralParams(3, 2)
        assert (p.full_dim, p.block_dim, p.int_dim) == (36, 4, 9)
        assert p.shape == (2, 2, 3, 3)

    @pytest.mark.parametrize("N,k", [(1, 1), (0, 2), (2, 0), (3, -1)])
    def test_rejects_bad_values(self, N, k):
        with pytest.raises(ValueError):
            DihedralParams(N, k)

    def test_budget_argument(self):
        with pytest.raises(ResourceLimitError):
            DihedralParams(4, 4, max_amplitudes=4095)
        assert DihedralParams(4, 4, max_amplitudes=4096).full_dim == 4096

    def test_budget_env_var(self, monkeypatch):
        monkeypatch.setenv(BUDGET_ENV_VAR, "100")
        with pytest.raises(ResourceLimitError):
            DihedralParams(4, 4)
        DihedralParams(3, 2)
        monkeypatch.setenv(BUDGET_ENV_VAR, "lots")
        with pytest.raises(ValueError):
            DihedralParams(2, 1)


class TestOmega:
    @pytest.mark.parametrize("n,e,expected", [(2, 1, -1), (4, 1, 1j), (7, 0, 1), (1, 5, 1), (4, -1, -1j)])
    def test_examples(self, n, e, expected):
        assert abs(omega(n, e) - expected) < 1e-14

    def test_rejects_zero_order(self):
        with pytest.raises(ValueError):
            omega(0, 1)

    @given(st.integers(1, 64), st.integers(-10**6, 10**6))
    def test_unit_modulus_and_period(self, n, e):
        assert abs(abs(omega(n, e)) - 1) < 1e-14
        assert abs(omega(n, e + n) - omega(n, e)) < 1e-14

    @given(st.integers(1, 64), st.integers(-1000, 1000))
    def test_matches_cmath(self, n, e):
        assert abs(omega(n, e) - cmath.exp(2j * math.pi * e / n)) < 1e-9


class TestIndex:
    def test_zero(self):
        p = DihedralParams(3, 2)
        assert index_encode(StateIndex((0, 0), (0, 0)), p) == 0

    def test_bits_major(self):
        assert index_encode(StateIndex((1,), (0,)), DihedralParams(2, 1)) == 2

    def test_mixed_radix_value(self):
        p = DihedralParams(3, 2)
        idx = StateIndex((0, 1), (2, 0))
        # bits (0,1) -> 1, then ints (2,0) -> 1*9 + 2*3 + 0
        assert index_encode(idx, p) == 15
        assert index_decode(15, p) == idx

    @pytest.mark.parametrize("bad", [StateIndex((2,), (0,)), StateIndex((0,), (2,)), StateIndex((0, 0), (0,))])
    def test_out_of_range(self, bad):
        with pytest.raises(ValueError):
            index_encode(bad, DihedralParams(2, 1))

    def test_decode_range(self):
        with pytest.raises(ValueError):
            index_decode(4, DihedralParams(2, 1))

    @pytest.mark.parametrize("N,k", GRID)
    def test_bijection_on_random_indices(self, N, k):
        params = DihedralParams(N, k)
        rng = derive_rng(1, N, k)
        for v in rng.integers(0, params.full_dim, size=1000):
            assert index_encode(index_decode(int(v), params), params) == v

    def test_exhaustive_bijection(self):
        params = DihedralParams(3, 2)
        seen = {index_encode(index_decode(v, params), params) for v in range(params.full_dim)}
        assert seen == set(range(params.full_dim))

    def test_enumerators_follow_layout(self):
        bits = all_bit_vectors(3)
        assert bits[5].tolist() == [1, 0, 1]
        ints = all_int_vectors(3, 2)
        assert ints[7].tolist() == [2, 1]


class TestFrames:
    def test_uniform_fourier_state(self):
        params = DihedralParams(2, 1)
        out = frame_transform(DenseState.basis_state(StateIndex((0,), (0,)), params))
        np.testing.assert_allclose(out.amps, [1 / math.sqrt(2), 1 / math.sqrt(2), 0, 0], atol=1e-15)

    def test_kernel_sign(self):
        params = DihedralParams(3, 1)
        out = frame_transform(DenseState.basis_state(StateIndex((0,), (1,)), params))
        # direct kernel oracle: amplitude at x=2 is exp(2 pi i * 2 / 3) / sqrt 3
        assert abs(out.amps[2] - cmath.exp(2j * math.pi * 2 / 3) / math.sqrt(3)) < 1e-14

    @pytest.mark.parametrize("N,k", GRID)
    def test_unitary_round_trip(self, N, k):
        params = DihedralParams(N, k)
        rng = derive_rng(2, N, k)
        for _ in range(20):
            s = random_state(params, rng)
            f = frame_transform(s, "forward")
            assert abs(f.norm - s.norm) <= 1e-12
            back = frame_transform(f, "inverse")
            assert np.max(np.abs(back.amps - s.amps)) <= 1e-12

    def test_matches_kron_of_dft(self):
        params = DihedralParams(3, 2)
        F = dft_matrix(3)
        full = np.kron(np.eye(4), np.kron(F, F))
        s = random_state(params, derive_rng(3))
        np.testing.assert_allclose(frame_transform(s).amps, full @ s.amps, atol=1e-12)

    def test_frame_tags(self):
        params = DihedralParams(2, 2)
        s = random_state(params, derive_rng(4))
        h = to_hybrid(s)
        assert h.frame == HYBRID and to_standard(h).frame == STANDARD
        np.testing.assert_allclose(to_standard(h).amps, s.amps, atol=1e-12)
        assert to_hybrid(h) is h

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            frame_transform(DenseState.basis_state(StateIndex((0,), (0,)), DihedralParams(2, 1)), "sideways")


class TestInnerProduct:
    def test_conjugates_left(self):
        assert inner_product([1j, 0], [1, 0]) == -1j

    def test_orthogonal_basis_states(self):
        params = DihedralParams(2, 2)
        a = DenseState.basis_state(StateIndex((0, 1), (1, 0)), params)
        b = DenseState.basis_state(StateIndex((1, 1), (1, 0)), params)
        assert inner_product(a, b) == 0
        assert inner_product(a, a) == 1

    @pytest.mark.parametrize("N", [2, 3, 5])
    def test_fourier_zero_overlap(self, N):
        params = DihedralParams(N, 1)
        e0 = DenseState.basis_state(StateIndex((0,), (0,)), params)
        chi0 = frame_transform(e0)
        assert abs(inner_product(chi0, e0) - 1 / math.sqrt(N)) < 1e-14

    def test_frame_mismatch(self):
        params = DihedralParams(2, 1)
        a = DenseState.basis_state(StateIndex((0,), (0,)), params)
        with pytest.raises(ValueError):
            inner_product(a, to_hybrid(a))
        with pytest.raises(ValueError):
            inner_product(a, np.ones(4))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            DenseState(np.array([np.nan, 0, 0, 0]), DihedralParams(2, 1))


class TestSeeding:
    def test_streams_are_reproducible(self):
        assert derive_rng(7, 1, 2).integers(1 << 30) == derive_rng(7, 1, 2).integers(1 << 30)

    @settings(max_examples=25)
    @given(st.integers(0, 2**63 - 1), st.integers(0, 1000))
    def test_streams_differ(self, seed, stream):
        a = derive_rng(seed, stream).random(4)
        b = derive_rng(seed, stream + 1).random(4)
        assert not np.array_equal(a, b)
