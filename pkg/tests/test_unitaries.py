import numpy as np
import pytest

from dclab.basis import enumerate_basis
from dclab.core import DenseState, DihedralParams, ResourceLimitError, derive_rng, int_vector_index
from dclab.unitaries import (
    ADVERSARIAL,
    CANONICAL,
    RANDOM_PERMUTATION,
    IndicatorUnitary,
    StandardAssignment,
    build_UC,
    build_US,
    canonical_ranks,
    indicator_layout,
    materialize_dense,
    unitarity_error,
)


@pytest.fixture(scope="module")
def basis22():
    return enumerate_basis(DihedralParams(2, 2))


class TestCanonicalUS:
    def test_targets_follow_mpl_order(self):
        basis = enumerate_basis(DihedralParams(3, 2))
        u = build_US(basis)
        N = 3
        # the raw mixed-radix code of (m, p, l) must be strictly increasing in the target
        code = {lab: (lab[2] * N + lab[1]) * N**2 + int_vector_index(lab[0], N) for lab in basis.labels()}
        by_target = sorted(basis.labels(), key=u.target)
        codes = [code[lab] for lab in by_target]
        assert codes == sorted(codes)
        assert sorted(u.target_array().tolist()) == list(range(36))

    def test_b0_fills_the_lowest_targets(self):
        basis = enumerate_basis(DihedralParams(3, 2))
        u = build_US(basis)
        assert {u.target(e.label) for e in basis.B0} == set(range(len(basis.B0)))

    def test_label_round_trip(self, basis22):
        u = build_US(basis22)
        coeffs = {lab: complex(i, -i) for i, lab in enumerate(basis22.labels()[:6])}
        assert u.adjoint(u.apply(coeffs)) == coeffs
        for lab in basis22.labels():
            assert u.label_of(u.target(lab)) == lab

    def test_needs_complete_basis(self):
        with pytest.raises(ValueError):
            build_US(enumerate_basis(DihedralParams(2, 1), "B0"))
        with pytest.raises(ValueError):
            build_UC(enumerate_basis(DihedralParams(2, 1), "Bperp"))

    def test_unknown_strategy(self, basis22):
        with pytest.raises(ValueError):
            build_US(basis22, "sideways")


class TestOtherStrategies:
    def test_random_permutation_reproducible_and_injective(self, basis22):
        a = build_US(basis22, RANDOM_PERMUTATION, derive_rng(1))
        b = build_US(basis22, RANDOM_PERMUTATION, derive_rng(1))
        c = build_US(basis22, RANDOM_PERMUTATION, derive_rng(2))
        assert a.assignment.targets == b.assignment.targets
        assert a.assignment.targets != c.assignment.targets
        assert sorted(a.target_array().tolist()) == list(range(16))
        assert a.strategy == RANDOM_PERMUTATION

    def test_random_permutation_needs_rng(self, basis22):
        with pytest.raises(ValueError):
            build_US(basis22, RANDOM_PERMUTATION)

    def test_adversarial_uses_hat_basis(self, basis22):
        u = build_US(basis22, ADVERSARIAL)
        assert u.basis.family == "hat" and u.strategy == ADVERSARIAL
        assert sorted(u.target_array().tolist()) == list(range(16))

    def test_assignment_must_be_injective(self):
        with pytest.raises(ValueError):
            StandardAssignment({((0,), 0, 0): 0, ((1,), 0, 0): 0}, CANONICAL)


class TestIndicator:
    def test_indicator_bits(self):
        basis = enumerate_basis(DihedralParams(3, 2))
        u = build_UC(basis)
        assert all(u.image(e.label)[0] == 0 for e in basis.B0)
        assert all(u.image(e.label)[0] == 1 for e in basis.Bperp)
        assert len({u.image(lab) for lab in basis.labels()}) == 36
        assert u.workspace_bits == 6

    def test_round_trip_random_superpositions(self, basis22):
        u = build_UC(basis22)
        rng = derive_rng(8)
        labels = basis22.labels()
        for _ in range(10):
            pick = rng.choice(len(labels), size=int(rng.integers(1, 9)), replace=False)
            coeffs = {labels[i]: complex(rng.normal(), rng.normal()) for i in pick}
            assert u.adjoint(u.apply(coeffs)) == coeffs


class TestDense:
    def test_smallest_us(self):
        basis = enumerate_basis(DihedralParams(2, 1))
        u = build_US(basis)
        M = materialize_dense(u)
        assert M.shape == (4, 4) and unitarity_error(M) <= 1e-12
        V = basis.dense_matrix()
        # U_S^dag sends the standard state of each target back to its basis vector
        for c, e in enumerate(basis.entries):
            np.testing.assert_allclose(M.conj().T[:, u.target(e.label)], V[:, c], atol=1e-12)

    def test_identity_assignment_gives_identity(self):
        class StandardFrame:
            def basis_matrix(self):
                return np.eye(8)

            def target_array(self):
                return np.arange(8)

        np.testing.assert_array_equal(materialize_dense(StandardFrame()), np.eye(8))

    @pytest.mark.parametrize("strategy", [CANONICAL, RANDOM_PERMUTATION, ADVERSARIAL])
    def test_us_unitary(self, basis22, strategy):
        M = materialize_dense(build_US(basis22, strategy, derive_rng(0)))
        assert M.shape == (16, 16)
        assert unitarity_error(M) <= 1e-10

    @pytest.mark.parametrize("N,k", [(2, 1), (2, 2)])
    def test_uc_unitary(self, N, k):
        u = build_UC(enumerate_basis(DihedralParams(N, k)))
        layout = indicator_layout(u)
        M = materialize_dense(u)
        assert M.shape == (layout.dim, layout.dim)
        assert unitarity_error(M) <= 1e-10

    def test_budget(self):
        u = build_UC(enumerate_basis(DihedralParams(3, 2)))
        with pytest.raises(ResourceLimitError):
            materialize_dense(u)
        with pytest.raises(ResourceLimitError):
            materialize_dense(build_US(enumerate_basis(DihedralParams(2, 2))), max_columns=8)

    @pytest.mark.parametrize("N,k", [(2, 1), (2, 2)])
    def test_label_and_dense_modes_agree(self, N, k):
        params = DihedralParams(N, k)
        basis = enumerate_basis(params)
        us, uc = build_US(basis), build_UC(basis)
        Ms, Mc = materialize_dense(us), materialize_dense(uc)
        layout = indicator_layout(uc)
        half = layout.full_dim * layout.W
        rng = derive_rng(12, N, k)
        for _ in range(20):
            v = rng.normal(size=params.full_dim) + 1j * rng.normal(size=params.full_dim)
            state = DenseState(v / np.linalg.norm(v), params)
            assert np.max(np.abs(us.apply_state(state) - Ms @ state.amps)) <= 1e-10
            dense_out = Mc @ layout.embed(state.amps)
            label_out = np.zeros(layout.dim, dtype=complex)
            for (ind, w), c in uc.apply(basis.decompose(state)).items():
                label_out[ind * half + w] = c
            assert np.max(np.abs(dense_out - label_out)) <= 1e-10

    def test_uc_images_split_by_indicator(self):
        params = DihedralParams(2, 2)
        basis = enumerate_basis(params)
        u = build_UC(basis)
        M = materialize_dense(u)
        layout = indicator_layout(u)
        V = basis.dense_matrix()
        for c, e in enumerate(basis.entries):
            out = M @ layout.embed(V[:, c])
            ind = u.indicator(e.label)
            assert abs(np.linalg.norm(out[layout.indicator_slice(ind)]) - 1) <= 1e-12
            assert np.linalg.norm(out[layout.indicator_slice(1 - ind)]) <= 1e-12


def test_canonical_ranks_are_a_bijection():
    basis = enumerate_basis(DihedralParams(4, 2))
    ranks = canonical_ranks(basis)
    assert sorted(ranks.values()) == list(range(64))
    assert isinstance(build_UC(basis), IndicatorUnitary)
