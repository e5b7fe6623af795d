"""Basis-change unitaries over a :class:`~dclab.basis.LabeledBasis`.

Both unitaries are held as label maps. ``U_S`` sends each basis label to a
distinct standard-basis index. ``U_C`` sends it to an indicator bit (0 iff
``m == 0``) plus an abstract workspace label. Dense matrices are only built
for cross-checks at tiny sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import LabeledBasis, Label, build_tilde_basis
from .core import DenseState, ResourceLimitError, int_vector_index

DENSE_MAX_COLUMNS = 4096

CANONICAL = "canonical"
RANDOM_PERMUTATION = "random-permutation"
ADVERSARIAL = "adversarial"


def canonical_ranks(basis: LabeledBasis) -> dict[Label, int]:
    """Rank of every label when sorted by ``(m, p, l)``.

    This is the order-preserving bijection from the ``(m, p, l)`` encoding onto
    ``[0, (2N)^k)``.
    """
    N = basis.params.N
    labels = basis.labels()
    order = sorted(labels, key=lambda lab: (lab[2], lab[1], int_vector_index(lab[0], N)))
    return {lab: r for r, lab in enumerate(order)}


@dataclass(frozen=True)
class StandardAssignment:
    targets: dict[Label, int]
    strategy: str

    def __post_init__(self):
        values = list(self.targets.values())
        if len(set(values)) != len(values):
            raise ValueError("standard assignment is not injective")


@dataclass(eq=False)
class BasisChangeUnitary:
    """``U_S``: basis vector ``label`` -> standard basis state ``targets[label]``."""

    basis: LabeledBasis
    assignment: StandardAssignment
    _inverse: dict[int, Label] = field(init=False, repr=False)

    def __post_init__(self):
        self._inverse = {t: lab for lab, t in self.assignment.targets.items()}

    @property
    def strategy(self) -> str:
        return self.assignment.strategy

    @property
    def params(self):
        return self.basis.params

    def target(self, label: Label) -> int:
        return self.assignment.targets[label]

    def label_of(self, target: int) -> Label:
        return self._inverse[target]

    def apply(self, coeffs: dict[Label, complex]) -> dict[int, complex]:
        return {self.assignment.targets[lab]: c for lab, c in coeffs.items()}

    def adjoint(self, coeffs: dict[int, complex]) -> dict[Label, complex]:
        return {self._inverse[t]: c for t, c in coeffs.items()}

    def apply_state(self, state: DenseState) -> np.ndarray:
        """Standard-basis amplitudes of ``U_S |state>``."""
        out = np.zeros(self.params.full_dim, dtype=complex)
        for t, c in self.apply(self.basis.decompose(state)).items():
            out[t] = c
        return out

    def target_array(self) -> np.ndarray:
        return np.array([self.assignment.targets[e.label] for e in self.basis.entries], dtype=np.int64)

    def basis_matrix(self) -> np.ndarray:
        return self.basis.dense_matrix()


@dataclass(eq=False)
class IndicatorUnitary:
    """``U_C``: ``|v_label>|0> -> |m == 0 ? 0 : 1>|psi_label>``.

    The workspace states ``psi`` are modelled as orthonormal labels, one per
    basis label (its canonical rank).
    """

    basis: LabeledBasis
    workspace: dict[Label, int] = field(init=False, repr=False)
    _inverse: dict[tuple[int, int], Label] = field(init=False, repr=False)

    def __post_init__(self):
        self.workspace = canonical_ranks(self.basis)
        self._inverse = {(self.indicator(lab), w): lab for lab, w in self.workspace.items()}

    @property
    def params(self):
        return self.basis.params

    @staticmethod
    def indicator(label: Label) -> int:
        return 0 if label[2] == 0 else 1

    @property
    def workspace_bits(self) -> int:
        return max(1, math.ceil(math.log2(self.params.full_dim)))

    def image(self, label: Label) -> tuple[int, int]:
        return self.indicator(label), self.workspace[label]

    def apply(self, coeffs: dict[Label, complex]) -> dict[tuple[int, int], complex]:
        return {self.image(lab): c for lab, c in coeffs.items()}

    def adjoint(self, coeffs: dict[tuple[int, int], complex]) -> dict[Label, complex]:
        return {self._inverse[key]: c for key, c in coeffs.items()}

    def basis_matrix(self) -> np.ndarray:
        return self.basis.dense_matrix()


def build_US(basis: LabeledBasis, strategy: str = CANONICAL, rng: np.random.Generator | None = None,
             anchor=None) -> BasisChangeUnitary:
    """Map every basis vector to its own standard basis state.

    ``canonical`` uses :func:`canonical_ranks`; ``random-permutation`` shuffles
    those targets with ``rng``; ``adversarial`` swaps in the hat basis built
    from the same parameters (anchored at ``anchor`` if given) and assigns
    canonically.
    """
    if not basis.complete:
        raise ValueError("U_S needs the complete basis (which='all')")
    if strategy == ADVERSARIAL:
        basis = build_tilde_basis(basis.params, "hat", anchor=anchor)
        return BasisChangeUnitary(basis, StandardAssignment(canonical_ranks(basis), ADVERSARIAL))
    ranks = canonical_ranks(basis)
    if strategy == CANONICAL:
        return BasisChangeUnitary(basis, StandardAssignment(ranks, CANONICAL))
    if strategy == RANDOM_PERMUTATION:
        if rng is None:
            raise ValueError("random-permutation strategy needs an rng")
        labels = list(ranks)
        perm = rng.permutation(len(labels))
        targets = {lab: int(perm[ranks[lab]]) for lab in labels}
        return BasisChangeUnitary(basis, StandardAssignment(targets, RANDOM_PERMUTATION))
    raise ValueError(f"unknown U_S strategy {strategy!r}")


def build_UC(basis: LabeledBasis) -> IndicatorUnitary:
    if not basis.complete:
        raise ValueError("U_C needs the complete basis (which='all')")
    return IndicatorUnitary(basis)


@dataclass(frozen=True, eq=False)
class DenseIndicatorLayout:
    """Index bookkeeping for a materialised ``U_C``.

    Inputs are ``system (x) ancilla`` with ancilla dimension ``2W`` (index
    ``i * 2W + a``); outputs are ``indicator (x) rest`` with rest dimension
    ``full_dim * W`` (index ``ind * full_dim * W + r``).
    """

    full_dim: int
    W: int

    @property
    def dim(self) -> int:
        return 2 * self.full_dim * self.W

    def embed(self, system: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim, dtype=complex)
        out[:: 2 * self.W] = system
        return out

    def indicator_slice(self, ind: int) -> slice:
        half = self.full_dim * self.W
        return slice(ind * half, (ind + 1) * half)

    def system_probabilities(self, vec: np.ndarray) -> np.ndarray:
        return np.sum(np.abs(vec.reshape(self.full_dim, 2 * self.W)) ** 2, axis=1)


def indicator_layout(u: IndicatorUnitary) -> DenseIndicatorLayout:
    return DenseIndicatorLayout(u.params.full_dim, 2**u.workspace_bits)


def materialize_dense(u, max_columns: int = DENSE_MAX_COLUMNS) -> np.ndarray:
    """Dense matrix of ``U_S`` (``full_dim`` square) or ``U_C`` (``2 * full_dim * W``).

    ``u`` needs ``basis_matrix()`` (standard-frame basis columns) and either
    ``target_array()`` (``U_S``) or the ``IndicatorUnitary`` interface.
    """
    if isinstance(u, IndicatorUnitary):
        layout = indicator_layout(u)
        D = layout.dim
        if D > max_columns:
            raise ResourceLimitError(f"U_C needs {D} columns, dense budget is {max_columns}")
        V = u.basis_matrix()
        half = layout.full_dim * layout.W
        M = np.zeros((D, D), dtype=complex)
        used_out = np.zeros(D, dtype=bool)
        for col, entry in enumerate(u.basis.entries):
            ind, w = u.image(entry.label)
            row = ind * half + w
            M[row, :: 2 * layout.W] = V[:, col].conj()
            used_out[row] = True
        # the rest of the input space (nonzero ancilla) fills the unused outputs in order
        free_in = np.setdiff1d(np.arange(D), np.arange(0, D, 2 * layout.W))
        free_out = np.flatnonzero(~used_out)
        M[free_out, free_in] = 1.0
        return M
    V = np.asarray(u.basis_matrix(), dtype=complex)
    D = V.shape[0]
    if D > max_columns:
        raise ResourceLimitError(f"U_S needs {D} columns, dense budget is {max_columns}")
    targets = np.asarray(u.target_array())
    if V.shape != (D, D) or sorted(targets.tolist()) != list(range(D)):
        raise ValueError("U_S must assign every one of the full_dim basis vectors a distinct target")
    M = np.zeros((D, D), dtype=complex)
    M[targets, :] = V.conj().T
    return M


def unitarity_error(M: np.ndarray) -> float:
    return float(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0]))))
