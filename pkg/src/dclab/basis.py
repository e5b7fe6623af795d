"""Coset states and the subset-sum basis.

Every basis vector ``|S^m_{l,p}> (x) |chi_l>`` is sparse in the hybrid frame:
it lives in the single integer block ``l`` and is supported on the solutions
of ``b . l = p``. A :class:`LabeledBasis` stores one ``|T| x |T|`` unitary
per ``(l, p)`` block whose column ``m`` holds the amplitudes of vector ``m``
on the ordered solutions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .core import (
    HYBRID,
    DenseState,
    DihedralParams,
    ResourceLimitError,
    EmptySolutionError,
    all_bit_vectors,
    all_int_vectors,
    apply_register_dft,
    derive_rng,
    int_vector_index,
    to_hybrid,
    to_standard,
)
from .subset_sum import SolutionSet, SubsetSumInstance, enumerate_solutions, subset_sums

CANONICAL = "canonical"
TILDE = "tilde"
HAT = "hat"

UNITARY_TOL = 1e-10
RANK_TOL = 1e-8

Label = tuple[tuple[int, ...], int, int]


@dataclass(frozen=True)
class CosetStateSpec:
    d: int
    xs: tuple[int, ...]


def build_coset_state(spec: CosetStateSpec, params: DihedralParams) -> DenseState:
    """``2^{-k/2} sum_b |b, x + b d>`` in the standard frame."""
    N, k = params.N, params.k
    if not 0 <= spec.d < N or len(spec.xs) != k or any(not 0 <= x < N for x in spec.xs):
        raise ValueError(f"coset spec out of range for N={N}, k={k}: {spec}")
    bits = all_bit_vectors(k)
    ints = (np.asarray(spec.xs)[None, :] + bits * spec.d) % N
    flat = np.arange(2**k) * params.int_dim
    for i in range(k):
        flat = flat + ints[:, i] * N ** (k - 1 - i)
    amps = np.zeros(params.full_dim, dtype=complex)
    amps[flat] = 2.0 ** (-k / 2)
    return DenseState(amps, params)


def coset_family(params: DihedralParams) -> tuple[list[CosetStateSpec], np.ndarray]:
    """All ``N^{k+1}`` coset states as rows of a standard-frame matrix."""
    N, k = params.N, params.k
    n = N ** (k + 1)
    if n * params.full_dim > params.max_amplitudes:
        raise ResourceLimitError(
            f"coset family needs {n * params.full_dim} amplitudes, budget {params.max_amplitudes}"
        )
    specs = []
    rows = np.zeros((n, params.full_dim), dtype=complex)
    for r, (d, *xs) in enumerate(itertools.product(range(N), repeat=k + 1)):
        spec = CosetStateSpec(d, tuple(xs))
        specs.append(spec)
        rows[r] = build_coset_state(spec, params).amps
    return specs, rows


def fourier_block(size: int) -> np.ndarray:
    """``M[j, m] = omega_size^{m j} / sqrt(size)``."""
    jm = np.outer(np.arange(size), np.arange(size)) % size
    return np.exp(2j * np.pi * jm / size) / np.sqrt(size)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def complete_unitary(first: np.ndarray) -> np.ndarray:
    """Unitary whose first column is the unit vector ``first``."""
    first = np.asarray(first, dtype=complex)
    n = first.shape[0]
    q, _ = np.linalg.qr(np.column_stack([first, np.eye(n, dtype=complex)]))
    phase = np.vdot(q[:, 0], first)
    q[:, 0] *= phase / abs(phase)
    return q


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> float:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    err = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) if u.size else 0.0
    if err > tol:
        raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {err:.3e})")
    return err


@dataclass(frozen=True, eq=False)
class Block:
    l: tuple[int, ...]
    p: int
    solutions: SolutionSet
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return len(self.solutions)


@dataclass(frozen=True, eq=False)
class BasisVector:
    label: Label
    support: tuple[tuple[int, ...], ...]
    amps: np.ndarray
    params: DihedralParams

    @property
    def l(self) -> tuple[int, ...]:
        return self.label[0]

    @property
    def p(self) -> int:
        return self.label[1]

    @property
    def m(self) -> int:
        return self.label[2]

    def hybrid(self) -> DenseState:
        amps = np.zeros((self.params.block_dim, self.params.int_dim), dtype=complex)
        col = int_vector_index(self.l, self.params.N)
        for b, a in zip(self.support, self.amps):
            amps[_bits_index(b), col] = a
        return DenseState(amps.reshape(-1), self.params, HYBRID)

    def dense(self) -> DenseState:
        return to_standard(self.hybrid())


def _bits_index(b: Sequence[int]) -> int:
    value = 0
    for bit in b:
        value = value * 2 + int(bit)
    return value


class LabeledBasis:
    """A subset-sum style orthonormal basis, stored block by block.

    ``which`` restricts :attr:`entries` to ``"B0"`` (``m == 0``), ``"Bperp"``
    (``m >= 1``) or ``"all"``; the blocks themselves are always complete.
    """

    def __init__(
        self,
        params: DihedralParams,
        blocks: dict[tuple[tuple[int, ...], int], Block],
        family: str = CANONICAL,
        which: str = "all",
        note: str = "",
    ):
        if which not in ("all", "B0", "Bperp"):
            raise ValueError(f"which must be 'all', 'B0' or 'Bperp', got {which!r}")
        self.params = params
        self.family = family
        self.which = which
        self.note = note
        self._blocks = blocks
        self._entries: list[BasisVector] | None = None
        self._grouping: tuple[np.ndarray, np.ndarray] | None = None

    def __repr__(self) -> str:
        return (
            f"LabeledBasis(N={self.params.N}, k={self.params.k}, family={self.family!r}, "
            f"which={self.which!r}, entries={len(self)})"
        )

    @property
    def complete(self) -> bool:
        return self.which == "all"

    def block(self, l: Sequence[int], p: int) -> Block | None:
        return self._blocks.get((tuple(int(v) for v in l), int(p)))

    def blocks(self) -> Iterator[Block]:
        return iter(self._blocks.values())

    def _keep(self, m: int) -> bool:
        return self.which == "all" or (m == 0) == (self.which == "B0")

    def labels(self) -> list[Label]:
        return [
            (blk.l, blk.p, m) for blk in self._blocks.values() for m in range(blk.size) if self._keep(m)
        ]

    def __len__(self) -> int:
        return sum(1 for blk in self._blocks.values() for m in range(blk.size) if self._keep(m))

    @property
    def entries(self) -> list[BasisVector]:
        if self._entries is None:
            out = []
            for blk in self._blocks.values():
                support = tuple(blk.solutions.solutions)
                for m in range(blk.size):
                    if self._keep(m):
                        out.append(BasisVector((blk.l, blk.p, m), support, blk.matrix[:, m], self.params))
            self._entries = out
        return self._entries

    @property
    def B0(self) -> list[BasisVector]:
        return [e for e in self.entries if e.m == 0]

    @property
    def Bperp(self) -> list[BasisVector]:
        return [e for e in self.entries if e.m >= 1]

    def restrict(self, which: str) -> "LabeledBasis":
        return LabeledBasis(self.params, self._blocks, self.family, which, self.note)

    def vector(self, label: Label) -> BasisVector:
        l, p, m = label
        blk = self.block(l, p)
        if blk is None or not 0 <= m < blk.size:
            raise KeyError(f"no basis vector with label {label}")
        return BasisVector((blk.l, blk.p, m), tuple(blk.solutions.solutions), blk.matrix[:, m], self.params)

    def decompose(self, state: DenseState) -> dict[Label, complex]:
        """Coefficients ``<v|state>`` for every label in this basis."""
        hyb = to_hybrid(state).as_tensor()
        out = {}
        for blk in self._blocks.values():
            col = int_vector_index(blk.l, self.params.N)
            coeffs = blk.matrix.conj().T @ hyb[blk.solutions.indices, col]
            for m in range(blk.size):
                if self._keep(m):
                    out[(blk.l, blk.p, m)] = complex(coeffs[m])
        return out

    def synthesize(self, coeffs: dict[Label, complex]) -> DenseState:
        """Hybrid-frame state ``sum_label c_label |v_label>``."""
        amps = np.zeros((self.params.block_dim, self.params.int_dim), dtype=complex)
        for (l, p, m), c in coeffs.items():
            blk = self.block(l, p)
            if blk is None or not 0 <= m < blk.size:
                raise KeyError(f"no basis vector with label {(l, p, m)}")
            col = int_vector_index(blk.l, self.params.N)
            amps[blk.solutions.indices, col] += c * blk.matrix[:, m]
        return DenseState(amps.reshape(-1), self.params, HYBRID)

    def hybrid_matrix(self) -> np.ndarray:
        """Hybrid-frame coordinates of :attr:`entries` as columns."""
        n = len(self)
        if n * self.params.full_dim > self.params.max_amplitudes:
            raise ResourceLimitError("dense basis matrix exceeds the amplitude budget")
        out = np.zeros((self.params.block_dim, self.params.int_dim, n), dtype=complex)
        c = 0
        for blk in self._blocks.values():
            col = int_vector_index(blk.l, self.params.N)
            for m in range(blk.size):
                if self._keep(m):
                    out[blk.solutions.indices, col, c] = blk.matrix[:, m]
                    c += 1
        return out.reshape(self.params.full_dim, n)

    def dense_matrix(self) -> np.ndarray:
        """Standard-frame coordinates of :attr:`entries` as columns."""
        return apply_register_dft(self.hybrid_matrix().T, self.params, 1).T

    def _coset_grouping(self) -> tuple[np.ndarray, np.ndarray]:
        if self._grouping is None:
            N, k = self.params.N, self.params.k
            p_table = (all_bit_vectors(k) @ all_int_vectors(N, k).T) % N
            key = p_table * self.params.int_dim + np.arange(self.params.int_dim)[None, :]
            counts = np.bincount(key.ravel(), minlength=N * self.params.int_dim)
            self._grouping = (key, counts)
        return self._grouping

    def project_coset(self, hybrid_amps: np.ndarray) -> np.ndarray:
        """Project hybrid-frame amplitudes onto ``span(B0)``.

        Accepts a flat vector or a batch ``(..., full_dim)``. ``B0`` is the same
        for every family, so the projection averages each vector over the
        solution set of every ``(l, p)``.
        """
        key, counts = self._coset_grouping()
        amps = np.asarray(hybrid_amps, dtype=complex)
        batch = amps.shape[:-1]
        flat = amps.reshape(-1, self.params.full_dim)
        size = counts.shape[0]
        out = np.empty_like(flat)
        safe = np.where(counts > 0, counts, 1)
        kflat = key.ravel()
        for r in range(flat.shape[0]):
            sums = np.bincount(kflat, weights=flat[r].real, minlength=size) + 1j * np.bincount(
                kflat, weights=flat[r].imag, minlength=size
            )
            out[r] = (sums / safe)[kflat]
        return out.reshape(batch + (self.params.full_dim,))

    def to_json(self) -> dict:
        """JSON-ready document: labels and sparse hybrid-frame support."""
        return {
            "schema": "dclab.basis/1",
            "N": self.params.N,
            "k": self.params.k,
            "family": self.family,
            "which": self.which,
            "note": self.note,
            "frame": "hybrid: bits standard, integer registers Fourier |chi_l>",
            "entries": [
                {
                    "l": list(e.l),
                    "p": e.p,
                    "m": e.m,
                    "support": [
                        {"b": list(b), "re": float(a.real), "im": float(a.imag)}
                        for b, a in zip(e.support, e.amps)
                    ],
                }
                for e in self.entries
            ],
        }


BlockFactory = Callable[[tuple[int, ...], int, SolutionSet], np.ndarray]


def _build(params: DihedralParams, factory: BlockFactory, family: str, which: str, note: str = ""):
    N, k = params.N, params.k
    blocks = {}
    for l in itertools.product(range(N), repeat=k):
        sums = subset_sums(l, N)
        for p in range(N):
            idx = np.flatnonzero(sums == p)
            if idx.size == 0:
                continue
            sols = SolutionSet(SubsetSumInstance(l, p, params), idx.astype(np.int64))
            blocks[(l, p)] = Block(l, p, sols, factory(l, p, sols))
    return LabeledBasis(params, blocks, family, which, note)


def build_basis_vector(l: Sequence[int], p: int, m: int, params: DihedralParams) -> BasisVector:
    sols = enumerate_solutions(SubsetSumInstance(tuple(l), p, params))
    if len(sols) == 0:
        raise EmptySolutionError(f"T_(l={tuple(l)}, p={p}) is empty")
    if not 0 <= m < len(sols):
        raise ValueError(f"m={m} out of range [0, {len(sols)})")
    col = fourier_block(len(sols))[:, m]
    return BasisVector((sols.instance.l, sols.instance.p, m), tuple(sols.solutions), col, params)


def enumerate_basis(params: DihedralParams, which: str = "all") -> LabeledBasis:
    """The canonical subset-sum basis (or its ``B0`` / ``Bperp`` part)."""
    return _build(params, lambda l, p, sols: fourier_block(len(sols)), CANONICAL, which)


def _hat_block(anchor: tuple[int, ...] | None):
    def factory(l, p, sols):
        size = len(sols)
        mat = fourier_block(size)
        if size < 2:
            return mat
        j0 = 0
        if anchor is not None:
            try:
                j0 = sols.position(anchor)
            except ValueError:
                j0 = 0
        # unit vector along the projection of |b^(j0)> onto span{m >= 1}
        c = mat[j0, 1:].conj()
        c = c / np.linalg.norm(c)
        rot = complete_unitary(c)
        out = mat.copy()
        out[:, 1:] = mat[:, 1:] @ rot
        return out

    return factory


def build_tilde_basis(
    params: DihedralParams,
    rotation_spec="identity",
    *,
    seed: int | None = None,
    anchor: Sequence[int] | None = None,
) -> LabeledBasis:
    """Re-rotate the ``m >= 1`` span of every ``(l, p)`` block.

    ``rotation_spec`` is one of

    * ``"identity"`` - reproduces the canonical vectors;
    * ``"random"`` - an independent Haar unitary per block, drawn from
      ``derive_rng(seed, l_index, p)``;
    * ``"hat"`` - the first ``m >= 1`` vector is the normalised projection of
      ``|b^(j0)>`` onto the ``m >= 1`` span, where ``j0`` is the position of
      ``anchor`` (default: the first solution); the rest of the span is
      completed by Householder QR of ``[first | I]``;
    * a callable ``f(l, p, dim) -> (dim, dim)`` unitary.
    """
    if isinstance(rotation_spec, str):
        if rotation_spec == "identity":
            return _build(params, lambda l, p, sols: fourier_block(len(sols)), TILDE, "all", "identity")
        if rotation_spec == "hat":
            anchor_t = None if anchor is None else tuple(int(v) for v in anchor)
            note = "hat: first vector aligned with b^(0)" if anchor_t is None else f"hat: anchored at {anchor_t}"
            return _build(params, _hat_block(anchor_t), HAT, "all", note + "; completion by QR of [first | I]")
        if rotation_spec == "random":
            if seed is None:
                raise ValueError("random rotations need a seed")

            def rotation(l, p, dim):
                return haar_unitary(dim, derive_rng(seed, int_vector_index(l, params.N), p))

            return _build(params, _rotated(rotation), TILDE, "all", f"haar seed={seed}")
        raise ValueError(f"unknown rotation spec {rotation_spec!r}")
    if not callable(rotation_spec):
        raise ValueError("rotation_spec must be a string or a callable")
    return _build(params, _rotated(rotation_spec), TILDE, "all", "user rotation")


def _rotated(rotation) -> BlockFactory:
    def factory(l, p, sols):
        size = len(sols)
        mat = fourier_block(size)
        if size < 2:
            return mat
        rot = np.asarray(rotation(l, p, size - 1), dtype=complex)
        if rot.shape != (size - 1, size - 1):
            raise ValueError(f"rotation for block {(l, p)} must be {(size - 1, size - 1)}, got {rot.shape}")
        check_unitary(rot)
        out = mat.copy()
        out[:, 1:] = mat[:, 1:] @ rot
        return out

    return factory


def _coset_hybrid(params: DihedralParams) -> tuple[list[CosetStateSpec], np.ndarray]:
    specs, rows = coset_family(params)
    return specs, apply_register_dft(rows, params, -1)


def verify_coset_orthogonality(params: DihedralParams, basis: LabeledBasis | None = None) -> dict:
    """Largest ``|<c|v>|`` over all coset states ``c`` and all ``m >= 1`` vectors ``v``."""
    basis = basis if basis is not None else enumerate_basis(params)
    specs, hyb = _coset_hybrid(params)
    hyb = hyb.reshape(len(specs), params.block_dim, params.int_dim)
    worst = 0.0
    n_perp = 0
    for blk in basis.blocks():
        if blk.size < 2:
            continue
        col = int_vector_index(blk.l, params.N)
        ips = hyb[:, blk.solutions.indices, col].conj() @ blk.matrix[:, 1:]
        worst = max(worst, float(np.max(np.abs(ips))))
        n_perp += blk.size - 1
    return {
        "N": params.N,
        "k": params.k,
        "n_coset_states": len(specs),
        "n_bperp": n_perp,
        "max_abs_inner_product": worst,
    }


def coset_span_check(params: DihedralParams, basis: LabeledBasis | None = None) -> dict:
    """Numerical rank of the coset family against ``|B0|``, plus projection residuals."""
    basis = basis if basis is not None else enumerate_basis(params)
    specs, rows = coset_family(params)
    sv = np.linalg.svd(rows, compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL))
    hyb = apply_register_dft(rows, params, -1)
    residual = float(np.max(np.linalg.norm(hyb - basis.project_coset(hyb), axis=1)))
    n_b0 = 0
    perp_leak = 0.0
    for blk in basis.blocks():
        n_b0 += 1
        if blk.size >= 2:
            leak = np.abs(blk.matrix[:, 1:].sum(axis=0)) / np.sqrt(blk.size)
            perp_leak = max(perp_leak, float(np.max(leak)))
    return {
        "N": params.N,
        "k": params.k,
        "rank": rank,
        "n_b0": n_b0,
        "max_coset_residual": residual,
        "max_bperp_projection": perp_leak,
    }
