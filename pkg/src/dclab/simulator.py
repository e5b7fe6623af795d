"""Collision-finding algorithms, the coset-space measurement and the DCP demo.

The two collision algorithms run in label mode. After the Fourier step the
input ``|b, chi_l>`` lies inside the ``(l, p = b.l)`` block. Measuring in
the standard basis after ``U_S`` is the same as sampling a block column ``m``
with probability ``|M[j0, m]|^2``. Measuring the ``U_C`` indicator is the
same as projecting onto column 0 or onto columns ``1..``. Dense execution
paths are kept for cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import Block, LabeledBasis
from .core import (
    DenseState,
    DihedralParams,
    ResourceLimitError,
    StateIndex,
    frame_transform,
    int_to_bits,
    to_hybrid,
    to_standard,
)
from .subset_sum import MAX_ENUMERATION_K, verify_collision
from .unitaries import BasisChangeUnitary, IndicatorUnitary, indicator_layout, materialize_dense

IN_C = "InC"
IN_C_PERP = "InCperp"


@dataclass(frozen=True)
class Outcome:
    b_prime: tuple[int, ...]
    transcript: dict
    success: bool


def _locate(l: Sequence[int], b: Sequence[int], basis: LabeledBasis) -> tuple[Block, int]:
    params = basis.params
    if len(l) != params.k or len(b) != params.k:
        raise ValueError("l and b must have length k")
    if params.k > MAX_ENUMERATION_K:
        raise ResourceLimitError(f"k={params.k} exceeds the enumeration budget")
    p = sum(int(x) * int(y) for x, y in zip(l, b)) % params.N
    blk = basis.block(l, p)
    return blk, blk.solutions.position(b)


def _branches(blk: Block, j0: int, u) -> list[tuple[float, np.ndarray, dict]]:
    """Intermediate measurement branches as (probability, normalised post-state over T, record)."""
    M = blk.matrix
    if isinstance(u, BasisChangeUnitary):
        out = []
        for m in range(blk.size):
            prob = float(abs(M[j0, m]) ** 2)
            out.append((prob, M[:, m], {"label": [list(blk.l), blk.p, m], "target": u.target((blk.l, blk.p, m))}))
        return out
    if isinstance(u, IndicatorUnitary):
        out = []
        for ind, vec in ((0, M[:, :1] @ M[j0, :1].conj()), (1, M[:, 1:] @ M[j0, 1:].conj())):
            prob = float(np.vdot(vec, vec).real)
            if prob > 0.0:
                vec = vec / math.sqrt(prob)
            out.append((prob, vec, {"indicator": ind}))
        return out
    raise TypeError(f"unsupported unitary type {type(u).__name__}")


def exact_outcome_distribution(l: Sequence[int], b: Sequence[int], u) -> dict[tuple[int, ...], float]:
    """Exact distribution of the returned ``b'``, summed over every branch."""
    blk, j0 = _locate(l, b, u.basis)
    probs = np.zeros(blk.size)
    for prob, amps, _ in _branches(blk, j0, u):
        if prob > 0.0:
            probs += prob * np.abs(amps) ** 2
    return {bits: float(pr) for bits, pr in zip(blk.solutions.solutions, probs)}


def success_probability(table: dict[tuple[int, ...], float], b: Sequence[int]) -> float:
    b = tuple(int(v) for v in b)
    return float(sum(pr for bits, pr in table.items() if bits != b))


def _run(l, b, u, rng: np.random.Generator) -> Outcome:
    blk, j0 = _locate(l, b, u.basis)
    branches = _branches(blk, j0, u)
    weights = np.array([pr for pr, _, _ in branches])
    pick = int(rng.choice(len(branches), p=weights / weights.sum()))
    _, amps, record = branches[pick]
    post = np.abs(amps) ** 2
    j = int(rng.choice(blk.size, p=post / post.sum()))
    b_prime = blk.solutions.solutions[j]
    N = u.params.N
    return Outcome(b_prime, record, verify_collision(l, b, b_prime, N))


def algorithm1(l: Sequence[int], b: Sequence[int], u: BasisChangeUnitary, rng: np.random.Generator) -> Outcome:
    """Fourier step, ``U_S``, standard measurement, ``U_S^dag``, measure the bits."""
    if not isinstance(u, BasisChangeUnitary):
        raise TypeError("algorithm1 needs a BasisChangeUnitary")
    return _run(l, b, u, rng)


def algorithm2(l: Sequence[int], b: Sequence[int], u: IndicatorUnitary, rng: np.random.Generator) -> Outcome:
    """Fourier step, ``U_C``, measure the indicator, ``U_C^dag``, measure the bits."""
    if not isinstance(u, IndicatorUnitary):
        raise TypeError("algorithm2 needs an IndicatorUnitary")
    return _run(l, b, u, rng)


def _input_state(l, b, params: DihedralParams) -> DenseState:
    """``QFT |b, l>`` in the standard frame."""
    start = DenseState.basis_state(StateIndex(tuple(b), tuple(l)), params)
    return frame_transform(start, "forward")


def _bit_marginal(vec: np.ndarray, params: DihedralParams) -> np.ndarray:
    return np.sum(np.abs(vec.reshape(params.block_dim, params.int_dim)) ** 2, axis=1)


def _table(probs: np.ndarray, k: int, cutoff: float = 0.0) -> dict[tuple[int, ...], float]:
    return {int_to_bits(i, k): float(pr) for i, pr in enumerate(probs) if pr > cutoff}


def algorithm1_dense_distribution(l, b, u: BasisChangeUnitary, matrix: np.ndarray | None = None):
    """Exact ``b'`` distribution of Algorithm 1 by dense matrix-vector products."""
    params = u.params
    M = materialize_dense(u) if matrix is None else matrix
    after = M @ _input_state(l, b, params).amps
    probs = np.zeros(params.block_dim)
    for t in np.flatnonzero(np.abs(after) ** 2 > 1e-15):
        probs += abs(after[t]) ** 2 * _bit_marginal(M.conj().T[:, t], params)
    return _table(probs, params.k, 1e-15)


def algorithm2_dense_distribution(l, b, u: IndicatorUnitary, matrix: np.ndarray | None = None):
    """Exact ``b'`` distribution of Algorithm 2 with a materialised ``U_C``."""
    params = u.params
    layout = indicator_layout(u)
    M = materialize_dense(u) if matrix is None else matrix
    after = M @ layout.embed(_input_state(l, b, params).amps)
    probs = np.zeros(params.block_dim)
    for ind in (0, 1):
        branch = np.zeros_like(after)
        sl = layout.indicator_slice(ind)
        branch[sl] = after[sl]
        back = M.conj().T @ branch
        system = layout.system_probabilities(back)
        probs += system.reshape(params.block_dim, params.int_dim).sum(axis=1)
    return _table(probs, params.k, 1e-15)


@dataclass(frozen=True)
class DcspParams:
    """``k = ceil(log2 2N) + kprime`` registers for the coset-space test."""

    params: DihedralParams
    kprime: int

    def __post_init__(self):
        if self.kprime < 1:
            raise ValueError("kprime must be >= 1")
        expected = math.ceil(math.log2(2 * self.params.N)) + self.kprime
        if self.params.k != expected:
            raise ValueError(f"k must equal ceil(log2 2N) + k' = {expected}, got {self.params.k}")

    @classmethod
    def for_modulus(cls, N: int, kprime: int) -> "DcspParams":
        return cls(DihedralParams(N, math.ceil(math.log2(2 * N)) + kprime), kprime)

    @property
    def power_of_two(self) -> bool:
        N = self.params.N
        return N & (N - 1) == 0

    @property
    def bound(self) -> float:
        """Upper bound on P(InC) for a random standard basis input."""
        return 2.0 ** -(self.kprime + 1)


@dataclass(frozen=True, eq=False)
class DcspResult:
    verdict: str
    prob_in_c: float
    collapsed: DenseState


def prob_in_coset_space(state: DenseState, b0: LabeledBasis) -> float:
    hyb = to_hybrid(state).amps
    proj = b0.project_coset(hyb)
    return float(np.vdot(proj, proj).real)


def dcsp_measure(state: DenseState, b0: LabeledBasis, rng: np.random.Generator) -> DcspResult:
    """Projective measurement ``{Pi_C, Pi_Cperp}`` with ``C = span(B0)``."""
    if b0.which == "Bperp":
        raise ValueError("dcsp_measure needs a basis containing B0")
    if abs(state.norm - 1.0) > 1e-10:
        raise ValueError(f"state must be unit norm, got {state.norm}")
    hyb = to_hybrid(state)
    proj = b0.project_coset(hyb.amps)
    p_in = min(1.0, max(0.0, float(np.vdot(proj, proj).real)))
    if rng.random() < p_in:
        verdict, kept, weight = IN_C, proj, p_in
    else:
        verdict, kept, weight = IN_C_PERP, hyb.amps - proj, 1.0 - p_in
    collapsed = to_standard(DenseState(kept / math.sqrt(weight), state.params, hyb.frame))
    return DcspResult(verdict, p_in, collapsed)


class CosetOracle:
    """Supplier of fresh single-register coset states ``(|0,x> + |1,x+d>)/sqrt 2``.

    Each draw returns a ``(2, N)`` array indexed by (bit, integer).
    """

    def __init__(self, d: int, N: int, rng: np.random.Generator, budget: int | None = None):
        if not 0 <= d < N:
            raise ValueError(f"d must lie in [0, {N})")
        self.d = d
        self.N = N
        self.rng = rng
        self.budget = budget
        self.consumed = 0

    def draw(self) -> np.ndarray:
        if self.budget is not None and self.consumed >= self.budget:
            raise ResourceLimitError(f"coset oracle exhausted after {self.consumed} states")
        self.consumed += 1
        x = int(self.rng.integers(self.N))
        reg = np.zeros((2, self.N), dtype=complex)
        reg[0, x] = reg[1, (x + self.d) % self.N] = 1 / math.sqrt(2)
        return reg


def registers_to_state(regs: Sequence[np.ndarray], params: DihedralParams) -> DenseState:
    """Tensor single-register ``(2, N)`` states into the bits-major layout."""
    k = params.k
    full = regs[0]
    for reg in regs[1:]:
        full = np.multiply.outer(full, reg)
    # axes arrive as (b1, x1, b2, x2, ...)
    order = [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]
    return DenseState(np.transpose(full, order).reshape(-1), params)


def _measure_int_bit(reg: np.ndarray, bit: int, rng: np.random.Generator) -> np.ndarray:
    N = reg.shape[1]
    mask = ((np.arange(N) >> bit) & 1).astype(bool)
    p1 = float(np.sum(np.abs(reg[:, mask]) ** 2))
    keep = mask if rng.random() < p1 else ~mask
    out = np.where(keep[None, :], reg, 0)
    return out / np.linalg.norm(out)


@dataclass
class DcpResult:
    d_hat: int
    votes: list[dict] = field(default_factory=list)
    states_used: int = 0


def dcp_solve(
    oracle: CosetOracle,
    dcsp: DcspParams,
    repeats: int = 5,
    rng: np.random.Generator | None = None,
    b0: LabeledBasis | None = None,
) -> DcpResult:
    """Recover ``d`` one bit at a time, least significant first.

    For bit ``i`` every register first has the known low bits ``d_low``
    subtracted from its integer part, conditioned on the bit register being
    1. Then bit ``i`` of the integer register is measured and the product
    state goes through :func:`dcsp_measure`. That bit is 0 iff the
    registers are still coset states. Each bit takes a strict majority over
    ``repeats`` calls; a tie adds another batch.
    """
    from .basis import enumerate_basis

    params = dcsp.params
    if not dcsp.power_of_two:
        raise ValueError("the DCP reduction needs N a power of 2")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    b0 = b0 if b0 is not None else enumerate_basis(params, "B0")
    n_bits = params.N.bit_length() - 1
    d_low = 0
    result = DcpResult(0)
    for i in range(n_bits):
        in_c = calls = 0
        while True:
            for _ in range(repeats):
                regs = []
                for _ in range(params.k):
                    reg = oracle.draw()
                    reg[1] = np.roll(reg[1], -d_low)
                    regs.append(_measure_int_bit(reg, i, rng))
                verdict = dcsp_measure(registers_to_state(regs, params), b0, rng).verdict
                in_c += verdict == IN_C
                calls += 1
            if 2 * in_c != calls:
                break
        bit = 0 if 2 * in_c > calls else 1
        result.votes.append({"bit": i, "in_c": in_c, "calls": calls, "value": bit})
        d_low |= bit << i
    result.d_hat = d_low
    result.states_used = oracle.consumed
    return result
