"""Shared arithmetic and state plumbing.

Amplitude layout is bits-major: ``|b_1 .. b_k, x_1 .. x_k>`` with register 1
outermost, so a flat vector reshapes to ``(2,)*k + (N,)*k`` in C order.

Two frames are used. The *standard* frame holds amplitudes on
``|b, x>``. The *hybrid* frame holds coefficients on ``|b> (x) |chi_l>``, where
``|chi_l> = N^{-1/2} sum_x omega_N^{l x} |x>``. Converting standard to hybrid
is the inverse Fourier transform on the integer registers.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_MAX_AMPLITUDES = 2**24
BUDGET_ENV_VAR = "DCL_MAX_AMPLITUDES"

STANDARD = "standard"
HYBRID = "hybrid"


class ResourceLimitError(RuntimeError):
    """A requested computation exceeds a configured size budget."""


class EmptySolutionError(ValueError):
    """A subset-sum instance has no solutions where one is required."""


def amplitude_budget() -> int:
    raw = os.environ.get(BUDGET_ENV_VAR)
    if raw is None:
        return DEFAULT_MAX_AMPLITUDES
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{BUDGET_ENV_VAR} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{BUDGET_ENV_VAR} must be positive")
    return value


@dataclass(frozen=True)
class DihedralParams:
    """Modulus ``N`` and register count ``k`` for the dihedral group D_2N.

    ``max_amplitudes`` defaults to the ``DCL_MAX_AMPLITUDES`` environment
    variable (or 2**24) and bounds ``full_dim``.
    """

    N: int
    k: int
    max_amplitudes: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "k", int(self.k))
        budget = self.max_amplitudes if self.max_amplitudes is not None else amplitude_budget()
        object.__setattr__(self, "max_amplitudes", int(budget))
        if self.full_dim != (2 * self.N) ** self.k or self.block_dim != 2**self.k:
            raise AssertionError("dimension bookkeeping is inconsistent")
        if self.full_dim > self.max_amplitudes:
            raise ResourceLimitError(
                f"(2N)^k = {self.full_dim} exceeds the amplitude budget {self.max_amplitudes}"
            )

    @property
    def full_dim(self) -> int:
        return (2 * self.N) ** self.k

    @property
    def block_dim(self) -> int:
        return 2**self.k

    @property
    def int_dim(self) -> int:
        """Number of integer-register configurations, ``N**k``."""
        return self.N**self.k

    @property
    def shape(self) -> tuple[int, ...]:
        return (2,) * self.k + (self.N,) * self.k


def omega(n: int, e: int) -> complex:
    """Return ``exp(2*pi*i*e/n)``."""
    if n <= 0:
        raise ValueError(f"root-of-unity order must be positive, got {n}")
    # reducing first keeps omega(n, e + n) == omega(n, e) bit-for-bit
    return cmath.exp(2j * math.pi * ((e % n) / n))


@dataclass(frozen=True)
class StateIndex:
    bits: tuple[int, ...]
    ints: tuple[int, ...]


def index_encode(idx: StateIndex, params: DihedralParams) -> int:
    if len(idx.bits) != params.k or len(idx.ints) != params.k:
        raise ValueError("StateIndex length does not match k")
    value = 0
    for b in idx.bits:
        if b not in (0, 1):
            raise ValueError(f"bit component out of range: {b}")
        value = value * 2 + int(b)
    for x in idx.ints:
        if not 0 <= x < params.N:
            raise ValueError(f"integer component out of range: {x}")
        value = value * params.N + int(x)
    return value


def index_decode(value: int, params: DihedralParams) -> StateIndex:
    if not 0 <= value < params.full_dim:
        raise ValueError(f"index {value} out of range [0, {params.full_dim})")
    ints = []
    for _ in range(params.k):
        value, x = divmod(value, params.N)
        ints.append(x)
    bits = []
    for _ in range(params.k):
        value, b = divmod(value, 2)
        bits.append(b)
    return StateIndex(tuple(reversed(bits)), tuple(reversed(ints)))


def bits_to_int(bits: Sequence[int]) -> int:
    """Binary integer of a bit-vector, first component most significant."""
    value = 0
    for b in bits:
        value = value * 2 + int(b)
    return value


def int_to_bits(value: int, k: int) -> tuple[int, ...]:
    return tuple((value >> (k - 1 - i)) & 1 for i in range(k))


def all_bit_vectors(k: int) -> np.ndarray:
    """All of {0,1}^k as a ``(2**k, k)`` array in canonical (binary) order."""
    idx = np.arange(2**k, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.int64)


def all_int_vectors(N: int, k: int) -> np.ndarray:
    """All of Z_N^k as an ``(N**k, k)`` array, first component most significant."""
    idx = np.arange(N**k, dtype=np.int64)
    out = np.empty((N**k, k), dtype=np.int64)
    for i in range(k - 1, -1, -1):
        idx, out[:, i] = np.divmod(idx, N)
    return out


def int_vector_index(values: Sequence[int], N: int) -> int:
    value = 0
    for x in values:
        value = value * N + int(x)
    return value


def dft_matrix(N: int, sign: int = 1) -> np.ndarray:
    """``F[i, j] = omega_N^{sign*i*j} / sqrt(N)``."""
    ij = np.outer(np.arange(N), np.arange(N)) % N
    return np.exp(sign * 2j * np.pi * ij / N) / np.sqrt(N)


def apply_register_dft(amps: np.ndarray, params: DihedralParams, sign: int = 1) -> np.ndarray:
    """Apply the per-register DFT to the trailing ``full_dim`` axis of ``amps``.

    Leading axes are treated as a batch.
    """
    amps = np.asarray(amps, dtype=complex)
    if amps.shape[-1] != params.full_dim:
        raise ValueError(
            f"amplitude dimension {amps.shape[-1]} does not match full_dim {params.full_dim}"
        )
    batch = amps.shape[:-1]
    k = params.k
    tensor = amps.reshape(batch + params.shape)
    F = dft_matrix(params.N, sign)
    nb = len(batch)
    for r in range(k):
        axis = nb + k + r
        tensor = np.moveaxis(np.tensordot(tensor, F, axes=([axis], [1])), -1, axis)
    return tensor.reshape(batch + (params.full_dim,))


@dataclass(frozen=True, eq=False)
class DenseState:
    """Full ``(2N)^k`` amplitude vector tagged with its frame."""

    amps: np.ndarray
    params: DihedralParams
    frame: str = STANDARD

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.shape[0] != self.params.full_dim:
            raise ValueError(
                f"state has {amps.shape[0]} amplitudes, expected {self.params.full_dim}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be finite")
        if self.frame not in (STANDARD, HYBRID):
            raise ValueError(f"unknown frame {self.frame!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def as_tensor(self) -> np.ndarray:
        """Amplitudes reshaped to ``(2**k, N**k)``: bit block by integer block."""
        return self.amps.reshape(self.params.block_dim, self.params.int_dim)

    @classmethod
    def basis_state(cls, idx: StateIndex, params: DihedralParams, frame: str = STANDARD):
        amps = np.zeros(params.full_dim, dtype=complex)
        amps[index_encode(idx, params)] = 1.0
        return cls(amps, params, frame)


def frame_transform(state: DenseState, direction: str = "forward") -> DenseState:
    """Apply ``QFT_N`` (forward, kernel ``omega^{+ij}/sqrt N``) or its inverse
    to every integer register. The frame tag is left unchanged."""
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    sign = 1 if direction == "forward" else -1
    return DenseState(apply_register_dft(state.amps, state.params, sign), state.params, state.frame)


def to_hybrid(state: DenseState) -> DenseState:
    if state.frame == HYBRID:
        return state
    return DenseState(apply_register_dft(state.amps, state.params, -1), state.params, HYBRID)


def to_standard(state: DenseState) -> DenseState:
    if state.frame == STANDARD:
        return state
    return DenseState(apply_register_dft(state.amps, state.params, 1), state.params, STANDARD)


def inner_product(a, b) -> complex:
    """``<a|b>``, conjugating the left argument."""
    if isinstance(a, DenseState) and isinstance(b, DenseState):
        if a.frame != b.frame:
            raise ValueError(f"frame mismatch: {a.frame} vs {b.frame}")
        if a.params != b.params:
            raise ValueError("states belong to different DihedralParams")
        return complex(np.vdot(a.amps, b.amps))
    if isinstance(a, DenseState) or isinstance(b, DenseState):
        raise ValueError("cannot mix a framed DenseState with a raw array")
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``(seed, *stream)``; e.g. ``derive_rng(master, trial_index)``.

    Uses ``numpy.random.SeedSequence`` entropy mixing, so the stream for a given
    trial does not depend on how many other trials ran or in what order.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))
