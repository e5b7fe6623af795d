"""Subset-sum instances over Z_N and their solution sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DihedralParams, ResourceLimitError, int_to_bits

MAX_ENUMERATION_K = 24


@dataclass(frozen=True)
class SubsetSumInstance:
    l: tuple[int, ...]
    p: int
    params: DihedralParams

    def __post_init__(self):
        l = tuple(int(v) for v in self.l)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "p", int(self.p))
        if len(l) != self.params.k:
            raise ValueError(f"l has length {len(l)}, expected k={self.params.k}")
        if any(not 0 <= v < self.params.N for v in l):
            raise ValueError(f"l components must lie in [0, {self.params.N})")
        if not 0 <= self.p < self.params.N:
            raise ValueError(f"p must lie in [0, {self.params.N})")

    @property
    def density(self) -> float:
        return density(self.params)


@dataclass(frozen=True, eq=False)
class SolutionSet:
    """Solutions of ``b . l = p (mod N)`` in ascending binary order.

    ``indices`` holds each solution as a binary integer (``b_1`` most
    significant); ``solutions`` gives the same list as bit tuples.
    """

    instance: SubsetSumInstance
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def solutions(self) -> list[tuple[int, ...]]:
        k = self.instance.params.k
        return [int_to_bits(int(i), k) for i in self.indices]

    def position(self, b: Sequence[int]) -> int:
        """Position ``j`` of ``b`` in the ordering, or ``ValueError``."""
        value = 0
        for bit in b:
            value = value * 2 + int(bit)
        j = int(np.searchsorted(self.indices, value))
        if j >= len(self.indices) or self.indices[j] != value:
            raise ValueError(f"{tuple(b)} is not a solution of this instance")
        return j


def subset_sums(l: Sequence[int], N: int) -> np.ndarray:
    """``(b . l) mod N`` for every ``b`` in canonical order, by doubling."""
    k = len(l)
    if k > MAX_ENUMERATION_K:
        raise ResourceLimitError(f"k={k} exceeds the brute-force budget {MAX_ENUMERATION_K}")
    sums = np.zeros(1, dtype=np.int64)
    # last component first, so b_1 ends up as the most significant bit
    for v in reversed(l):
        sums = np.concatenate([sums, (sums + int(v)) % N])
    return sums


def enumerate_solutions(instance: SubsetSumInstance) -> SolutionSet:
    sums = subset_sums(instance.l, instance.params.N)
    return SolutionSet(instance, np.flatnonzero(sums == instance.p).astype(np.int64))


def random_instance(params: DihedralParams, rng: np.random.Generator):
    """Draw ``(l, b, p)`` with ``l`` uniform in Z_N^k, ``b`` uniform, ``p = b.l``."""
    l = tuple(int(v) for v in rng.integers(0, params.N, size=params.k))
    b = tuple(int(v) for v in rng.integers(0, 2, size=params.k))
    p = sum(x * y for x, y in zip(b, l)) % params.N
    return l, b, p


def verify_collision(l: Sequence[int], b: Sequence[int], b_prime: Sequence[int], N: int) -> bool:
    if not (len(l) == len(b) == len(b_prime)):
        raise ValueError("l, b and b' must have equal length")
    if tuple(b) == tuple(b_prime):
        return False
    lhs = sum(int(x) * int(y) for x, y in zip(b_prime, l)) % N
    rhs = sum(int(x) * int(y) for x, y in zip(b, l)) % N
    return lhs == rhs


def density(params: DihedralParams) -> float:
    """``k / log2 N``."""
    return params.k / math.log2(params.N)


def k_for_density(N: int, c: float) -> int:
    """Smallest integer ``k >= log2 N + c * log2 log2 N``."""
    if N < 4:
        raise ValueError("log2 log2 N needs N >= 4")
    logn = math.log2(N)
    return math.ceil(logn + c * math.log2(logn) - 1e-12)
