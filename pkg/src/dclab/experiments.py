"""Monte Carlo and exhaustive checks of the success-probability and
solution-count formulas.

Sampled rates are judged at 3 sigma, with sigma taken from the predicted
probability. Exhaustive or analytic quantities are judged at fixed absolute
tolerances. Trial ``i`` always draws from ``derive_rng(seed, i)``, so summaries
do not depend on thread count or scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .basis import CosetStateSpec, build_coset_state, build_tilde_basis, enumerate_basis
from .core import DenseState, DihedralParams, ResourceLimitError, all_bit_vectors, derive_rng, index_decode
from .simulator import (
    IN_C,
    DcspParams,
    algorithm1,
    algorithm2,
    dcsp_measure,
    exact_outcome_distribution,
    prob_in_coset_space,
    success_probability,
)
from .subset_sum import random_instance
from .unitaries import RANDOM_PERMUTATION, build_UC, build_US

EXHAUSTIVE_BUDGET = 2**24
SIGMAS = 3.0
EXACT_TOL = 1e-12

UNITARY_FAMILIES = ("canonical", "random", "hat", "tilde")


def formula_us(T: int) -> float:
    return (T - 1) / T


def formula_uc(T: int) -> float:
    return (2 / T) * (1 - 1 / T)


def formula_hat(T: int) -> float:
    return 2 * (T - 1) / T**2


def formula_tilde_bound(T: int) -> float:
    return (1 / T) * (1 - 1 / T)


def standard_error(rate: float, n: int) -> float:
    return math.sqrt(rate * (1 - rate) / n) if n else float("nan")


def within_sigma(observed: float, predicted: float, n: int, sigmas: float = SIGMAS) -> bool:
    """``|observed - predicted| <= sigmas * sqrt(p(1-p)/n)``; exact match when p is 0 or 1."""
    sigma = math.sqrt(predicted * (1 - predicted) / n)
    return abs(observed - predicted) <= sigmas * sigma + 1e-15


@dataclass
class ExperimentConfig:
    N: int
    k: int
    trials: int = 1000
    seed: int = 0
    algorithm: str = "alg1"
    unitary: str = "canonical"
    sigmas: float = SIGMAS
    exact_tol: float = EXACT_TOL
    c: float = 1.0
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sigmas <= 0 or self.exact_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.algorithm not in ("alg1", "alg2"):
            raise ValueError(f"algorithm must be alg1 or alg2, got {self.algorithm!r}")
        if self.unitary not in UNITARY_FAMILIES:
            raise ValueError(f"unitary must be one of {UNITARY_FAMILIES}, got {self.unitary!r}")


@dataclass
class ExperimentSummary:
    name: str
    empirical_rate: float
    predicted: float
    standard_error: float
    verdict: bool
    trials: int
    cells: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _prediction(config: ExperimentConfig, T: int) -> tuple[float, str, str]:
    """(value, kind, formula) for one ``|T|`` cell."""
    if config.algorithm == "alg1":
        if config.unitary in ("canonical", "random"):
            return formula_us(T), "exact", "(|T|-1)/|T|"
        if config.unitary == "hat":
            return formula_hat(T), "exact", "2(|T|-1)/|T|^2"
        return formula_tilde_bound(T), "lower-bound", "(1/|T|)(1-1/|T|)"
    if config.unitary in ("canonical", "random"):
        return formula_uc(T), "exact", "(2/|T|)(1-1/|T|)"
    return formula_tilde_bound(T), "lower-bound", "(1/|T|)(1-1/|T|)"


class _UnitaryFactory:
    """Builds (and caches) the unitary a trial runs against."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.params = DihedralParams(config.N, config.k)
        self._cache: dict = {}

    def _basis(self, b):
        fam = self.config.unitary
        if fam in ("canonical", "random"):
            key = "canonical"
            if key not in self._cache:
                self._cache[key] = enumerate_basis(self.params)
        elif fam == "tilde":
            key = "tilde"
            if key not in self._cache:
                self._cache[key] = build_tilde_basis(self.params, "random", seed=self.config.seed)
        else:
            # adversarial against the fixed input b
            key = ("hat", b)
            if key not in self._cache:
                self._cache[key] = build_tilde_basis(self.params, "hat", anchor=b)
        return self._cache[key]

    def get(self, b):
        fam = self.config.unitary
        key = ("U", self.config.algorithm, fam, b if fam == "hat" else None)
        if key not in self._cache:
            basis = self._basis(b)
            if self.config.algorithm == "alg2":
                u = build_UC(basis)
            elif fam == "random":
                u = build_US(basis, RANDOM_PERMUTATION, derive_rng(self.config.seed, 2**32 - 1))
            else:
                u = build_US(basis)
            self._cache[key] = u
        return self._cache[key]


def _one_trial(config: ExperimentConfig, factory: _UnitaryFactory, i: int) -> tuple[int, bool, float]:
    rng = derive_rng(config.seed, i)
    l, b, _ = random_instance(factory.params, rng)
    u = factory.get(b)
    run = algorithm1 if config.algorithm == "alg1" else algorithm2
    outcome = run(l, b, u, rng)
    table = exact_outcome_distribution(l, b, u)
    return len(table), outcome.success, success_probability(table, b)


def collision_success_experiment(config: ExperimentConfig) -> ExperimentSummary:
    """Run ``config.trials`` random ``(l, b)`` instances and stratify by ``|T|``."""
    factory = _UnitaryFactory(config)
    if config.unitary == "hat":
        # warm the per-b cache serially so worker threads only read it
        for bits in all_bit_vectors(config.k):
            factory.get(tuple(int(v) for v in bits))
    else:
        factory.get(None)
    indices = range(config.trials)
    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            results = list(pool.map(lambda i: _one_trial(config, factory, i), indices))
    else:
        results = [_one_trial(config, factory, i) for i in indices]

    cells: dict[int, dict] = {}
    for T, success, exact in results:
        cell = cells.setdefault(T, {"n": 0, "successes": 0, "exact": []})
        cell["n"] += 1
        cell["successes"] += int(success)
        cell["exact"].append(exact)

    out_cells = []
    all_pass = True
    predicted_total = 0.0
    for T in sorted(cells):
        cell = cells[T]
        n = cell["n"]
        rate = cell["successes"] / n
        value, kind, formula = _prediction(config, T)
        exact = np.asarray(cell["exact"])
        if kind == "exact":
            exact_ok = bool(np.all(np.abs(exact - value) <= config.exact_tol))
            sample_ok = within_sigma(rate, value, n, config.sigmas)
        else:
            exact_ok = bool(np.all(exact >= value - config.exact_tol))
            sample_ok = rate >= value - config.sigmas * math.sqrt(value * (1 - value) / n) - 1e-15
        row = {
            "T": T,
            "n": n,
            "empirical": rate,
            "standard_error": standard_error(rate, n),
            "predicted": value,
            "kind": kind,
            "formula": formula,
            "exact_min": float(exact.min()),
            "exact_max": float(exact.max()),
            "exact_ok": exact_ok,
            "sample_ok": bool(sample_ok),
            "verdict": exact_ok and bool(sample_ok),
        }
        if config.algorithm == "alg1" and config.unitary == "hat":
            row["one_branch_figure_1_over_T"] = 1 / T
        out_cells.append(row)
        all_pass &= row["verdict"]
        predicted_total += value * n

    successes = sum(int(s) for _, s, _ in results)
    rate = successes / config.trials
    notes = []
    if config.algorithm == "alg1" and config.unitary == "hat":
        notes.append(
            "hat basis: exact success is 2(|T|-1)/|T|^2, larger than the 1/|T| figure "
            "obtained by counting only the Shat^1 branch"
        )
    return ExperimentSummary(
        name=f"collision-{config.algorithm}-{config.unitary}",
        empirical_rate=rate,
        predicted=predicted_total / config.trials,
        standard_error=standard_error(rate, config.trials),
        verdict=all_pass,
        trials=config.trials,
        cells=out_cells,
        notes=notes,
    )


def _default_b(k: int) -> tuple[int, ...]:
    return (1,) * k


def _collision_counts(k: int, N: int, b: Sequence[int], chunk: int = 1 << 16):
    """Yield boolean chunks ``X[l, b'] = (b'.l == b.l mod N)`` over all ``l``."""
    if N**k > EXHAUSTIVE_BUDGET:
        raise ResourceLimitError(f"N^k = {N**k} exceeds the exhaustive budget {EXHAUSTIVE_BUDGET}")
    diffs = all_bit_vectors(k) - np.asarray(b, dtype=np.int64)[None, :]
    total = N**k
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        ls = np.empty((idx.size, k), dtype=np.int64)
        rest = idx.copy()
        for i in range(k - 1, -1, -1):
            rest, ls[:, i] = np.divmod(rest, N)
        yield (ls @ diffs.T) % N == 0


def t_statistics(
    k: int,
    N: int,
    b: Sequence[int] | None = None,
    mode: str = "exhaustive",
    rng: np.random.Generator | None = None,
    samples: int = 100_000,
) -> dict:
    """Statistics of ``|T_{l, b.l}| - 1`` over uniform ``l`` for a fixed ``b``."""
    b = tuple(b) if b is not None else _default_b(k)
    if len(b) != k:
        raise ValueError("b must have length k")
    if mode == "exhaustive":
        hist: dict[int, int] = {}
        for X in _collision_counts(k, N, b):
            vals, counts = np.unique(X.sum(axis=1) - 1, return_counts=True)
            for v, c in zip(vals.tolist(), counts.tolist()):
                hist[v] = hist.get(v, 0) + c
        n = N**k
    elif mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        ls = rng.integers(0, N, size=(samples, k))
        diffs = all_bit_vectors(k) - np.asarray(b)[None, :]
        extra = ((ls @ diffs.T) % N == 0).sum(axis=1) - 1
        vals, counts = np.unique(extra, return_counts=True)
        hist = dict(zip(vals.tolist(), counts.tolist()))
        n = samples
    else:
        raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")
    s1 = sum(v * c for v, c in hist.items())
    s2 = sum(v * v * c for v, c in hist.items())
    mean = Fraction(s1, n)
    var = Fraction(s2, n) - mean * mean
    return {
        "k": k,
        "N": N,
        "b": list(b),
        "mode": mode,
        "population": n,
        "mean": float(mean),
        "variance": float(var),
        "max": max(hist),
        "histogram": {str(v): hist[v] for v in sorted(hist)},
        "predicted_mean": (2**k - 1) / N,
        "predicted_variance": (2**k - 1) * (1 / N - 1 / N**2),
    }


def covariance_check(
    k: int,
    N: int,
    b: Sequence[int] | None = None,
    pairs: int | None = 20,
    rng: np.random.Generator | None = None,
) -> dict:
    """Exact covariances of the collision indicators ``X_b'`` and ``X_b''`` over all ``l``.

    ``pairs=None`` checks every unordered pair of distinct ``b', b'' != b``.
    """
    b = tuple(b) if b is not None else _default_b(k)
    b_idx = int("".join(map(str, b)), 2)
    others = [i for i in range(2**k) if i != b_idx]
    all_pairs = [(x, y) for n, x in enumerate(others) for y in others[n + 1 :]]
    if pairs is not None and pairs < len(all_pairs):
        if rng is None:
            raise ValueError("sampling pairs needs an rng")
        pick = rng.choice(len(all_pairs), size=pairs, replace=False)
        chosen = [all_pairs[i] for i in sorted(pick.tolist())]
    else:
        chosen = all_pairs
    ones = np.zeros(2**k, dtype=np.int64)
    joint = np.zeros(len(chosen), dtype=np.int64)
    left = np.array([x for x, _ in chosen], dtype=np.int64)
    right = np.array([y for _, y in chosen], dtype=np.int64)
    for X in _collision_counts(k, N, b):
        ones += X.sum(axis=0)
        joint += (X[:, left] & X[:, right]).sum(axis=0)
    n = N**k
    covs = [Fraction(int(j), n) - Fraction(int(ones[x]), n) * Fraction(int(ones[y]), n)
            for j, x, y in zip(joint, left, right)]
    marginals = [Fraction(int(ones[i]), n) for i in others]
    return {
        "k": k,
        "N": N,
        "b": list(b),
        "pairs": len(chosen),
        "max_abs_covariance": float(max((abs(c) for c in covs), default=0)),
        "marginals_all_1_over_N": all(m == Fraction(1, N) for m in marginals),
        "max_marginal_error": float(max(abs(m - Fraction(1, N)) for m in marginals)),
    }


def chebyshev_bound(k: int, N: int, t: float) -> float:
    """``Var(|T| - 1) / t^2`` with ``Var = (2^k - 1)(1/N - 1/N^2)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return (2**k - 1) * (1 / N - 1 / N**2) / t**2


def chebyshev_tail_check(k: int, N: int, ts: Sequence[float] = (1, 2, 5, 10), b=None) -> dict:
    """Exhaustive ``P(||T| - 1 - mean| >= t)`` against :func:`chebyshev_bound`."""
    stats = t_statistics(k, N, b)
    mean = Fraction(2**k - 1, N)
    n = stats["population"]
    rows = []
    for t in ts:
        tail = Fraction(sum(c for v, c in stats["histogram"].items() if abs(int(v) - mean) >= Fraction(t)), n)
        bound = chebyshev_bound(k, N, t)
        rows.append({"t": t, "tail": float(tail), "bound": bound, "ok": float(tail) <= bound})
    return {"k": k, "N": N, "rows": rows, "ok": all(r["ok"] for r in rows)}


def dcsp_confusion(dcsp: DcspParams, trials: int, rng: np.random.Generator, coset_samples: int | None = None) -> dict:
    """P(InC) for coset inputs (exact projection) and for uniform standard inputs."""
    params = dcsp.params
    b0 = enumerate_basis(params, "B0")
    N, k = params.N, params.k
    coset_samples = trials if coset_samples is None else coset_samples
    worst = 0.0
    for _ in range(coset_samples):
        spec = CosetStateSpec(int(rng.integers(N)), tuple(int(x) for x in rng.integers(0, N, k)))
        worst = max(worst, abs(prob_in_coset_space(build_coset_state(spec, params), b0) - 1.0))
    exact = len(b0) / params.full_dim
    hits = 0
    for _ in range(trials):
        idx = index_decode(int(rng.integers(params.full_dim)), params)
        hits += dcsp_measure(DenseState.basis_state(idx, params), b0, rng).verdict == IN_C
    rate = hits / trials
    return {
        "N": N,
        "k": k,
        "kprime": dcsp.kprime,
        "coset_in_c_max_deviation": worst,
        "n_b0": len(b0),
        "exact_standard_in_c": exact,
        "bound": dcsp.bound,
        "empirical_standard_in_c": rate,
        "trials": trials,
        "standard_error": standard_error(rate, trials),
        "within_3_sigma": within_sigma(rate, exact, trials),
    }
