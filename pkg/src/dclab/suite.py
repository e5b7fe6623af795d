"""The full acceptance suite, as used by ``dclab report-all``.

Every check returns a record ``{name, criterion, predicted, observed,
tolerance, verdict, details}``. Wall-clock time goes into a separate timing
map so that check records stay byte-identical for a given seed.
"""

from __future__ import annotations

import itertools
import math
import time
from typing import Callable

import numpy as np

from .basis import (
    build_tilde_basis,
    coset_family,
    coset_span_check,
    enumerate_basis,
    verify_coset_orthogonality,
)
from .core import DihedralParams, apply_register_dft, derive_rng
from .experiments import (
    ExperimentConfig,
    chebyshev_tail_check,
    collision_success_experiment,
    covariance_check,
    dcsp_confusion,
    formula_hat,
    formula_tilde_bound,
    formula_uc,
    formula_us,
    t_statistics,
    within_sigma,
)
from .simulator import (
    CosetOracle,
    DcspParams,
    algorithm1,
    algorithm1_dense_distribution,
    algorithm2_dense_distribution,
    dcp_solve,
    exact_outcome_distribution,
    success_probability,
)
from .subset_sum import random_instance
from .unitaries import build_UC, build_US, materialize_dense, unitarity_error

# criterion id -> wall-clock limit in seconds
RUNTIME_LIMITS = {
    "basis-orthonormality": 1.0,
    "coset-orthogonality": 1.0,
    "coset-span": 5.0,
    "us-collision": 30.0,
    "hat-basis": 10.0,
    "uc-collision": 30.0,
    "tilde-lower-bounds": 60.0,
    "solution-count-statistics": 60.0,
    "dcsp-measurement": 30.0,
    "dcp-reduction": 60.0,
    "mode-equivalence": 5.0,
}


def _check(name, criterion, predicted, observed, tolerance, verdict, **details) -> dict:
    return {
        "name": name,
        "criterion": criterion,
        "predicted": predicted,
        "observed": observed,
        "tolerance": tolerance,
        "verdict": "pass" if verdict else "fail",
        "details": details,
    }


def check_basis_orthonormality(seed: int) -> dict:
    params = DihedralParams(3, 2)
    basis = enumerate_basis(params)
    V = basis.dense_matrix()
    gram_err = float(np.max(np.abs(V.conj().T @ V - np.eye(V.shape[1]))))
    labels = basis.labels()
    ok = len(basis) == 36 and gram_err <= 1e-10 and len(set(labels)) == len(labels)
    return _check(
        "basis-orthonormality", 1, {"entries": 36, "gram_max_dev": 0.0},
        {"entries": len(basis), "gram_max_dev": gram_err}, 1e-10, ok,
        N=3, k=2, n_b0=len(basis.B0), n_bperp=len(basis.Bperp),
    )


def check_coset_orthogonality(seed: int) -> dict:
    rep = verify_coset_orthogonality(DihedralParams(3, 2))
    ok = rep["n_coset_states"] == 27 and rep["max_abs_inner_product"] <= 1e-10
    return _check("coset-orthogonality", 2, 0.0, rep["max_abs_inner_product"], 1e-10, ok, **rep)


def check_coset_span(seed: int) -> dict:
    reps = [coset_span_check(DihedralParams(N, k)) for N, k in ((2, 1), (3, 2))]
    ok = reps[0]["rank"] == 3 and all(
        r["rank"] == r["n_b0"] and r["max_coset_residual"] <= 1e-10 and r["max_bperp_projection"] <= 1e-10
        for r in reps
    )
    return _check(
        "coset-span", 3, [{"rank": r["n_b0"], "residual": 0.0} for r in reps],
        [{"rank": r["rank"], "residual": r["max_coset_residual"]} for r in reps], 1e-10, ok, cases=reps,
    )


def _instances(params: DihedralParams, seed: int, stream: int, count: int):
    rng = derive_rng(seed, stream)
    return [random_instance(params, rng)[:2] for _ in range(count)]


def _pooled_cells(rows: list[tuple[int, int, int, float]]) -> list[dict]:
    """Pool (T, n, successes, predicted) rows by T and apply the 3 sigma test."""
    cells: dict[int, list] = {}
    for T, n, s, pred in rows:
        cell = cells.setdefault(T, [0, 0, pred])
        cell[0] += n
        cell[1] += s
    out = []
    for T in sorted(cells):
        n, s, pred = cells[T]
        rate = s / n
        out.append({"T": T, "n": n, "empirical": rate, "predicted": pred,
                    "within_3_sigma": within_sigma(rate, pred, n)})
    return out


def check_us_collision(seed: int) -> dict:
    params = DihedralParams(4, 4)
    u = build_US(enumerate_basis(params))
    exact_err = 0.0
    rows = []
    for n, (l, b) in enumerate(_instances(params, seed, 4, 50)):
        table = exact_outcome_distribution(l, b, u)
        T = len(table)
        exact_err = max(exact_err, abs(success_probability(table, b) - formula_us(T)))
        rng = derive_rng(seed, 4, 1, n)
        wins = sum(algorithm1(l, b, u, rng).success for _ in range(2000))
        rows.append((T, 2000, wins, formula_us(T)))
    cells = _pooled_cells(rows)
    ok = exact_err <= 1e-12 and all(c["within_3_sigma"] for c in cells)
    return _check(
        "us-collision", 4, "(|T|-1)/|T|", {"max_exact_error": exact_err, "cells": cells},
        {"exact": 1e-12, "sampled": "3 sigma per |T| cell"}, ok, instances=50, trials_per_instance=2000,
    )


def check_hat_basis(seed: int) -> dict:
    params = DihedralParams(4, 4)
    base = enumerate_basis(params)
    cache = {}
    worst = 0.0
    cells: dict[int, dict] = {}
    for l, b in _instances(params, seed, 5, 50):
        if b not in cache:
            cache[b] = build_US(base, "adversarial", anchor=b)
        table = exact_outcome_distribution(l, b, cache[b])
        T = len(table)
        if T < 2:
            continue
        got = success_probability(table, b)
        worst = max(worst, abs(got - formula_hat(T)))
        cells.setdefault(T, {"T": T, "exact": got, "predicted": formula_hat(T), "one_branch_figure_1_over_T": 1 / T})
    ok = worst <= 1e-12 and bool(cells)
    return _check(
        "hat-basis", 5, "2(|T|-1)/|T|^2", {"max_exact_error": worst, "cells": [cells[T] for T in sorted(cells)]},
        1e-12, ok,
        discrepancy="exact success exceeds the 1/|T| figure; that figure counts only the Shat^1 branch",
    )


def check_uc_collision(seed: int) -> dict:
    params = DihedralParams(4, 4)
    u = build_UC(enumerate_basis(params))
    exact_err = 0.0
    for l, b in _instances(params, seed, 6, 50):
        table = exact_outcome_distribution(l, b, u)
        exact_err = max(exact_err, abs(success_probability(table, b) - formula_uc(len(table))))
    summary = collision_success_experiment(ExperimentConfig(4, 4, 10_000, seed, "alg2", "canonical"))
    ok = exact_err <= 1e-12 and summary.verdict
    return _check(
        "uc-collision", 6, "(2/|T|)(1-1/|T|)", {"max_exact_error": exact_err, "cells": summary.cells},
        {"exact": 1e-12, "sampled": "3 sigma per |T| cell"}, ok, trials=10_000,
    )


def check_tilde_lower_bounds(seed: int) -> dict:
    params = DihedralParams(4, 4)
    instances = _instances(params, seed, 7, 50)
    worst_margin = math.inf
    per_T: dict[int, float] = {}
    for r in range(100):
        basis = build_tilde_basis(params, "random", seed=int(derive_rng(seed, 7, 1, r).integers(2**62)))
        us, uc = build_US(basis), build_UC(basis)
        for l, b in instances:
            for u in (us, uc):
                table = exact_outcome_distribution(l, b, u)
                T = len(table)
                margin = success_probability(table, b) - formula_tilde_bound(T)
                worst_margin = min(worst_margin, margin)
                per_T[T] = min(per_T.get(T, math.inf), margin)
    ok = worst_margin >= -1e-12
    return _check(
        "tilde-lower-bounds", 7, "(1/|T|)(1-1/|T|)", {"min_margin": worst_margin,
                                                     "min_margin_per_T": {str(T): per_T[T] for T in sorted(per_T)}},
        -1e-12, ok, rotations=100, instances=50, algorithms=["alg1", "alg2"],
    )


def check_solution_statistics(seed: int) -> dict:
    rows = []
    ok = True
    for k, N in itertools.product(range(2, 6), (2, 4, 8, 16)):
        stats = t_statistics(k, N)
        cov = covariance_check(k, N, pairs=20, rng=derive_rng(seed, 8, k, N))
        cheb = chebyshev_tail_check(k, N)
        mean_err = abs(stats["mean"] - stats["predicted_mean"])
        var_err = abs(stats["variance"] - stats["predicted_variance"])
        good = mean_err <= 1e-9 and var_err <= 1e-9 and cov["max_abs_covariance"] <= 1e-9 and cheb["ok"]
        ok &= good
        rows.append({"k": k, "N": N, "mean_err": mean_err, "var_err": var_err,
                     "max_abs_cov": cov["max_abs_covariance"], "pairs": cov["pairs"],
                     "chebyshev_ok": cheb["ok"], "ok": good})
    return _check(
        "solution-count-statistics", 8, "mean (2^k-1)/N, var (2^k-1)(1/N-1/N^2), cov 0, tail <= Var/t^2",
        {"max_mean_err": max(r["mean_err"] for r in rows), "max_var_err": max(r["var_err"] for r in rows),
         "max_abs_cov": max(r["max_abs_cov"] for r in rows)},
        1e-9, ok, grid=rows,
    )


def check_dcsp_measurement(seed: int) -> dict:
    dcsp = DcspParams.for_modulus(4, 1)
    params = dcsp.params
    b0 = enumerate_basis(params, "B0")
    _, rows = coset_family(params)
    hyb = apply_register_dft(rows, params, -1)
    proj = b0.project_coset(hyb)
    coset_dev = float(np.max(np.abs(np.sum(np.abs(proj) ** 2, axis=1) - 1.0)))
    conf = dcsp_confusion(dcsp, 2000, derive_rng(seed, 9), coset_samples=0)
    ok = coset_dev <= 1e-10 and conf["exact_standard_in_c"] <= 0.25 and conf["within_3_sigma"]
    return _check(
        "dcsp-measurement", 9,
        {"coset_in_c": 1.0, "standard_in_c": conf["exact_standard_in_c"], "bound": 0.25},
        {"coset_max_deviation": coset_dev, "standard_in_c_empirical": conf["empirical_standard_in_c"]},
        {"coset": 1e-10, "sampled": "3 sigma"}, ok, n_coset_states=rows.shape[0], **conf,
    )


def exact_dcp_recovery(N: int, p_in_c: float, repeats: int) -> float:
    """Exact recovery probability of the majority rule, averaged over uniform ``d``.

    A bit equal to 0 leaves coset states intact (always InC). A bit equal to
    1 is misread only when a strict majority of ``repeats`` calls say InC,
    each with probability ``p_in_c``.
    """
    if repeats % 2 == 0:
        raise ValueError("closed form assumes odd repeats")
    miss = sum(math.comb(repeats, j) * p_in_c**j * (1 - p_in_c) ** (repeats - j)
               for j in range(repeats // 2 + 1, repeats + 1))
    return sum((1 - miss) ** bin(d).count("1") for d in range(N)) / N


def check_dcp_reduction(seed: int) -> dict:
    dcsp = DcspParams.for_modulus(4, 1)
    b0 = enumerate_basis(dcsp.params, "B0")
    runs = []
    for r in range(20):
        rng = derive_rng(seed, r)
        d = int(rng.integers(dcsp.params.N))
        res = dcp_solve(CosetOracle(d, dcsp.params.N, rng), dcsp, 5, rng, b0)
        runs.append({"d": d, "d_hat": res.d_hat, "states_used": res.states_used})
    recovered = sum(run["d"] == run["d_hat"] for run in runs)
    exact = exact_dcp_recovery(dcsp.params.N, len(b0) / dcsp.params.full_dim, 5)
    return _check(
        "dcp-reduction", 10, ">= 18 of 20 recovered", recovered, 0.9, recovered >= 18,
        runs=runs, repeats=5, exact_recovery_probability=exact,
    )


def check_mode_equivalence(seed: int) -> dict:
    params = DihedralParams(2, 2)
    basis = enumerate_basis(params)
    us, uc = build_US(basis), build_UC(basis)
    Ms, Mc = materialize_dense(us), materialize_dense(uc)
    tv1 = tv2 = 0.0
    for l in itertools.product(range(2), repeat=2):
        for b in itertools.product(range(2), repeat=2):
            for u, M, dense, tv_name in ((us, Ms, algorithm1_dense_distribution, 1),
                                         (uc, Mc, algorithm2_dense_distribution, 2)):
                label = exact_outcome_distribution(l, b, u)
                dens = dense(l, b, u, M)
                keys = set(label) | set(dens)
                tv = 0.5 * sum(abs(label.get(x, 0.0) - dens.get(x, 0.0)) for x in keys)
                if tv_name == 1:
                    tv1 = max(tv1, tv)
                else:
                    tv2 = max(tv2, tv)
    e_s, e_c = unitarity_error(Ms), unitarity_error(Mc)
    ok = tv1 <= 1e-10 and e_s <= 1e-10 and e_c <= 1e-10
    return _check(
        "mode-equivalence", 11, 0.0,
        {"alg1_max_tv": tv1, "us_unitarity": e_s, "uc_unitarity": e_c},
        1e-10, ok, alg2_max_tv=tv2, uc_dim=Mc.shape[0],
    )


CHECKS: dict[str, Callable[[int], dict]] = {
    "basis-orthonormality": check_basis_orthonormality,
    "coset-orthogonality": check_coset_orthogonality,
    "coset-span": check_coset_span,
    "us-collision": check_us_collision,
    "hat-basis": check_hat_basis,
    "uc-collision": check_uc_collision,
    "tilde-lower-bounds": check_tilde_lower_bounds,
    "solution-count-statistics": check_solution_statistics,
    "dcsp-measurement": check_dcsp_measurement,
    "dcp-reduction": check_dcp_reduction,
    "mode-equivalence": check_mode_equivalence,
}


def run_check(name: str, seed: int) -> tuple[dict, float]:
    start = time.perf_counter()
    rec = CHECKS[name](seed)
    return rec, time.perf_counter() - start


def run_suite(seed: int = 7, only: list[str] | None = None) -> tuple[list[dict], dict]:
    unknown = set(only or ()) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    checks, timing = [], {}
    for name in CHECKS:
        if only and name not in only:
            continue
        rec, secs = run_check(name, seed)
        checks.append(rec)
        timing[name] = {"seconds": secs, "limit": RUNTIME_LIMITS[name], "within_limit": secs < RUNTIME_LIMITS[name]}
    return checks, timing
