"""One test (or group) per acceptance criterion; run with ``pytest tests/test_acceptance.py``.

The conftest prints an ``ACCEPTANCE criterion k: PASS/FAIL`` line per criterion
at the end of the session, with the measured values attached.
"""
import itertools
import math
import time

import numpy as np
import pytest

from thmc.basis import CrossingFamily, MarkovBasis, PermutationFamily, markov_basis, random_move
from thmc.cli import main
from thmc.configuration import (DEFAULT_MAX_CELLS, _build_cached, build_configuration,
                                degrees_of_freedom, identical_column_classes)
from thmc.core import PathTable, all_paths
from thmc.fiber import all_fibers, check_connectivity, exact_conditional, fiber_of
from thmc.inference import asymptotic_p, run_test
from thmc.mcmc import run_mcmc

A24 = [
    [1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1],
    [3, 2, 1, 1, 1, 0, 0, 0, 2, 1, 0, 0, 1, 0, 0, 0],
    [0, 1, 1, 1, 1, 2, 1, 1, 0, 1, 1, 1, 0, 1, 0, 0],
    [0, 0, 1, 0, 1, 1, 1, 0, 1, 1, 2, 1, 1, 1, 1, 0],
    [0, 0, 0, 1, 0, 0, 1, 2, 0, 0, 0, 1, 1, 1, 2, 3],
]


def _best_time(fn, reps=20):
    best = math.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def test_criterion_1_configuration(record_property):
    A, secs = _best_time(lambda: _build_cached.__wrapped__(2, 4, DEFAULT_MAX_CELLS))
    record_property("detail", f"6x16 exact, build {secs * 1e3:.3f} ms")
    assert A.matrix.dtype.kind == "i"
    assert A.matrix.tolist() == A24
    assert secs < 1e-3


def test_criterion_2_identical_columns(record_property):
    config = build_configuration(2, 4)
    classes, secs = _best_time(lambda: identical_column_classes(config))
    labels = sorted(sorted("".join(map(str, all_paths(2, 4)[i])) for i in c) for c in classes)
    record_property("detail", f"{labels}, {secs * 1e3:.3f} ms")
    assert labels == [["1121", "1211"], ["2122", "2212"]]
    assert secs < 1e-3


def _verify_all(S, T, max_n, basis):
    n = bad = 0
    for fib in all_fibers(S, T, max_n):
        n += 1
        if not check_connectivity(fib, basis, stop_early=True).connected:
            bad += 1
    return n, bad


def test_criterion_3_two_state_basis(record_property):
    t0 = time.perf_counter()
    parts = []
    total_bad = 0
    for T in (3, 4, 5, 6):
        n, bad = _verify_all(2, T, 4, markov_basis(2, T))
        parts.append(f"T={T}: {n} fibers, {bad} disconnected")
        total_bad += bad
    secs = time.perf_counter() - t0
    record_property("detail", "; ".join(parts) + f"; {secs:.0f} s")
    assert total_bad == 0
    assert secs < 300


def _length_three_basis(S, skip=()):
    fams = [CrossingFamily(S, 3)] + [PermutationFamily(S, 3, m) for m in range(2, S + 1)
                                     if m not in skip]
    return MarkovBasis(S, 3, tuple(fams), "crossing + permutations")


def test_criterion_4_length_three_basis(record_property):
    t0 = time.perf_counter()
    parts = []
    total_bad = 0
    for S in (2, 3, 4):
        n, bad = _verify_all(S, 3, 3, _length_three_basis(S))
        parts.append(f"S={S}: {n} fibers, {bad} disconnected")
        total_bad += bad
    secs = time.perf_counter() - t0
    record_property("detail", "; ".join(parts) + f"; {secs:.0f} s")
    assert total_bad == 0
    assert secs < 300


def test_criterion_5_negative_controls(record_property):
    t0 = time.perf_counter()
    fib = fiber_of(PathTable({(1, 1, 2, 1): 1}, 2, 4))
    res = check_connectivity(fib, markov_basis(2, 4, exclude=["degree-one"]))
    n, bad = _verify_all(3, 3, 3, _length_three_basis(3, skip=(3,)))
    secs = time.perf_counter() - t0
    record_property("detail", f"1121/1211 components={len(res.components)}; "
                              f"(3,3) without m=3: {bad}/{n} disconnected; {secs:.1f} s")
    assert not res.connected and len(res.components) == 2
    assert bad >= 1
    assert secs < 60


def test_criterion_6_stationarity(record_property):
    t0 = time.perf_counter()
    basis = markov_basis(2, 4)
    steps = 10 ** 6
    worst = 0.0
    n = 0
    for i, fib in enumerate(f for f in all_fibers(2, 4, 2) if len(f) >= 2):
        n += 1
        ch = run_mcmc(fib.members[0], basis, 1000, steps, seed=i, record_visits=True)
        dense = [tuple(m.dense().tolist()) for m in fib.members]
        assert set(ch.visits) <= set(dense)
        emp = np.array([ch.visits.get(d, 0) for d in dense]) / steps
        exact = np.array([float(w) for w in exact_conditional(fib)])
        worst = max(worst, 0.5 * np.abs(emp - exact).sum())
    secs = time.perf_counter() - t0
    record_property("detail", f"{n} fibers, worst TV {worst:.4f}, {secs:.0f} s")
    assert worst <= 0.02
    assert secs < 120


def test_criterion_7_statistic_df_asymptotic(table1, record_property):
    report, _ = run_test(table1, seed=0, n_burnin=0, n_samples=1)
    record_property("detail", f"chi2={report.chi2_observed:.4f} df={report.df} "
                              f"p_asym={report.p_asymptotic:.5f}")
    assert abs(report.chi2_observed - 11.533) <= 0.01
    assert report.df == 4 == degrees_of_freedom(3, 3)
    assert abs(report.p_asymptotic - 0.0212) <= 0.0005


@pytest.mark.parametrize("seed", range(5))
def test_criterion_7_exact_p(table1, seed, record_property):
    t0 = time.perf_counter()
    report, _ = run_test(table1, seed=seed, n_burnin=50_000, n_samples=100_000)
    secs = time.perf_counter() - t0
    record_property("detail", f"seed {seed}: p_exact={report.p_exact:.5f} "
                              f"(mcse {report.p_exact_se:.4f}), {secs:.1f} s")
    assert abs(report.p_exact - 0.0184) <= 0.005
    assert secs < 120


def test_criterion_8_asymptotic_p(record_property):
    errs = [abs(asymptotic_p(x, 2) - math.exp(-x / 2)) for x in (1, 2, 5)]
    p = asymptotic_p(11.533, 4)
    record_property("detail", f"max df=2 error {max(errs):.1e}; p(11.533, 4)={p:.6f}")
    assert max(errs) <= 1e-10
    assert 0.0207 <= p <= 0.0217


def _node_indicators(S, T):
    paths = np.array(all_paths(S, T)) - 1
    return np.stack([np.eye(S, dtype=np.int64)[paths[:, t]].T for t in range(T)])   # (T, S, C)


@pytest.mark.parametrize("S, T", [(2, 5), (3, 3)])
def test_criterion_9_move_validity(S, T, record_property):
    t0 = time.perf_counter()
    basis = markov_basis(S, T)
    rng = np.random.default_rng(2024)
    x = PathTable({(1,) * T: 1}, S, T)
    Z = np.stack([random_move(x, basis, rng).dense() for _ in range(10 ** 5)])
    A = build_configuration(S, T).matrix
    nodes = np.einsum("tsc,nc->nts", _node_indicators(S, T), Z)       # z^t_i per move
    secs = time.perf_counter() - t0
    record_property("detail", f"({S},{T}): {len(Z)} moves, {secs:.1f} s")
    assert not (Z @ A.T).any()
    assert not nodes[:, 0].any() and not nodes[:, -1].any()
    assert not nodes[:, 1:-1].sum(axis=1).any()
    assert secs < 30


def test_criterion_10_determinism(tmp_path, record_property):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.txt"
        assert main(["test", "--fixture", "marijuana", "--seed", "42", "--out", str(path)]) == 0
        lines = path.read_text().splitlines()
        assert lines[0].startswith("timestamp:")
        outs.append((lines[1:], (tmp_path / f"r{k}.txt.hist.csv").read_bytes()))
    record_property("detail", f"{len(outs[0][0])} report lines compared")
    assert outs[0] == outs[1]
