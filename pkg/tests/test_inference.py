import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2 as chi2_dist

from thmc.configuration import build_configuration
from thmc.core import PathTable, suff_stat
from thmc.inference import (Statistic, asymptotic_p, batch_means_se, chi_square, exact_p,
                            fit_thmc_mle, histogram, run_test)


def newton_mle(x: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Independent oracle: damped Newton on the Poisson log-likelihood in theta."""
    b = A @ x
    theta = np.zeros(A.shape[0])
    theta[0] = theta[1] = math.log(x.sum() / len(x))
    for _ in range(200):
        m = np.exp(A.T @ theta)
        g = A @ m - b
        if np.abs(g).max() < 1e-12:
            break
        H = (A * m) @ A.T
        step = np.linalg.lstsq(H, g, rcond=None)[0]
        t = 1.0
        f0 = m.sum() - b @ theta
        while np.exp(A.T @ (theta - t * step)).sum() - b @ (theta - t * step) > f0 and t > 1e-8:
            t /= 2
        theta = theta - t * step
    return np.exp(A.T @ theta)


def test_mle_matches_newton_oracle():
    rng = np.random.default_rng(2)
    A = build_configuration(2, 3).matrix.astype(float)
    for _ in range(10):
        x = rng.integers(1, 12, size=8)
        fit = fit_thmc_mle(PathTable.from_dense(x, 2, 3))
        ref = newton_mle(x.astype(float), A)
        assert fit.converged
        assert np.max(np.abs(fit.expected - ref) / ref) < 1e-6


def test_table_in_model_is_its_own_fit():
    x = np.full(8, 25)
    fit = fit_thmc_mle(PathTable.from_dense(x, 2, 3))
    assert np.allclose(fit.expected, x, atol=1e-8)
    assert chi_square(PathTable.from_dense(x, 2, 3), fit) == pytest.approx(0, abs=1e-12)


def test_table1_moments(table1):
    fit = fit_thmc_mle(table1)
    A = build_configuration(3, 3).matrix
    assert fit.converged
    assert np.abs(A @ fit.expected - suff_stat(table1).vector()).max() < 1e-8
    assert fit.expected.sum() == pytest.approx(120)


def test_table1_statistics(table1):
    fit = fit_thmc_mle(table1)
    assert Statistic("pearson", table1, fit)(table1) == pytest.approx(11.533, abs=0.01)
    # other statistics, values from an independent numpy script
    assert Statistic("pearson-full", table1, fit)(table1) == pytest.approx(25.904, abs=1e-3)
    assert Statistic("anderson-goodman", table1, fit)(table1) == pytest.approx(11.780, abs=1e-3)


def test_statistic_relabel_invariant(table1):
    perm = {1: 3, 2: 1, 3: 2}
    relabeled = PathTable({tuple(perm[s] for s in p): c for p, c in table1.items()}, 3, 3)
    for name in ("pearson", "pearson-full", "anderson-goodman"):
        a = Statistic(name, table1)(table1)
        b = Statistic(name, relabeled)(relabeled)
        assert a == pytest.approx(b, rel=1e-9)


def test_batch_matches_scalar(table1):
    stat = Statistic("pearson", table1)
    X = np.stack([table1.dense(), table1.dense()])
    assert stat.batch(X) == pytest.approx([stat(table1)] * 2)


def test_structural_zero_sentinel():
    # a table whose fit has a zero cell where another table has mass
    x = PathTable({(1, 1, 1): 3}, 2, 3)
    fit = fit_thmc_mle(x)
    y = PathTable({(1, 1, 2): 3}, 2, 3)
    assert chi_square(y, fit) == math.inf


def test_unknown_statistic(table1):
    with pytest.raises(ValueError):
        Statistic("g2", table1)


@pytest.mark.parametrize("x", [1.0, 2.0, 5.0])
def test_df_two_closed_form(x):
    assert abs(asymptotic_p(x, 2) - math.exp(-x / 2)) < 1e-10


def test_asymptotic_p_against_scipy():
    for df in (1, 2, 3, 4, 7, 15, 40):
        for x in (0.01, 0.5, 1, 3.3, 11.533, 25, 60, 150):
            assert asymptotic_p(x, df) == pytest.approx(chi2_dist.sf(x, df), rel=1e-9, abs=1e-14)


def test_asymptotic_p_edges():
    assert asymptotic_p(0, 3) == 1.0
    assert 0.0207 <= asymptotic_p(11.533, 4) <= 0.0217
    assert asymptotic_p(math.inf, 4) == 0.0
    with pytest.raises(ValueError):
        asymptotic_p(-1, 4)
    with pytest.raises(ValueError):
        asymptotic_p(1, 0)


@settings(max_examples=80, deadline=None)
@given(st.floats(0, 200), st.floats(0, 200), st.integers(1, 30))
def test_asymptotic_p_monotone(a, b, df):
    lo, hi = sorted((a, b))
    assert asymptotic_p(lo, df) >= asymptotic_p(hi, df) - 1e-15


def test_exact_p():
    assert exact_p([1, 2, 3], 10) == 0
    assert exact_p([1, 2, 3], 0) == 1
    assert exact_p([1, 2, 3, 4], 3) == 0.5
    assert exact_p([3 - 1e-13], 3) == 1
    with pytest.raises(ValueError):
        exact_p([], 1)


def test_histogram_and_se():
    rng = np.random.default_rng(0)
    s = rng.chisquare(4, size=1000)
    h = histogram(s, 9.0)
    assert len(h) == 50
    assert sum(c for _, _, c in h) == 1000
    assert h[0][0] == 0 and h[-1][1] == pytest.approx(max(s.max(), 9.0) * 1.05)
    assert 0 < batch_means_se(s, 9.0) < 0.05


def test_run_test_report(table1):
    report, chain = run_test(table1, seed=3, n_burnin=2000, n_samples=5000)
    assert report.df == 4
    assert 0 <= report.p_exact <= 1 and 0 <= report.p_asymptotic <= 1
    assert sum(c for _, _, c in report.histogram) == 5000
    assert len(chain.values) == 5000
    keys = [line.split(":")[0] for line in report.lines()]
    for k in ("chi2_observed", "df", "p_asymptotic", "p_exact", "n_samples", "n_burnin", "seed",
              "acceptance_rate"):
        assert k in keys
