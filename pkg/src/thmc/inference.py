"""THMC maximum likelihood, test statistics, p-values and the exact test driver."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .basis import MarkovBasis, markov_basis
from .configuration import build_configuration, degrees_of_freedom
from .core import PathTable, ShapeError
from .mcmc import ChainResult, run_mcmc

EPS = 1e-9
STATISTICS = ("pearson", "pearson-full", "anderson-goodman")


class NonConvergence(RuntimeWarning):
    pass


@dataclass
class FitResult:
    expected: np.ndarray        # fitted means over all S**T cells, lexicographic order
    converged: bool
    iterations: int
    residual: float             # max |A m - b|


def fit_thmc_mle(table: PathTable, tol: float = 1e-10, max_iter: int = 100_000) -> FitResult:
    """MLE of the cell means under the THMC model by generalized iterative scaling.

    Every column of A sums to T, so A / T is a valid GIS design.  Rows with a
    zero margin force their cells to zero; those cells are fixed at zero and
    the rows are dropped from the scaling.
    """
    if table.N == 0:
        raise ValueError("cannot fit an empty table")
    S, T = table.S, table.T
    A = build_configuration(S, T).matrix.astype(float)
    b = A @ table.dense()
    live = b > 0
    free = ~(A[~live] > 0).any(axis=0)
    A_live, b_live = A[live][:, free], b[live]
    logm = np.full(int(free.sum()), math.log(table.N / free.sum()))
    converged = False
    it = 0
    residual = math.inf
    log_b = np.log(b_live)
    for it in range(1, max_iter + 1):
        fitted = A_live @ np.exp(logm)
        residual = float(np.abs(fitted - b_live).max())
        if residual < tol:
            converged = True
            break
        logm += (A_live.T @ (log_b - np.log(fitted))) / T
    expected = np.zeros(S ** T)
    expected[free] = np.exp(logm)
    residual = float(np.abs(A @ expected - b).max())
    if not converged:
        warnings.warn(f"GIS stopped after {max_iter} iterations, residual {residual:.3g}",
                      NonConvergence, stacklevel=2)
    return FitResult(expected, converged, it, residual)


def chi_square(table: PathTable, fit: FitResult, eps: float = EPS) -> float:
    """Pearson statistic of the table against fitted means over all S**T cells."""
    return float(_pearson(table.dense()[None, :], fit.expected, eps)[0])


def _pearson(obs: np.ndarray, expected: np.ndarray, eps: float) -> np.ndarray:
    pos = expected > eps
    d = obs[:, pos] - expected[pos]
    out = (d * d / expected[pos]).sum(axis=1)
    # a positive count where the model has (numerically) zero mass
    out[(obs[:, ~pos] > 0).any(axis=1)] = math.inf
    return out


class _Slices:
    """Per-time transition counts and node counts for batches of dense tables."""

    def __init__(self, S: int, T: int):
        self.S, self.T = S, T
        idx = np.arange(S ** T)
        powers = S ** np.arange(T - 1, -1, -1)
        self.states = (idx[:, None] // powers) % S                       # (C, T)
        self.edge = self.states[:, :-1] * S + self.states[:, 1:]          # (C, T-1)

    def transitions(self, X: np.ndarray) -> np.ndarray:
        """(n, T-1, S*S) counts x^t_ij."""
        S2 = self.S * self.S
        out = np.zeros((X.shape[0], self.T - 1, S2))
        for t in range(self.T - 1):
            onehot = np.zeros((X.shape[1], S2))
            onehot[np.arange(X.shape[1]), self.edge[:, t]] = 1.0
            out[:, t, :] = X @ onehot
        return out


def h1_expected(X: np.ndarray, S: int, T: int) -> np.ndarray:
    """Closed-form MLE of the non-homogeneous chain for each row of X.

    m1(w) = prod_t x^t_{s_t s_t+1} / prod_{t=2}^{T-1} x^t_{s_t}
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sl = _Slices(S, T)
    trans = sl.transitions(X)                                    # (n, T-1, S*S)
    num = np.ones((X.shape[0], X.shape[1]))
    for t in range(T - 1):
        num *= trans[:, t, sl.edge[:, t]]
    den = np.ones_like(num)
    for t in range(1, T - 1):
        nodes = trans[:, t, :].reshape(-1, S, S).sum(axis=2)     # x^{t+1}_i, 0-based t
        den *= nodes[:, sl.states[:, t]]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


class Statistic:
    """A test statistic whose fiber-constant parts are computed once.

    Callable on a PathTable; ``batch`` evaluates an (n, S**T) array of
    dense tables from the same fiber.
    """

    def __init__(self, name: str, table: PathTable, fit: FitResult | None = None):
        if name not in STATISTICS:
            raise ValueError(f"unknown statistic {name!r}; choose from {', '.join(STATISTICS)}")
        self.name = name
        self.S, self.T = table.S, table.T
        self.fit = fit or fit_thmc_mle(table)
        if name == "anderson-goodman":
            sl = _Slices(self.S, self.T)
            pooled = sl.transitions(table.dense()[None, :].astype(float))[0].sum(axis=0)
            rows = pooled.reshape(self.S, self.S).sum(axis=1, keepdims=True)
            with np.errstate(divide="ignore", invalid="ignore"):
                self._phat = np.where(rows > 0, pooled.reshape(self.S, self.S) / rows, 0.0)
            self._slices = sl

    def __call__(self, table: PathTable) -> float:
        if (table.S, table.T) != (self.S, self.T):
            raise ShapeError("table shape does not match the statistic")
        return float(self.batch(table.dense()[None, :])[0])

    def batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.name == "pearson-full":
            return _pearson(X, self.fit.expected, EPS)
        if self.name == "pearson":
            return _pearson(h1_expected(X, self.S, self.T), self.fit.expected, EPS)
        return self._anderson_goodman(X)

    def _anderson_goodman(self, X: np.ndarray) -> np.ndarray:
        S = self.S
        trans = self._slices.transitions(X).reshape(X.shape[0], self.T - 1, S, S)
        nodes = trans.sum(axis=3, keepdims=True)
        expected = nodes * self._phat
        pos = expected > EPS
        d = np.where(pos, trans - expected, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(pos, d * d / np.where(pos, expected, 1.0), 0.0)
        out = terms.sum(axis=(1, 2, 3))
        out[((trans > 0) & ~pos).any(axis=(1, 2, 3))] = math.inf
        return out


# --------------------------------------------------------------------------
# p-values
# --------------------------------------------------------------------------

def _gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by its power series (x < a + 1)."""
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by Lentz's continued fraction (x >= a + 1)."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def asymptotic_p(chi2: float, df: int) -> float:
    """Upper tail of the chi-square distribution with df degrees of freedom."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if math.isnan(chi2) or chi2 < 0:
        raise ValueError(f"chi2 must be nonnegative, got {chi2}")
    if chi2 == 0:
        return 1.0
    if math.isinf(chi2):
        return 0.0
    a, x = df / 2.0, chi2 / 2.0
    if x == 0.0:    # chi2 subnormal
        return 1.0
    if x < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_series(a, x)))
    return min(1.0, max(0.0, _gamma_cf(a, x)))


def exact_p(samples, observed: float) -> float:
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        raise ValueError("no samples")
    return float(np.count_nonzero(s >= observed - 1e-12) / s.size)


def batch_means_se(samples, observed: float, n_batches: int = 20) -> float:
    """Batch-means standard error of the exact p-value estimate."""
    hits = (np.asarray(samples, dtype=float) >= observed - 1e-12).astype(float)
    size = hits.size // n_batches
    if size == 0:
        return math.nan
    means = hits[:size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def histogram(samples, observed: float, bins: int = 50) -> list[tuple[float, float, int]]:
    s = np.asarray(samples, dtype=float)
    finite = s[np.isfinite(s)]
    top = max(float(finite.max()) if finite.size else 0.0,
              observed if math.isfinite(observed) else 0.0) * 1.05
    top = top if top > 0 else 1.0
    edges = np.linspace(0.0, top, bins + 1)
    counts, _ = np.histogram(np.clip(s, 0.0, top), bins=edges)
    return [(float(edges[k]), float(edges[k + 1]), int(counts[k])) for k in range(bins)]


# --------------------------------------------------------------------------
# the exact test
# --------------------------------------------------------------------------

@dataclass
class TestReport:
    statistic: str
    chi2_observed: float
    df: int
    p_asymptotic: float
    p_exact: float
    p_exact_se: float
    n_samples: int
    n_burnin: int
    seed: int
    threads: int
    acceptance_rate: float
    infeasible_rate: float
    fit_converged: bool
    fit_iterations: int
    fit_residual: float
    S: int
    T: int
    N: int
    basis_source: str
    kernel: str
    histogram: list[tuple[float, float, int]]

    __test__ = False   # not a pytest class

    def lines(self) -> list[str]:
        rows = [
            ("S", self.S), ("T", self.T), ("N", self.N),
            ("statistic", self.statistic),
            ("chi2_observed", f"{self.chi2_observed:.6f}"),
            ("df", self.df),
            ("p_asymptotic", f"{self.p_asymptotic:.6f}"),
            ("p_exact", f"{self.p_exact:.6f}"),
            ("p_exact_mcse", f"{self.p_exact_se:.6f}"),
            ("n_burnin", self.n_burnin), ("n_samples", self.n_samples),
            ("seed", self.seed), ("threads", self.threads),
            ("acceptance_rate", f"{self.acceptance_rate:.6f}"),
            ("infeasible_rate", f"{self.infeasible_rate:.6f}"),
            ("basis", self.basis_source), ("kernel", self.kernel),
            ("fit_converged", str(self.fit_converged).lower()),
            ("fit_iterations", self.fit_iterations),
            ("fit_residual", f"{self.fit_residual:.3e}"),
        ]
        return [f"{k}: {v}" for k, v in rows]


def run_test(table: PathTable, seed: int, n_burnin: int = 50_000, n_samples: int = 100_000,
             statistic: str = "pearson", basis: MarkovBasis | None = None,
             threads: int = 1, kernel: str = "guided") -> tuple[TestReport, ChainResult]:
    """Exact conditional goodness-of-fit test of the THMC model, started at the data."""
    basis = basis or markov_basis(table.S, table.T)
    fit = fit_thmc_mle(table)
    stat = Statistic(statistic, table, fit)
    observed = stat(table)
    df = degrees_of_freedom(table.S, table.T)
    chain = run_mcmc(table, basis, n_burnin, n_samples, seed, stat, threads=threads,
                      kernel=kernel)
    steps = n_burnin * threads + n_samples
    report = TestReport(
        statistic=statistic, chi2_observed=observed, df=df,
        p_asymptotic=asymptotic_p(observed, df) if df >= 1 else math.nan,
        p_exact=exact_p(chain.values, observed),
        p_exact_se=batch_means_se(chain.values, observed),
        n_samples=n_samples, n_burnin=n_burnin, seed=seed, threads=threads,
        acceptance_rate=chain.accepted / steps, infeasible_rate=chain.infeasible / steps,
        fit_converged=fit.converged, fit_iterations=fit.iterations, fit_residual=fit.residual,
        S=table.S, T=table.T, N=table.N, basis_source=basis.source, kernel=chain.kernel,
        histogram=histogram(chain.values, observed))
    return report, chain
