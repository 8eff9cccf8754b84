"""Brute-force fibers: enumeration, connectivity under a move set, exact conditionals.

Tables are handled as *keys*, sorted tuples of cell indices with repetition
(see ``PathTable.key``).  That keeps a fiber of a few thousand members cheap
to hash and compare.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .basis import MarkovBasis
from .configuration import CapExceeded, build_configuration
from .core import PathTable, ShapeError, SuffStat, suff_stat

DEFAULT_MAX_WORK = 10 ** 7


@dataclass(eq=False)
class Fiber:
    b: SuffStat
    S: int
    T: int
    keys: list[tuple[int, ...]]

    @property
    def N(self) -> int:
        return self.b.N

    @property
    def members(self) -> list[PathTable]:
        return [PathTable.from_key(k, self.S, self.T) for k in self.keys]

    def __len__(self) -> int:
        return len(self.keys)


@dataclass
class Connectivity:
    connected: bool
    components: list[list[int]]     # member positions in fiber.keys


def _contributions(S: int, T: int) -> np.ndarray:
    """Row per path: the path's column of A."""
    return np.ascontiguousarray(build_configuration(S, T).matrix.T)


def enumerate_fiber(b: SuffStat, S: int, T: int, max_work: int = DEFAULT_MAX_WORK) -> Fiber:
    """All tables with sufficient statistic b, by DFS over non-decreasing path indices.

    Paths are indexed lexicographically, so the first state never decreases
    along a branch; the next path must therefore start in the smallest state
    whose initial budget is still open.  Branches are cut as soon as a
    transition budget would go negative.
    """
    if b.S != S:
        raise ShapeError(f"statistic has {b.S} states, expected {S}")
    N = b.N
    if N * S ** T > max_work:
        raise CapExceeded(f"N * S**T = {N * S ** T} exceeds the work cap {max_work}")
    budget = [int(v) for v in b.vector()]
    if any(v < 0 for v in budget):
        raise ValueError("sufficient statistic has negative entries")
    if sum(budget[S:]) != (T - 1) * N:
        return Fiber(b, S, T, [])
    contrib = [[(r, int(v)) for r, v in enumerate(col) if v] for col in _contributions(S, T)]
    block = S ** (T - 1)   # paths with the same first state form a contiguous block
    out: list[tuple[int, ...]] = []
    chosen: list[int] = []

    def dfs(start: int, left: int) -> None:
        if left == 0:
            out.append(tuple(chosen))
            return
        s = next(i for i in range(S) if budget[i] > 0)
        for idx in range(max(start, s * block), (s + 1) * block):
            col = contrib[idx]
            if all(budget[r] >= v for r, v in col):
                for r, v in col:
                    budget[r] -= v
                chosen.append(idx)
                dfs(idx, left - 1)
                chosen.pop()
                for r, v in col:
                    budget[r] += v

    if N == 0:
        return Fiber(b, S, T, [()])
    dfs(0, N)
    return Fiber(b, S, T, out)


def all_fibers(S: int, T: int, max_n: int, min_n: int = 1,
               max_tables: int = 5 * 10 ** 6) -> Iterator[Fiber]:
    """Every fiber containing a table of N paths, min_n <= N <= max_n.

    Scans all multisets of N paths at once and groups them by sufficient
    statistic; this doubles as an independent check of ``enumerate_fiber``.
    """
    config = build_configuration(S, T)
    cols = config.matrix.T
    n_cells = S ** T
    for N in range(min_n, max_n + 1):
        n_tables = math.comb(n_cells + N - 1, N)
        if n_tables > max_tables:
            raise CapExceeded(f"{n_tables} tables of {N} paths exceed the cap {max_tables}")
        combos = np.fromiter(
            itertools.chain.from_iterable(itertools.combinations_with_replacement(range(n_cells), N)),
            dtype=np.int32, count=n_tables * N).reshape(n_tables, N)
        stats = cols[combos].sum(axis=1)
        uniq, inverse = np.unique(stats, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        order = np.argsort(inverse, kind="stable")
        bounds = np.searchsorted(inverse[order], np.arange(len(uniq) + 1))
        for g in range(len(uniq)):
            rows = combos[order[bounds[g]:bounds[g + 1]]]
            keys = [tuple(r) for r in rows.tolist()]
            yield Fiber(SuffStat.from_vector(uniq[g], S), S, T, keys)


def check_connectivity(fiber: Fiber, basis: MarkovBasis, stop_early: bool = False) -> Connectivity:
    """Components of the fiber graph whose edges are single basis moves.

    With ``stop_early`` the search ends once the first component is known
    to be a strict subset; ``components`` then holds that component and the
    remaining members lumped together.
    """
    if (fiber.S, fiber.T) != (basis.S, basis.T):
        raise ShapeError(f"fiber shape {(fiber.S, fiber.T)} != basis shape {(basis.S, basis.T)}")
    pos = {k: i for i, k in enumerate(fiber.keys)}
    seen = [False] * len(fiber.keys)
    components: list[list[int]] = []
    for root in range(len(fiber.keys)):
        if seen[root]:
            continue
        seen[root] = True
        comp = [root]
        queue = deque([fiber.keys[root]])
        while queue:
            key = queue.popleft()
            for nb in basis.neighbors(key):
                i = pos.get(nb)
                if i is None:
                    raise RuntimeError(f"move left the fiber: {key} -> {nb}")
                if not seen[i]:
                    seen[i] = True
                    comp.append(i)
                    queue.append(nb)
        components.append(sorted(comp))
        if stop_early and len(comp) < len(fiber.keys):
            rest = [i for i in range(len(fiber.keys)) if not seen[i]]
            components.append(rest)
            break
    return Connectivity(len(components) <= 1, components)


def _factorial_product(key: tuple[int, ...]) -> int:
    """Product of factorials of the multiplicities in a key."""
    prod = 1
    for _, grp in itertools.groupby(key):
        prod *= math.factorial(sum(1 for _ in grp))
    return prod


def exact_conditional(fiber: Fiber) -> list[Fraction]:
    """p(x | b) proportional to 1 / prod x(w)!, as exact fractions."""
    weights = [Fraction(1, _factorial_product(k)) for k in fiber.keys]
    total = sum(weights, Fraction(0))
    return [w / total for w in weights]


def l1_move_norm(x: PathTable, y: PathTable) -> int:
    """Sum over t, i, j of |x^t_ij - y^t_ij|."""
    if (x.S, x.T) != (y.S, y.T):
        raise ShapeError(f"shapes differ: {(x.S, x.T)} vs {(y.S, y.T)}")
    S, T = x.S, x.T
    diff = np.zeros((T - 1, S, S), dtype=np.int64)
    for table, sign in ((x, 1), (y, -1)):
        for p, c in table.counts.items():
            for t in range(T - 1):
                diff[t, p[t] - 1, p[t + 1] - 1] += sign * c
    return int(np.abs(diff).sum())


def fiber_of(table: PathTable, max_work: int = DEFAULT_MAX_WORK) -> Fiber:
    return enumerate_fiber(suff_stat(table), table.S, table.T, max_work)


__all__ = ["Fiber", "Connectivity", "enumerate_fiber", "all_fibers", "check_connectivity",
           "exact_conditional", "l1_move_norm", "fiber_of"]
