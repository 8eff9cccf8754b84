"""Configuration matrix of the toric homogeneous Markov chain model.

Rows: initial counts x1_1..x1_S, then pooled transitions x+_ij in row-major
(i, j) order.  Columns: paths in lexicographic order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .core import Move, Path, ShapeError, all_paths

DEFAULT_MAX_CELLS = 2 ** 20


class CapExceeded(RuntimeError):
    """A computation would exceed a configured size limit."""


@dataclass(frozen=True, eq=False)
class Configuration:
    S: int
    T: int
    matrix: np.ndarray

    @property
    def paths(self) -> list[Path]:
        return all_paths(self.S, self.T)

    @property
    def row_labels(self) -> list[str]:
        init = [f"x1_{i}" for i in range(1, self.S + 1)]
        trans = [f"x+_{i}{j}" for i in range(1, self.S + 1) for j in range(1, self.S + 1)]
        return init + trans

    def column(self, path: Path) -> np.ndarray:
        idx = 0
        for s in path:
            idx = idx * self.S + (s - 1)
        return self.matrix[:, idx]


def _check_shape(S: int, T: int, max_cells: int) -> None:
    if S < 2 or T < 3:
        raise ShapeError(f"need S >= 2 and T >= 3, got S={S}, T={T}")
    if S ** T > max_cells:
        raise CapExceeded(f"S**T = {S ** T} cells exceeds the cap of {max_cells}")


def _path_states(S: int, T: int) -> np.ndarray:
    """(S**T, T) array of 0-based states in lexicographic order."""
    idx = np.arange(S ** T)
    powers = S ** np.arange(T - 1, -1, -1)
    return (idx[:, None] // powers) % S


def build_configuration(S: int, T: int, max_cells: int = DEFAULT_MAX_CELLS) -> Configuration:
    return _build_cached(S, T, max_cells)


@lru_cache(maxsize=32)
def _build_cached(S: int, T: int, max_cells: int) -> Configuration:
    _check_shape(S, T, max_cells)
    states = _path_states(S, T)
    ncol = S ** T
    A = np.zeros((S + S * S, ncol), dtype=np.int64)
    cols = np.arange(ncol)
    A[states[:, 0], cols] = 1
    for t in range(T - 1):
        np.add.at(A, (S + states[:, t] * S + states[:, t + 1], cols), 1)
    A.setflags(write=False)
    return Configuration(S, T, A)


def identical_column_classes(config: Configuration) -> list[list[int]]:
    """Groups of column indices with identical columns; singletons omitted."""
    buckets: dict[bytes, list[int]] = {}
    cols = np.ascontiguousarray(config.matrix.T)
    for j, col in enumerate(cols):
        buckets.setdefault(col.tobytes(), []).append(j)
    classes = []
    for members in buckets.values():
        # exact comparison guards against (impossible in practice) byte collisions
        if len(members) > 1 and all(np.array_equal(cols[members[0]], cols[m]) for m in members):
            classes.append(members)
    return sorted(classes)


def degree_one_moves(S: int, T: int, max_cells: int = DEFAULT_MAX_CELLS) -> list[Move]:
    """One move ``e_a - e_b`` per unordered pair of identical columns (a < b)."""
    config = build_configuration(S, T, max_cells)
    paths = config.paths
    moves = []
    for members in identical_column_classes(config):
        for a, b in combinations(members, 2):
            moves.append(Move({paths[a]: 1, paths[b]: -1}, S, T))
    return moves


def exact_rank(rows) -> int:
    """Rank over the rationals by fraction-free (Bareiss) elimination."""
    M = [[int(v) for v in row] for row in rows]
    if not M:
        return 0
    nrows, ncols = len(M), len(M[0])
    rank = 0
    prev = 1
    for col in range(ncols):
        pivot = next((r for r in range(rank, nrows) if M[r][col] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        p = M[rank][col]
        for r in range(rank + 1, nrows):
            f = M[r][col]
            row_r, row_p = M[r], M[rank]
            M[r] = [(p * row_r[c] - f * row_p[c]) // prev for c in range(ncols)]
        prev = p
        rank += 1
        if rank == nrows:
            break
    return rank


def design_rank(config: Configuration) -> int:
    return exact_rank(config.matrix.tolist())


def h1_design(S: int, T: int, max_cells: int = DEFAULT_MAX_CELLS) -> np.ndarray:
    """Stacked per-time transition indicators: row (t, i, j) counts t:ij in each path."""
    _check_shape(S, T, max_cells)
    states = _path_states(S, T)
    ncol = S ** T
    D = np.zeros(((T - 1) * S * S, ncol), dtype=np.int64)
    cols = np.arange(ncol)
    for t in range(T - 1):
        D[t * S * S + states[:, t] * S + states[:, t + 1], cols] = 1
    return D


def h1_rank(S: int, T: int, max_cells: int = DEFAULT_MAX_CELLS) -> int:
    return exact_rank(h1_design(S, T, max_cells).tolist())


def degrees_of_freedom(S: int, T: int, max_cells: int = DEFAULT_MAX_CELLS) -> int:
    """Difference of the ranks of the non-homogeneous and THMC designs."""
    return h1_rank(S, T, max_cells) - design_rank(build_configuration(S, T, max_cells))
