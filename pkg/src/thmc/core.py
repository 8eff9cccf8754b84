"""Exact-integer data model for paths, path tables, sufficient statistics and moves.

Paths are plain tuples of states in ``1..S``.  Cells of an ``S**T`` table are
ordered lexicographically, so the cell index of a path is
``sum((s_t - 1) * S**(T - t))``, matching the column order of the
configuration matrix.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

import numpy as np

MIN_LENGTH = 3
Path = tuple[int, ...]


class ShapeError(ValueError):
    """Paths, tables or moves of incompatible or invalid dimensions."""


class NegativityError(ValueError):
    """Applying a move would produce a negative cell count."""


def check_path(path: Iterable[int], S: int, T: int | None = None) -> Path:
    """Validate a path and return it as a tuple of ints."""
    p = tuple(int(s) for s in path)
    if len(p) < MIN_LENGTH:
        raise ShapeError(f"paths need length >= {MIN_LENGTH}, got {len(p)}")
    if T is not None and len(p) != T:
        raise ShapeError(f"path {p} has length {len(p)}, expected {T}")
    for s in p:
        if not 1 <= s <= S:
            raise ShapeError(f"state {s} in path {p} outside 1..{S}")
    return p


def path_index(path: Path, S: int) -> int:
    idx = 0
    for s in path:
        idx = idx * S + (s - 1)
    return idx


def index_path(index: int, S: int, T: int) -> Path:
    states = []
    for _ in range(T):
        index, r = divmod(index, S)
        states.append(r + 1)
    return tuple(reversed(states))


def all_paths(S: int, T: int) -> list[Path]:
    """Every path of length T in lexicographic (cell) order."""
    return list(itertools.product(range(1, S + 1), repeat=T))


def path_label(path: Path) -> str:
    return "".join(str(s) for s in path) if max(path) < 10 else "-".join(map(str, path))


class PathTable:
    """Sparse nonnegative integer table over ``S**T`` paths.

    Only strictly positive counts are stored.  Instances are treated as
    immutable values: every operation returns a new table.
    """

    __slots__ = ("_counts", "S", "T", "N")

    def __init__(self, counts: Mapping[Iterable[int], int], S: int, T: int):
        if S < 2:
            raise ShapeError(f"need at least 2 states, got S={S}")
        if T < MIN_LENGTH:
            raise ShapeError(f"need T >= {MIN_LENGTH}, got T={T}")
        clean: dict[Path, int] = {}
        for path, c in counts.items():
            c = int(c)
            if c < 0:
                raise NegativityError(f"negative count {c} for path {tuple(path)}")
            if c:
                p = check_path(path, S, T)
                clean[p] = clean.get(p, 0) + c
        self._counts = clean
        self.S = S
        self.T = T
        self.N = sum(clean.values())

    @classmethod
    def from_paths(cls, paths: Iterable[Iterable[int]], S: int | None = None,
                   T: int | None = None) -> "PathTable":
        """Aggregate a list of observed paths (with repetition)."""
        counts: dict[Path, int] = {}
        for p in paths:
            p = tuple(int(s) for s in p)
            counts[p] = counts.get(p, 0) + 1
        if not counts and (S is None or T is None):
            raise ShapeError("cannot infer S and T from an empty path list")
        if S is None:
            S = max(max(p) for p in counts)
        if T is None:
            T = len(next(iter(counts)))
        return cls(counts, S, T)

    @classmethod
    def from_dense(cls, vector: Iterable[int], S: int, T: int) -> "PathTable":
        vec = np.asarray(vector)
        if vec.shape != (S ** T,):
            raise ShapeError(f"dense table needs {S ** T} cells, got shape {vec.shape}")
        nz = np.flatnonzero(vec)
        return cls({index_path(int(i), S, T): int(vec[i]) for i in nz}, S, T)

    @classmethod
    def from_key(cls, key: Iterable[int], S: int, T: int) -> "PathTable":
        """Build from a multiset of cell indices (see :meth:`key`)."""
        counts: dict[Path, int] = {}
        for i in key:
            p = index_path(i, S, T)
            counts[p] = counts.get(p, 0) + 1
        return cls(counts, S, T)

    @property
    def counts(self) -> Mapping[Path, int]:
        return MappingProxyType(self._counts)

    def __getitem__(self, path: Iterable[int]) -> int:
        return self._counts.get(tuple(path), 0)

    def __iter__(self) -> Iterator[Path]:
        return iter(sorted(self._counts))

    def __len__(self) -> int:
        return len(self._counts)

    def items(self) -> list[tuple[Path, int]]:
        return sorted(self._counts.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PathTable):
            return NotImplemented
        return (self.S, self.T) == (other.S, other.T) and self._counts == other._counts

    def __hash__(self) -> int:
        return hash((self.S, self.T, frozenset(self._counts.items())))

    def __repr__(self) -> str:
        body = ", ".join(f"{path_label(p)}: {c}" for p, c in self.items())
        return f"PathTable(S={self.S}, T={self.T}, {{{body}}})"

    def dense(self) -> np.ndarray:
        out = np.zeros(self.S ** self.T, dtype=np.int64)
        for p, c in self._counts.items():
            out[path_index(p, self.S)] = c
        return out

    def key(self) -> tuple[int, ...]:
        """Sorted tuple of cell indices with multiplicity; a canonical compact form."""
        out: list[int] = []
        for p, c in self._counts.items():
            out.extend([path_index(p, self.S)] * c)
        out.sort()
        return tuple(out)


@dataclass(frozen=True)
class SuffStat:
    """Initial-state counts and pooled transition counts."""

    initial: tuple[int, ...]
    transitions: tuple[tuple[int, ...], ...]

    @property
    def S(self) -> int:
        return len(self.initial)

    @property
    def N(self) -> int:
        return sum(self.initial)

    def vector(self) -> np.ndarray:
        """Rows in configuration order: x1_1..x1_S, then x+_ij row-major."""
        flat = [v for row in self.transitions for v in row]
        return np.array(list(self.initial) + flat, dtype=np.int64)

    @classmethod
    def from_vector(cls, vec: Iterable[int], S: int) -> "SuffStat":
        v = [int(a) for a in vec]
        if len(v) != S + S * S:
            raise ShapeError(f"expected {S + S * S} entries, got {len(v)}")
        rows = tuple(tuple(v[S + i * S:S + (i + 1) * S]) for i in range(S))
        return cls(tuple(v[:S]), rows)


class Move:
    """Signed integer table ``z``; a valid move satisfies ``A z = 0``."""

    __slots__ = ("_delta", "S", "T")

    def __init__(self, delta: Mapping[Iterable[int], int], S: int, T: int):
        clean: dict[Path, int] = {}
        for path, v in delta.items():
            p = check_path(path, S, T)
            clean[p] = clean.get(p, 0) + int(v)
        self._delta = {p: v for p, v in clean.items() if v}
        self.S = S
        self.T = T

    @classmethod
    def from_dense(cls, vector: Iterable[int], S: int, T: int) -> "Move":
        vec = np.asarray(vector)
        if vec.shape != (S ** T,):
            raise ShapeError(f"dense move needs {S ** T} entries, got shape {vec.shape}")
        return cls({index_path(int(i), S, T): int(vec[i]) for i in np.flatnonzero(vec)}, S, T)

    @classmethod
    def difference(cls, plus: Iterable[Path], minus: Iterable[Path], S: int, T: int) -> "Move":
        """``sum(e_w for w in plus) - sum(e_w for w in minus)``."""
        delta: dict[Path, int] = {}
        for p in plus:
            delta[tuple(p)] = delta.get(tuple(p), 0) + 1
        for p in minus:
            delta[tuple(p)] = delta.get(tuple(p), 0) - 1
        return cls(delta, S, T)

    @property
    def delta(self) -> Mapping[Path, int]:
        return MappingProxyType(self._delta)

    def is_zero(self) -> bool:
        return not self._delta

    @property
    def degree(self) -> int:
        return sum(v for v in self._delta.values() if v > 0)

    def positive(self) -> dict[Path, int]:
        return {p: v for p, v in self._delta.items() if v > 0}

    def negative(self) -> dict[Path, int]:
        return {p: -v for p, v in self._delta.items() if v < 0}

    def __neg__(self) -> "Move":
        return Move({p: -v for p, v in self._delta.items()}, self.S, self.T)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Move):
            return NotImplemented
        return (self.S, self.T) == (other.S, other.T) and self._delta == other._delta

    def __hash__(self) -> int:
        return hash((self.S, self.T, frozenset(self._delta.items())))

    def __repr__(self) -> str:
        plus = ", ".join(path_label(p) + ("" if v == 1 else f"x{v}")
                         for p, v in sorted(self.positive().items()))
        minus = ", ".join(path_label(p) + ("" if v == 1 else f"x{v}")
                          for p, v in sorted(self.negative().items()))
        return f"Move(+{{{plus}}} -{{{minus}}})"

    def sparse(self) -> list[tuple[int, int]]:
        """(cell index, value) pairs sorted by cell."""
        return sorted((path_index(p, self.S), v) for p, v in self._delta.items())

    def dense(self) -> np.ndarray:
        out = np.zeros(self.S ** self.T, dtype=np.int64)
        for i, v in self.sparse():
            out[i] = v
        return out

    def canonical(self) -> "Move":
        """The sign representative whose lowest cell is positive."""
        sp = self.sparse()
        return self if not sp or sp[0][1] > 0 else -self

    def edge_deltas(self) -> np.ndarray:
        """``z[t-1, i-1, j-1]`` = signed change of transitions i->j at time t."""
        out = np.zeros((self.T - 1, self.S, self.S), dtype=np.int64)
        for p, v in self._delta.items():
            for t in range(self.T - 1):
                out[t, p[t] - 1, p[t + 1] - 1] += v
        return out

    def node_deltas(self) -> np.ndarray:
        """``z[t-1, i-1]`` = signed change of the number of paths at state i, time t."""
        out = np.zeros((self.T, self.S), dtype=np.int64)
        for p, v in self._delta.items():
            for t in range(self.T):
                out[t, p[t] - 1] += v
        return out

    def l1_edge_norm(self) -> int:
        return int(np.abs(self.edge_deltas()).sum())


def suff_stat(table: PathTable) -> SuffStat:
    S = table.S
    initial = [0] * S
    trans = [[0] * S for _ in range(S)]
    for p, c in table.counts.items():
        initial[p[0] - 1] += c
        for a, b in zip(p, p[1:]):
            trans[a - 1][b - 1] += c
    return SuffStat(tuple(initial), tuple(tuple(r) for r in trans))


def slice_transition_counts(table: PathTable, t: int) -> np.ndarray:
    """S x S matrix of transitions from time t to t+1 (t is 1-based)."""
    if not 1 <= t <= table.T - 1:
        raise ShapeError(f"time index {t} outside 1..{table.T - 1}")
    out = np.zeros((table.S, table.S), dtype=np.int64)
    for p, c in table.counts.items():
        out[p[t - 1] - 1, p[t] - 1] += c
    return out


def node_counts(table: PathTable, t: int) -> np.ndarray:
    """Number of paths in each state at time t (1-based)."""
    if not 1 <= t <= table.T:
        raise ShapeError(f"time index {t} outside 1..{table.T}")
    out = np.zeros(table.S, dtype=np.int64)
    for p, c in table.counts.items():
        out[p[t - 1] - 1] += c
    return out


def apply_move(table: PathTable, move: Move, sign: int = 1) -> PathTable:
    """Return ``table + sign * move``; raises NegativityError on a negative cell."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if (table.S, table.T) != (move.S, move.T):
        raise ShapeError(f"table shape {(table.S, table.T)} != move shape {(move.S, move.T)}")
    counts = dict(table.counts)
    for p, v in move.delta.items():
        c = counts.get(p, 0) + sign * v
        if c < 0:
            raise NegativityError(f"cell {path_label(p)} would become {c}")
        counts[p] = c
    return PathTable(counts, table.S, table.T)


def is_valid_move(move: Move) -> bool:
    """True iff the move leaves initial counts and pooled transition counts unchanged."""
    S = move.S
    initial = [0] * S
    trans = [0] * (S * S)
    for p, v in move.delta.items():
        initial[p[0] - 1] += v
        for a, b in zip(p, p[1:]):
            trans[(a - 1) * S + b - 1] += v
    return not any(initial) and not any(trans)
