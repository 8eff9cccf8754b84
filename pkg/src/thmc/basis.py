"""Markov bases for the toric homogeneous Markov chain model.

Two shapes have a known closed-form basis:

* ``S = 2``, any ``T >= 3``: crossing path swaps, degree-one moves, 2 by 2
  swaps and (for ``T >= 4``) swaps of the partial paths ``112``/``122``.
* ``T = 3``, any ``S``: crossing path swaps and m by m permutations,
  ``m = 2..S``.

Every family can be used in three ways:

``sample(rng)``
    draw one fully specified move; family parameters are drawn uniformly and
    independently of any table, so a Metropolis chain built on it has a
    symmetric proposal.
``instantiations()``
    the same distribution, enumerated as ``(move, probability)`` pairs.
``neighbors(key, space)``
    every table reachable from a table in one application of the family,
    where the family's partial paths are realised by paths present in the
    table.  This drives the connectivity checks.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .configuration import (DEFAULT_MAX_CELLS, CapExceeded, build_configuration,
                            identical_column_classes)
from .core import (Move, Path, PathTable, ShapeError, all_paths, check_path,
                   is_valid_move, path_index)

CROSSING = "crossing"
DEGREE_ONE = "degree-one"
TWO_BY_TWO = "two-by-two"
TYPE4 = "type-4"
PERMUTATION = "permutation"
EXTERNAL = "external"

# type-4 blocks: (block carried by the first path, block carried by the second)
TYPE4_VARIANTS = (((1, 1, 2), (1, 2, 2)), ((2, 2, 1), (2, 1, 1)))


class UnsupportedShape(ValueError):
    """No closed-form Markov basis is known for this (S, T)."""


# --------------------------------------------------------------------------
# move generators
# --------------------------------------------------------------------------

def _exchange(a: Path, b: Path, t: int) -> tuple[Path, Path]:
    """Swap the parts of two paths after position t (1-based)."""
    return a[:t] + b[t:], b[:t] + a[t:]


def crossing_swap(path_a: Sequence[int], path_b: Sequence[int], t: int,
                  S: int | None = None) -> Move:
    """Crossing path swap of two paths meeting at time t.

    Returns ``+{a, b} - {a', b'}`` where the primed paths exchange everything
    after time t; the zero move if the swap reproduces the same pair.
    """
    a, b = tuple(path_a), tuple(path_b)
    if len(a) != len(b):
        raise ShapeError("paths of different length")
    T = len(a)
    S = S or max(a + b)
    check_path(a, S, T), check_path(b, S, T)
    if not 1 <= t <= T:
        raise ValueError(f"time {t} outside 1..{T}")
    if a[t - 1] != b[t - 1]:
        raise ValueError(f"paths do not cross at time {t}: states {a[t - 1]} and {b[t - 1]}")
    a2, b2 = _exchange(a, b, t)
    return Move.difference((a, b), (a2, b2), S, T)


def two_by_two_swap(t: int, t2: int, i1: int, j1: int, i2: int, j2: int,
                    completions: Sequence[Sequence[int]], S: int | None = None) -> Move:
    """2 by 2 swap ``{t:i1j1, t:i2j2} <-> {t2:i1j2, t2:i2j1}``.

    ``completions`` are the four full paths passing through t:i1j1, t:i2j2,
    t2:i1j2 and t2:i2j1 respectively.  The first pair exchanges tails after
    time t, the second pair after time t2.
    """
    w = [tuple(p) for p in completions]
    if len(w) != 4:
        raise ValueError("need exactly four completion paths")
    T = len(w[0])
    S = S or max(max(p) for p in w)
    for p in w:
        check_path(p, S, T)
    if not 1 <= t < t2 <= T - 1:
        raise ValueError(f"need 1 <= t < t2 <= {T - 1}, got t={t}, t2={t2}")
    if i1 == i2 or j1 == j2:
        raise ValueError("need i1 != i2 and j1 != j2")
    needs = ((t, i1, j1), (t, i2, j2), (t2, i1, j2), (t2, i2, j1))
    for p, (u, a, b) in zip(w, needs):
        if (p[u - 1], p[u]) != (a, b):
            raise ValueError(f"completion {p} does not pass through {u}:{a}{b}")
    n1, n2 = _exchange(w[0], w[1], t)
    n3, n4 = _exchange(w[2], w[3], t2)
    return Move.difference(w, (n1, n2, n3, n4), S, T)


def _set_block(path: Path, t: int, block: Path) -> Path:
    return path[:t - 1] + block + path[t - 1 + len(block):]


def type4_move(t: int, t2: int, first: Sequence[int], second: Sequence[int]) -> Move:
    """Exchange the partial paths ``t:112`` and ``t2:122`` between two paths (S = 2).

    ``first`` carries 112 at time t and ``second`` carries 122 at time t2
    (or 221 and 211 for the state-swapped variant).  Adjacent times
    (``|t - t2| = 1``) give the collapsed form with a double middle transition.
    """
    a, b = tuple(first), tuple(second)
    T = len(a)
    check_path(a, 2, T), check_path(b, 2, len(b))
    if len(b) != T:
        raise ShapeError("paths of different length")
    if t == t2:
        raise ValueError("type-4 moves need t != t2")
    for u in (t, t2):
        if not 1 <= u <= T - 2:
            raise ValueError(f"block start {u} outside 1..{T - 2}")
    for b1, b2 in TYPE4_VARIANTS:
        if a[t - 1:t + 2] == b1:
            if b[t2 - 1:t2 + 2] != b2:
                raise ValueError(f"second path {b} lacks block {b2} at time {t2}")
            return Move.difference((a, b), (_set_block(a, t, b2), _set_block(b, t2, b1)), 2, T)
    raise ValueError(f"first path {a} has neither 112 nor 221 at time {t}")


def permutation_paths(i_list: Sequence[int], j_list: Sequence[int],
                      fills: dict[int, int] | None = None) -> tuple[list[Path], list[Path]]:
    """Paths (W1, W2) of the m by m permutation ``Z(i_1..i_m; j_1..j_m)`` for T = 3.

    Time-1 edges ``i_l -> j_l`` and time-2 edges ``i_l -> j_{l-1}`` lie on W1;
    W2 carries ``i_l -> j_{l-1}`` at time 1 and ``i_l -> j_l`` at time 2.
    ``fills`` gives the free first state for each j in I\\J and the free last
    state for each j in J\\I.
    """
    I, J = [int(v) for v in i_list], [int(v) for v in j_list]
    m = len(I)
    if m < 2 or len(J) != m:
        raise ValueError("need index lists of equal length m >= 2")
    if len(set(I)) != m or len(set(J)) != m:
        raise ValueError("indices within each list must be distinct")
    fills = dict(fills or {})
    pos_i = {v: l for l, v in enumerate(I)}
    pos_j = {v: l for l, v in enumerate(J)}
    w1: list[Path] = []
    w2: list[Path] = []
    for j in sorted(set(I) | set(J)):
        if j in pos_i and j in pos_j:
            l, l2 = pos_j[j], pos_i[j]
            w1.append((I[l], j, J[(l2 - 1) % m]))
            w2.append((I[(l + 1) % m], j, J[l2]))
        else:
            if j not in fills:
                raise ValueError(f"missing fill state for {j}")
            s = fills[j]
            if j in pos_i:
                l2 = pos_i[j]
                w1.append((s, j, J[(l2 - 1) % m]))
                w2.append((s, j, J[l2]))
            else:
                l = pos_j[j]
                w1.append((I[l], j, s))
                w2.append((I[(l + 1) % m], j, s))
    return w1, w2


def m_permutation(i_list: Sequence[int], j_list: Sequence[int],
                  fills: dict[int, int] | None = None, S: int | None = None) -> Move:
    """The m by m permutation move ``+W1 - W2`` for T = 3."""
    w1, w2 = permutation_paths(i_list, j_list, fills)
    S = S or max(max(p) for p in w1 + w2)
    return Move.difference(w1, w2, S, 3)


# --------------------------------------------------------------------------
# instance-level neighbourhoods on compact table keys
# --------------------------------------------------------------------------

class PathSpace:
    """Precomputed path tables for fast work on keys (sorted cell-index tuples).

    Cell indices are base-S numbers, so a tail exchange after time t is
    plain arithmetic on the low ``T - t`` digits.
    """

    def __init__(self, S: int, T: int):
        self.S, self.T = S, T
        self.paths = all_paths(S, T)
        self.index = {p: i for i, p in enumerate(self.paths)}
        self.mod = [S ** (T - t) for t in range(T + 1)]
        # edge[a][t - 1] = (s_t, s_{t+1}) of path a
        self.edge = [tuple(zip(p, p[1:])) for p in self.paths]

    def replace(self, key: tuple[int, ...], removed: Iterable[int],
                added: Iterable[int]) -> tuple[int, ...]:
        out = list(key)
        for r in removed:
            out.remove(r)
        out.extend(added)
        out.sort()
        return tuple(out)

    def swap_tails(self, a: int, b: int, t: int) -> tuple[int, int]:
        m = self.mod[t]
        ra, rb = a % m, b % m
        return a - ra + rb, b - rb + ra

    def exchange(self, key: tuple[int, ...], a: int, b: int, t: int) -> tuple[int, ...]:
        return self.replace(key, (a, b), self.swap_tails(a, b, t))

    def table(self, key: tuple[int, ...]) -> PathTable:
        return PathTable.from_key(key, self.S, self.T)


# --------------------------------------------------------------------------
# families
# --------------------------------------------------------------------------

class Family:
    kind: str = ""

    def __init__(self, S: int, T: int):
        self.S, self.T = S, T

    @property
    def label(self) -> str:
        return self.kind

    def size(self) -> int:
        """Number of parameter tuples (an upper bound on distinct moves)."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> Move:
        raise NotImplementedError

    def instantiations(self) -> Iterator[tuple[Move, float]]:
        raise NotImplementedError

    def neighbors(self, key: tuple[int, ...], space: PathSpace) -> Iterator[tuple[int, ...]]:
        raise NotImplementedError

    def describe(self) -> str:
        return f"{self.label}: {self.size()} parameter tuples"

    def _random_path(self, rng: np.random.Generator) -> list[int]:
        return [int(s) + 1 for s in rng.integers(0, self.S, size=self.T)]


class CrossingFamily(Family):
    kind = CROSSING

    def _times(self) -> range:
        return range(2, self.T)

    def size(self) -> int:
        return len(self._times()) * self.S ** (2 * self.T - 1)

    def sample(self, rng):
        while True:
            t = int(rng.integers(2, self.T))
            a = self._random_path(rng)
            b = self._random_path(rng)
            b[t - 1] = a[t - 1]
            move = crossing_swap(a, b, t, self.S)
            if not move.is_zero():
                return move

    def instantiations(self):
        moves = []
        paths = all_paths(self.S, self.T)
        for t in self._times():
            for a in paths:
                for b in paths:
                    if b[t - 1] == a[t - 1]:
                        move = crossing_swap(a, b, t, self.S)
                        if not move.is_zero():
                            moves.append(move)
        w = 1.0 / len(moves) if moves else 0.0
        return ((m, w) for m in moves)

    def neighbors(self, key, space):
        types = sorted(set(key))
        S = self.S
        for x, a in enumerate(types):
            for b in types[x + 1:]:
                for t in self._times():
                    m = space.mod[t]
                    ha, hb = a // m, b // m
                    # same state at t, and neither heads nor tails identical
                    if ha % S == hb % S and ha != hb and a % m != b % m:
                        yield space.exchange(key, a, b, t)


class DegreeOneFamily(Family):
    kind = DEGREE_ONE

    def __init__(self, S, T, max_cells: int = DEFAULT_MAX_CELLS):
        super().__init__(S, T)
        config = build_configuration(S, T, max_cells)
        self.classes = identical_column_classes(config)
        self.pairs = [pair for c in self.classes for pair in itertools.combinations(c, 2)]
        self._mates = {i: [j for j in c if j != i] for c in self.classes for i in c}
        self._paths = config.paths

    def size(self):
        return len(self.pairs)

    def _move(self, a: int, b: int) -> Move:
        return Move({self._paths[a]: 1, self._paths[b]: -1}, self.S, self.T)

    def sample(self, rng):
        a, b = self.pairs[int(rng.integers(len(self.pairs)))]
        return self._move(a, b)

    def instantiations(self):
        w = 1.0 / len(self.pairs) if self.pairs else 0.0
        return ((self._move(a, b), w) for a, b in self.pairs)

    def neighbors(self, key, space):
        for a in set(key):
            for b in self._mates.get(a, ()):
                yield space.replace(key, (a,), (b,))


class TwoByTwoFamily(Family):
    kind = TWO_BY_TWO

    def _time_pairs(self):
        return list(itertools.combinations(range(1, self.T), 2))

    def _patterns(self):
        r = range(1, self.S + 1)
        return [(i1, j1, i2, j2) for i1, j1, i2, j2 in itertools.product(r, r, r, r)
                if i1 != i2 and j1 != j2]

    def size(self):
        return (len(self._time_pairs()) * len(self._patterns())
                * self.S ** (4 * (self.T - 2)))

    def _completion(self, rng, t, a, b) -> Path:
        p = self._random_path(rng)
        p[t - 1], p[t] = a, b
        return tuple(p)

    def sample(self, rng):
        pairs, patterns = self._time_pairs(), self._patterns()
        t, t2 = pairs[int(rng.integers(len(pairs)))]
        i1, j1, i2, j2 = patterns[int(rng.integers(len(patterns)))]
        w = (self._completion(rng, t, i1, j1), self._completion(rng, t, i2, j2),
             self._completion(rng, t2, i1, j2), self._completion(rng, t2, i2, j1))
        return two_by_two_swap(t, t2, i1, j1, i2, j2, w, self.S)

    def instantiations(self):
        total = self.size()
        w = 1.0 / total if total else 0.0
        paths = all_paths(self.S, self.T)

        def through(u, a, b):
            return [p for p in paths if p[u - 1] == a and p[u] == b]

        for t, t2 in self._time_pairs():
            for i1, j1, i2, j2 in self._patterns():
                for w_ in itertools.product(through(t, i1, j1), through(t, i2, j2),
                                            through(t2, i1, j2), through(t2, i2, j1)):
                    yield two_by_two_swap(t, t2, i1, j1, i2, j2, w_, self.S), w

    def neighbors(self, key, space):
        S = self.S
        r = range(1, S + 1)
        edge_pairs = [((i1, j1), (i2, j2)) for i1, i2 in itertools.combinations(r, 2)
                      for j1 in r for j2 in r if j1 != j2]
        by_edge: dict[tuple[int, tuple[int, int]], list[int]] = {}
        for a in set(key):
            for t, e in enumerate(space.edge[a], 1):
                by_edge.setdefault((t, e), []).append(a)
        edge = space.edge
        for t, t2 in self._time_pairs():
            for e1, e2 in edge_pairs:
                on1, on2 = by_edge.get((t, e1)), by_edge.get((t, e2))
                if not on1 or not on2:
                    continue
                f1, f2 = (e1[0], e2[1]), (e2[0], e1[1])
                for a in on1:
                    for b in on2:
                        key2 = space.exchange(key, a, b, t)
                        types2 = set(key2)
                        on3 = [c for c in types2 if edge[c][t2 - 1] == f1]
                        if not on3:
                            continue
                        on4 = [d for d in types2 if edge[d][t2 - 1] == f2]
                        for c in on3:
                            for d in on4:
                                yield space.exchange(key2, c, d, t2)


class Type4Family(Family):
    kind = TYPE4

    def __init__(self, S, T):
        if S != 2:
            raise UnsupportedShape("type-4 moves are defined for S = 2 only")
        super().__init__(S, T)

    def _time_pairs(self):
        return [(t, t2) for t in range(1, self.T - 1) for t2 in range(1, self.T - 1) if t != t2]

    def size(self):
        return len(self._time_pairs()) * len(TYPE4_VARIANTS) * 2 ** (2 * (self.T - 3))

    def sample(self, rng):
        pairs = self._time_pairs()
        t, t2 = pairs[int(rng.integers(len(pairs)))]
        b1, b2 = TYPE4_VARIANTS[int(rng.integers(len(TYPE4_VARIANTS)))]
        a = _set_block(tuple(self._random_path(rng)), t, b1)
        b = _set_block(tuple(self._random_path(rng)), t2, b2)
        return type4_move(t, t2, a, b)

    def instantiations(self):
        total = self.size()
        w = 1.0 / total if total else 0.0
        paths = all_paths(2, self.T)
        for t, t2 in self._time_pairs():
            for b1, b2 in TYPE4_VARIANTS:
                firsts = [p for p in paths if p[t - 1:t + 2] == b1]
                seconds = [p for p in paths if p[t2 - 1:t2 + 2] == b2]
                for a in firsts:
                    for b in seconds:
                        yield type4_move(t, t2, a, b), w

    def neighbors(self, key, space):
        counts = Counter(key)
        codes = [(_block_code(b1), _block_code(b2)) for b1, b2 in TYPE4_VARIANTS]
        for t, t2 in self._time_pairs():
            m, m2 = space.mod[t + 2], space.mod[t2 + 2]
            for c1, c2 in codes:
                firsts = [a for a in counts if (a // m) % 8 == c1]
                if not firsts:
                    continue
                seconds = [b for b in counts if (b // m2) % 8 == c2]
                for a in firsts:
                    for b in seconds:
                        if a == b and counts[a] < 2:
                            continue
                        yield space.replace(key, (a, b), (a + (c2 - c1) * m, b + (c1 - c2) * m2))


def _block_code(block: Path) -> int:
    """Three binary states as a base-2 number (state 1 -> digit 0)."""
    return (block[0] - 1) * 4 + (block[1] - 1) * 2 + (block[2] - 1)


class PermutationFamily(Family):
    """m by m permutations for T = 3; one family per m."""

    kind = PERMUTATION

    def __init__(self, S, T, m: int):
        if T != 3:
            raise UnsupportedShape("m by m permutation families are defined for T = 3")
        if not 2 <= m <= S:
            raise ValueError(f"need 2 <= m <= S, got m={m}, S={S}")
        super().__init__(S, T)
        self.m = m

    @property
    def label(self):
        return f"{PERMUTATION}-{self.m}"

    def _n_orders(self) -> int:
        return math.perm(self.S, self.m)

    def size(self):
        # sum over ordered (I, J) of S**(free fills)
        S, m = self.S, self.m
        total = 0
        for k in range(0, m + 1):  # k = |I & J|
            n_pairs = (math.perm(S, m) * math.comb(m, k) * math.comb(S - m, m - k)
                       * math.factorial(m))
            total += n_pairs * S ** (2 * (m - k))
        return total

    def sample(self, rng):
        I = [int(v) + 1 for v in rng.permutation(self.S)[:self.m]]
        J = [int(v) + 1 for v in rng.permutation(self.S)[:self.m]]
        free = sorted(set(I) ^ set(J))
        fills = {j: int(rng.integers(1, self.S + 1)) for j in free}
        return m_permutation(I, J, fills, self.S)

    def instantiations(self):
        states = range(1, self.S + 1)
        orders = list(itertools.permutations(states, self.m))
        base = 1.0 / (len(orders) ** 2)
        for I in orders:
            for J in orders:
                free = sorted(set(I) ^ set(J))
                w = base / self.S ** len(free)
                for values in itertools.product(states, repeat=len(free)):
                    yield m_permutation(I, J, dict(zip(free, values)), self.S), w

    def neighbors(self, key, space):
        types = set(key)
        paths = [space.paths[a] for a in types]
        e1 = {(p[0], p[1]) for p in paths}
        e2 = {(p[1], p[2]) for p in paths}
        present = set(paths)
        firsts: dict[tuple[int, int], list[int]] = {}
        lasts: dict[tuple[int, int], list[int]] = {}
        for p in paths:
            firsts.setdefault((p[1], p[2]), []).append(p[0])
            lasts.setdefault((p[0], p[1]), []).append(p[2])
        m = self.m
        for I, J in _cycles(e1, e2, m):
            Iset, Jset = set(I), set(J)
            free = sorted(Iset ^ Jset)
            options = []
            for j in free:
                if j in Iset:
                    l2 = I.index(j)
                    options.append(firsts.get((j, J[(l2 - 1) % m]), []))
                else:
                    l = J.index(j)
                    options.append(lasts.get((I[l], j), []))
            for values in itertools.product(*options):
                w1, w2 = permutation_paths(I, J, dict(zip(free, values)))
                if all(p in present for p in w1):
                    yield space.replace(key, [space.index[p] for p in w1],
                                        [space.index[p] for p in w2])


def _cycles(e1: set, e2: set, m: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Sequences with (i_l, j_l) in e1 and (i_{l+1}, j_l) in e2, cyclically, of length m."""
    def extend(I, J):
        if len(I) == m:
            if (I[0], J[-1]) in e2:
                yield tuple(I), tuple(J)
            return
        j_last = J[-1]
        for (i, j) in e2:
            if j != j_last or i in I:
                continue
            for (i_, j2) in e1:
                if i_ == i and j2 not in J:
                    yield from extend(I + [i], J + [j2])

    for (i1, j1) in sorted(e1):
        yield from extend([i1], [j1])


class ExplicitFamily(Family):
    """A fixed list of moves, e.g. imported from a 4ti2 move file."""

    kind = EXTERNAL

    def __init__(self, S, T, moves: Sequence[Move]):
        super().__init__(S, T)
        for mv in moves:
            if (mv.S, mv.T) != (S, T):
                raise ShapeError(f"move shape {(mv.S, mv.T)} != {(S, T)}")
        self.moves = list(moves)
        self._index: dict[int, list[tuple[tuple[tuple[int, int], ...], tuple[int, ...], tuple[int, ...]]]] = {}
        for mv in self.moves:
            sp = mv.sparse()
            for sign in (1, -1):
                need = tuple((c, -sign * v) for c, v in sp if sign * v < 0)
                removed = tuple(c for c, n in need for _ in range(n))
                added = tuple(c for c, v in sp if sign * v > 0 for _ in range(sign * v))
                if need:
                    self._index.setdefault(need[0][0], []).append((need, removed, added))

    def size(self):
        return len(self.moves)

    def sample(self, rng):
        return self.moves[int(rng.integers(len(self.moves)))]

    def instantiations(self):
        w = 1.0 / len(self.moves) if self.moves else 0.0
        return ((mv, w) for mv in self.moves)

    def neighbors(self, key, space):
        counts = Counter(key)
        for c in counts:
            for need, removed, added in self._index.get(c, ()):
                if all(counts.get(cell, 0) >= n for cell, n in need):
                    yield space.replace(key, removed, added)


# --------------------------------------------------------------------------
# basis descriptor
# --------------------------------------------------------------------------

@dataclass(eq=False)
class MarkovBasis:
    S: int
    T: int
    families: tuple[Family, ...]
    source: str
    _space: PathSpace | None = field(default=None, repr=False)

    @property
    def kinds(self) -> list[str]:
        return [f.kind for f in self.families]

    @property
    def labels(self) -> list[str]:
        return [f.label for f in self.families]

    @property
    def space(self) -> PathSpace:
        if self._space is None:
            self._space = PathSpace(self.S, self.T)
        return self._space

    def proposal_families(self) -> list[Family]:
        return [f for f in self.families if f.size() > 0]

    def neighbors(self, key: tuple[int, ...]) -> set[tuple[int, ...]]:
        out: set[tuple[int, ...]] = set()
        for f in self.families:
            out.update(f.neighbors(key, self.space))
        out.discard(key)
        return out

    def proposal_size(self) -> int:
        return sum(f.size() for f in self.families)

    def enumerate_moves(self, max_instantiations: int = 250_000) -> list[Move]:
        """Distinct moves (up to sign) of every family, in canonical orientation."""
        if self.proposal_size() > max_instantiations:
            raise CapExceededError(
                f"basis has {self.proposal_size()} parameter tuples; cap is {max_instantiations}")
        seen: dict[tuple, Move] = {}
        for f in self.families:
            for mv, _ in f.instantiations():
                c = mv.canonical()
                seen.setdefault(tuple(c.sparse()), c)
        return [seen[k] for k in sorted(seen)]

    def summary(self) -> str:
        lines = [f"Markov basis for S={self.S}, T={self.T} ({self.source})"]
        lines += ["  " + f.describe() for f in self.families]
        return "\n".join(lines)


CapExceededError = CapExceeded


def _excluded(family: Family, exclude: Iterable[str]) -> bool:
    ex = set(exclude)
    return family.kind in ex or family.label in ex


def markov_basis(S: int, T: int, exclude: Iterable[str] = ()) -> MarkovBasis:
    """Closed-form basis for (S = 2, T >= 3) or (T = 3, any S).

    ``exclude`` drops families by kind (``"degree-one"``) or label
    (``"permutation-3"``); useful for negative controls.
    """
    exclude = tuple(exclude)
    if S < 2 or T < 3:
        raise ShapeError(f"need S >= 2 and T >= 3, got S={S}, T={T}")
    if S == 2:
        families: list[Family] = [CrossingFamily(S, T), DegreeOneFamily(S, T), TwoByTwoFamily(S, T)]
        if T >= 4:
            families.append(Type4Family(S, T))
        source = "two-state basis"
    elif T == 3:
        families = [CrossingFamily(S, T)] + [PermutationFamily(S, T, m) for m in range(2, S + 1)]
        source = "length-three basis"
    else:
        raise UnsupportedShape(
            f"no closed-form Markov basis for S={S}, T={T}; compute one externally "
            "(e.g. with 4ti2) and pass it as a move file with --moves")
    families = [f for f in families if not _excluded(f, exclude)]
    return MarkovBasis(S, T, tuple(families), source)


def basis_from_moves(moves: Sequence[Move], S: int, T: int, validate: bool = True) -> MarkovBasis:
    if validate:
        for mv in moves:
            if not is_valid_move(mv):
                raise ValueError(f"not a move of the THMC model: {mv}")
    return MarkovBasis(S, T, (ExplicitFamily(S, T, moves),), "move file")


def random_move(table: PathTable, basis: MarkovBasis, rng: np.random.Generator) -> Move:
    """Draw a proposal move: family uniformly, then its parameters uniformly."""
    if (table.S, table.T) != (basis.S, basis.T):
        raise ShapeError(f"table shape {(table.S, table.T)} != basis shape {(basis.S, basis.T)}")
    families = basis.proposal_families()
    if not families:
        raise UnsupportedShape("basis has no moves")
    move = families[int(rng.integers(len(families)))].sample(rng)
    assert is_valid_move(move), move
    return move
