"""Table-aware proposals for the fiber walk.

The table-independent proposal in :mod:`thmc.mcmc` mostly draws moves that
need paths the table does not contain.  Here the paths a move removes are
picked from the current table (each with probability proportional to its
count inside the class the move requires), spliced, and the result is
accepted with the Metropolis-Hastings ratio

    pi(y) q(y -> x) / (pi(x) q(x -> y)),    pi(x) ~ 1 / prod x(w)!

Every proposal is an involution: the removed paths of the reverse proposal
are exactly the paths added by the forward one, under a "reverse skeleton"
drawn with the same probability as the forward skeleton, so skeleton
probabilities cancel and only the path-selection probabilities enter.

Families and their skeletons:

crossing      time t in 2..T-1; first path from the whole table, second
              from the paths in the same state at t (another individual).
degree-one    one path from the table, replaced by a different path with an
              identical column of A.
two-by-two    ordered distinct times (t1, t2) and an unordered edge pair
              {ab, cd} with a != c, b != d.  Tails after t1 are exchanged
              between paths on t1:ab and t1:cd, then tails after t2 between
              paths on t2:ad and t2:cb of the intermediate table.  The
              reverse skeleton is (t2, t1) with the same edge pair.
type-4        ordered distinct block starts (t1, t2) and an ordered block
              pair from {112, 122} or {221, 211}; blocks are swapped between
              two individuals.  Reverse: the block pair reversed.
permutation   ordered index lists I, J and a direction; for every middle
              state one path is removed and its partner with the same
              middle is added (T = 3).

Each step reads one row of ``width`` uniforms, so a chain depends only on
the seed.  States and cells are 0-based inside the kernel.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numba
import numpy as np

from .basis import (CROSSING, DEGREE_ONE, PERMUTATION, TWO_BY_TWO, TYPE4, DegreeOneFamily,
                    MarkovBasis, PermutationFamily)

K_CROSSING, K_DEGREE_ONE, K_TWO_BY_TWO, K_TYPE4, K_PERMUTATION = range(5)

# blocks 112, 122, 221, 211 as base-2 codes; ordered pairs that may be swapped
_BLOCK_CODES = np.array([1, 3, 6, 4], dtype=np.int64)
_BLOCK_PAIRS = np.array([[0, 1], [1, 0], [2, 3], [3, 2]], dtype=np.int64)


@dataclass
class GuidedTables:
    S: int
    T: int
    width: int
    kinds: np.ndarray          # (F,) kind code per family
    perm_m: np.ndarray         # (F,) m for permutation families, else 0
    perm_lo: np.ndarray        # (F,) first row of the family's orders in perm_orders
    perm_hi: np.ndarray
    perm_orders: np.ndarray    # (R, S) ordered m-tuples of 0-based states, padded
    mod: np.ndarray            # mod[t] = S**(T - t)
    node_cells: np.ndarray     # (T + 1, S, S**(T-1)) cells in state i at time t
    edge_cells: np.ndarray     # (T, S, S, S**(T-2)) cells through i->j at time t
    block_cells: np.ndarray    # (T, 8, 2**(T-3)) cells with block code k starting at t (S = 2)
    mate_ptr: np.ndarray       # CSR of identical-column classmates
    mate_idx: np.ndarray
    tt_times: np.ndarray       # (n, 2) ordered distinct time pairs for 2x2 swaps
    tt_pairs: np.ndarray       # (n, 4) edge pairs (a, b, c, d), a < c, b != d
    t4_times: np.ndarray       # (n, 2) ordered distinct block starts

    def arrays(self):
        return (self.kinds, self.perm_m, self.perm_lo, self.perm_hi, self.perm_orders, self.mod,
                self.node_cells, self.edge_cells, self.block_cells, self.mate_ptr, self.mate_idx,
                self.tt_times, self.tt_pairs, self.t4_times)


def build_tables(basis: MarkovBasis) -> GuidedTables:
    S, T = basis.S, basis.T
    C = S ** T
    cells = np.arange(C)
    mod = np.array([S ** (T - t) for t in range(T + 1)], dtype=np.int64)
    state = lambda t: (cells // mod[t]) % S      # noqa: E731  (1-based t)
    node = np.zeros((T + 1, S, S ** (T - 1)), dtype=np.int64)
    edge = np.zeros((T, S, S, S ** (T - 2)), dtype=np.int64)
    for t in range(1, T + 1):
        for i in range(S):
            node[t, i] = cells[state(t) == i]
    for t in range(1, T):
        for i in range(S):
            for j in range(S):
                edge[t, i, j] = cells[(state(t) == i) & (state(t + 1) == j)]
    if S == 2:
        block = np.zeros((T, 8, 2 ** (T - 3)), dtype=np.int64)
        for t in range(1, T - 1):
            code = (cells // mod[t + 2]) % 8
            for k in range(8):
                block[t, k] = cells[code == k]
    else:
        block = np.zeros((1, 1, 1), dtype=np.int64)
    kinds, perm_m, perm_lo, perm_hi, orders = [], [], [], [], []
    mate_ptr = np.zeros(C + 1, dtype=np.int64)
    mate_idx = np.zeros(0, dtype=np.int64)
    for fam in basis.proposal_families():
        m = 0
        lo = hi = len(orders)
        if fam.kind == CROSSING:
            kinds.append(K_CROSSING)
        elif fam.kind == DEGREE_ONE:
            assert isinstance(fam, DegreeOneFamily)
            kinds.append(K_DEGREE_ONE)
            lists = [fam._mates.get(c, []) for c in range(C)]
            mate_ptr = np.concatenate([[0], np.cumsum([len(v) for v in lists])]).astype(np.int64)
            mate_idx = np.array([c for v in lists for c in v], dtype=np.int64)
        elif fam.kind == TWO_BY_TWO:
            kinds.append(K_TWO_BY_TWO)
        elif fam.kind == TYPE4:
            kinds.append(K_TYPE4)
        elif fam.kind == PERMUTATION:
            assert isinstance(fam, PermutationFamily)
            kinds.append(K_PERMUTATION)
            m = fam.m
            for p in itertools.permutations(range(S), m):
                orders.append(list(p) + [-1] * (S - m))
            hi = len(orders)
        else:
            raise ValueError(f"no table-aware proposal for family {fam.label!r}")
        perm_m.append(m)
        perm_lo.append(lo)
        perm_hi.append(hi)
    if not kinds:
        raise ValueError("basis has no moves")
    tt_times = np.array([(a, b) for a in range(1, T) for b in range(1, T) if a != b], dtype=np.int64)
    tt_pairs = np.array([(a, b, c, d) for a, c in itertools.combinations(range(S), 2)
                         for b in range(S) for d in range(S) if b != d], dtype=np.int64)
    t4 = [(a, b) for a in range(1, T - 1) for b in range(1, T - 1) if a != b]
    t4_times = np.array(t4 if t4 else [(0, 0)], dtype=np.int64)
    arr = lambda v: np.array(v, dtype=np.int64)   # noqa: E731
    return GuidedTables(
        S=S, T=T, width=max(9, 6 + 2 * S), kinds=arr(kinds), perm_m=arr(perm_m),
        perm_lo=arr(perm_lo), perm_hi=arr(perm_hi),
        perm_orders=np.array(orders if orders else [[-1] * S], dtype=np.int64),
        mod=mod, node_cells=node, edge_cells=edge, block_cells=block,
        mate_ptr=mate_ptr, mate_idx=mate_idx, tt_times=tt_times, tt_pairs=tt_pairs,
        t4_times=t4_times)


# --------------------------------------------------------------------------
# kernel
# --------------------------------------------------------------------------

@numba.njit(cache=True)
def _index(u, n):
    k = int(u * n)
    return n - 1 if k >= n else k


@numba.njit(cache=True)
def _pick(x, cells, u, exclude):
    """Cell drawn proportionally to counts (one individual of ``exclude`` held out)."""
    total = 0
    for c in cells:
        total += x[c] - (1 if c == exclude else 0)
    if total <= 0:
        return -1, 0.0
    r = int(u * total)
    if r >= total:
        r = total - 1
    for c in cells:
        w = x[c] - (1 if c == exclude else 0)
        if r < w:
            return c, np.log(w / total)
        r -= w
    return -1, 0.0


@numba.njit(cache=True)
def _logp(x, cells, chosen, exclude):
    total = 0
    for c in cells:
        total += x[c] - (1 if c == exclude else 0)
    w = x[chosen] - (1 if chosen == exclude else 0)
    return np.log(w / total)


@numba.njit(cache=True)
def _swap(a, b, m):
    ra = a % m
    rb = b % m
    return a - ra + rb, b - rb + ra


@numba.njit(cache=True)
def _apply(x, rem, add, n, logfact):
    """x -= rem[:n]; x += add[:n]; returns log pi(new) - log pi(old)."""
    dl = 0.0
    for k in range(n):
        c = rem[k]
        dl += logfact[x[c]] - logfact[x[c] - 1]
        x[c] -= 1
    for k in range(n):
        c = add[k]
        dl += logfact[x[c]] - logfact[x[c] + 1]
        x[c] += 1
    return dl


@numba.njit(cache=True)
def _revert(x, rem, add, n):
    for k in range(n):
        x[rem[k]] += 1
    for k in range(n):
        x[add[k]] -= 1


@numba.njit(cache=True)
def _propose(x, u, logfact, S, T, kinds, perm_m, perm_lo, perm_hi, perm_orders, mod,
             node_cells, edge_cells, block_cells, mate_ptr, mate_idx, tt_times, tt_pairs,
             t4_times, all_cells, rem, add, cls):
    """Turn x into a proposal in place.

    Returns (n changed paths, log pi ratio, log q forward, log q reverse);
    n = -1 when the proposal is infeasible (x untouched).
    """
    f = _index(u[0], kinds.shape[0])
    kind = kinds[f]
    if kind == 0:                                   # crossing
        t = 2 + _index(u[1], T - 2)
        a, l1 = _pick(x, all_cells, u[2], -1)
        st = (a // mod[t]) % S
        cells = node_cells[t, st]
        b, l2 = _pick(x, cells, u[3], a)
        if b < 0:
            return -1, 0.0, 0.0, 0.0
        na, nb = _swap(a, b, mod[t])
        rem[0], rem[1], add[0], add[1] = a, b, na, nb
        dl = _apply(x, rem, add, 2, logfact)
        lr = _logp(x, all_cells, na, -1) + _logp(x, cells, nb, na)
        return 2, dl, l1 + l2, lr
    if kind == 1:                                   # degree-one
        a, l1 = _pick(x, all_cells, u[1], -1)
        lo, hi = mate_ptr[a], mate_ptr[a + 1]
        if hi == lo:
            return -1, 0.0, 0.0, 0.0
        b = mate_idx[lo + _index(u[2], hi - lo)]
        rem[0], add[0] = a, b
        dl = _apply(x, rem, add, 1, logfact)
        return 1, dl, l1, _logp(x, all_cells, b, -1)
    if kind == 2:                                   # two-by-two
        k = _index(u[1], tt_times.shape[0])
        t1, t2 = tt_times[k, 0], tt_times[k, 1]
        k = _index(u[2], tt_pairs.shape[0])
        a, b, c, d = tt_pairs[k, 0], tt_pairs[k, 1], tt_pairs[k, 2], tt_pairs[k, 3]
        p1, l1 = _pick(x, edge_cells[t1, a, b], u[3], -1)
        p2, l2 = _pick(x, edge_cells[t1, c, d], u[4], -1)
        if p1 < 0 or p2 < 0:
            return -1, 0.0, 0.0, 0.0
        n1, n2 = _swap(p1, p2, mod[t1])
        rem[0], rem[1], add[0], add[1] = p1, p2, n1, n2
        dl = _apply(x, rem, add, 2, logfact)
        lr = _logp(x, edge_cells[t1, a, d], n1, -1) + _logp(x, edge_cells[t1, c, b], n2, -1)
        p3, l3 = _pick(x, edge_cells[t2, a, d], u[5], -1)
        p4, l4 = _pick(x, edge_cells[t2, c, b], u[6], -1)
        if p3 < 0 or p4 < 0:
            _revert(x, rem, add, 2)
            return -1, 0.0, 0.0, 0.0
        n3, n4 = _swap(p3, p4, mod[t2])
        rem[2], rem[3], add[2], add[3] = p3, p4, n3, n4
        dl += _apply(x, rem[2:], add[2:], 2, logfact)
        lr += _logp(x, edge_cells[t2, a, b], n3, -1) + _logp(x, edge_cells[t2, c, d], n4, -1)
        return 4, dl, l1 + l2 + l3 + l4, lr
    if kind == 3:                                   # type-4
        k = _index(u[1], t4_times.shape[0])
        t1, t2 = t4_times[k, 0], t4_times[k, 1]
        k = _index(u[2], 4)
        k1, k2 = _BLOCK_CODES[_BLOCK_PAIRS[k, 0]], _BLOCK_CODES[_BLOCK_PAIRS[k, 1]]
        a, l1 = _pick(x, block_cells[t1, k1], u[3], -1)
        if a < 0:
            return -1, 0.0, 0.0, 0.0
        b, l2 = _pick(x, block_cells[t2, k2], u[4], a)
        if b < 0:
            return -1, 0.0, 0.0, 0.0
        na = a + (k2 - k1) * mod[t1 + 2]
        nb = b + (k1 - k2) * mod[t2 + 2]
        rem[0], rem[1], add[0], add[1] = a, b, na, nb
        dl = _apply(x, rem, add, 2, logfact)
        lr = _logp(x, block_cells[t1, k2], na, -1) + _logp(x, block_cells[t2, k1], nb, na)
        return 2, dl, l1 + l2, lr
    # permutation, T = 3
    m = perm_m[f]
    lo, hi = perm_lo[f], perm_hi[f]
    I = perm_orders[lo + _index(u[1], hi - lo)]
    J = perm_orders[lo + _index(u[2], hi - lo)]
    forward = u[3] < 0.5
    pos_i = np.full(S, -1)
    pos_j = np.full(S, -1)
    for l in range(m):
        pos_i[I[l]] = l
        pos_j[J[l]] = l
    n = 0
    lq = 0.0
    # plan[n] = (j, removed first, removed last, added first, added last); -1 = free
    plan = np.empty((2 * m, 5), dtype=np.int64)
    for j in range(S):
        li, lj = pos_i[j], pos_j[j]
        if li < 0 and lj < 0:
            continue
        if li >= 0 and lj >= 0:
            w1f, w1l = I[lj], J[(li - 1) % m]
            w2f, w2l = I[(lj + 1) % m], J[li]
        elif li >= 0:
            w1f, w1l = -1, J[(li - 1) % m]
            w2f, w2l = -1, J[li]
        else:
            w1f, w1l = I[lj], -1
            w2f, w2l = I[(lj + 1) % m], -1
        if forward:
            plan[n, 0], plan[n, 1], plan[n, 2], plan[n, 3], plan[n, 4] = j, w2f, w2l, w1f, w1l
        else:
            plan[n, 0], plan[n, 1], plan[n, 2], plan[n, 3], plan[n, 4] = j, w1f, w1l, w2f, w2l
        n += 1
    for k in range(n):
        j = plan[k, 0]
        nc = _fill_class(cls, S, j, plan[k, 1], plan[k, 2])
        c, l = _pick(x, cls[:nc], u[4 + k], -1)
        if c < 0:
            return -1, 0.0, 0.0, 0.0
        first = plan[k, 3] if plan[k, 3] >= 0 else c // (S * S)
        last = plan[k, 4] if plan[k, 4] >= 0 else c % S
        rem[k] = c
        add[k] = first * S * S + j * S + last
        lq += l
    dl = _apply(x, rem, add, n, logfact)
    lr = 0.0
    for k in range(n):
        nc = _fill_class(cls, S, plan[k, 0], plan[k, 3], plan[k, 4])
        lr += _logp(x, cls[:nc], add[k], -1)
    return n, dl, lq, lr


@numba.njit(cache=True)
def _fill_class(cls, S, j, first, last):
    n = 0
    for f in range(S):
        if first >= 0 and f != first:
            continue
        for k in range(S):
            if last >= 0 and k != last:
                continue
            cls[n] = f * S * S + j * S + k
            n += 1
    return n


@numba.njit(cache=True, nogil=True)
def guided_walk(x, U, logfact, record_from, out, counters, S, T, kinds, perm_m, perm_lo,
                perm_hi, perm_orders, mod, node_cells, edge_cells, block_cells, mate_ptr,
                mate_idx, tt_times, tt_pairs, t4_times):
    all_cells = np.arange(x.shape[0])
    rem = np.empty(2 * S + 4, dtype=np.int64)
    add = np.empty(2 * S + 4, dtype=np.int64)
    cls = np.empty(S * S, dtype=np.int64)
    last = U.shape[1] - 1
    for step in range(U.shape[0]):
        u = U[step]
        n, dl, lq, lr = _propose(x, u, logfact, S, T, kinds, perm_m, perm_lo, perm_hi,
                                 perm_orders, mod, node_cells, edge_cells, block_cells,
                                 mate_ptr, mate_idx, tt_times, tt_pairs, t4_times, all_cells,
                                 rem, add, cls)
        if n < 0:
            counters[1] += 1
        elif np.log1p(-u[last]) < dl + lr - lq:
            counters[0] += 1
        else:
            _revert(x, rem, add, n)
        if step >= record_from:
            out[step - record_from, :] = x
