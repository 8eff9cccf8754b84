"""Walks on a fiber driven by Markov-basis moves.

Target: p(x | b) proportional to 1 / prod_w x(w)!.  Three kernels share it:

metropolis  draw a move z and a sign independently of x, propose x + sign z,
            accept with probability min(1, prod x! / prod x'!).  Infeasible
            proposals and rejections repeat the current state.
line        draw z the same way and resample k on the line x + k z from its
            exact conditional.
guided      table-aware proposals with a Hastings correction (see guided.py).

Moves are packed into CSR arrays (``ptr``, ``idx``, ``val``) and the inner
loops run in numba.  Random draws are made in numpy, chunk by chunk, so a
chain depends only on its seed.
"""
from __future__ import annotations

import math
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numba
import numpy as np
from scipy.special import gammaln

from .basis import EXTERNAL, Family, MarkovBasis, UnsupportedShape
from .guided import GuidedTables, build_tables, guided_walk
from .core import Move, PathTable, ShapeError

DEFAULT_MAX_INSTANTIATIONS = 250_000
CHUNK = 1 << 15
KERNELS = ("guided", "metropolis", "line")


@numba.njit(cache=True, nogil=True)
def _walk(x, ptr, idx, val, move_ids, signs, logu, logfact, record_from, out, counters):
    for step in range(move_ids.shape[0]):
        k = move_ids[step]
        s = signs[step]
        ok = True
        dl = 0.0
        for q in range(ptr[k], ptr[k + 1]):
            c = idx[q]
            nv = x[c] + s * val[q]
            if nv < 0:
                ok = False
                break
            dl += logfact[x[c]] - logfact[nv]
        if not ok:
            counters[1] += 1
        elif logu[step] < dl:
            for q in range(ptr[k], ptr[k + 1]):
                x[idx[q]] += s * val[q]
            counters[0] += 1
        if step >= record_from:
            out[step - record_from, :] = x


@numba.njit(cache=True, nogil=True)
def _walk_line(x, ptr, idx, val, move_ids, u, logfact, record_from, out, counters, buf):
    """Gibbs step along the line x + k z: k drawn from the exact conditional."""
    for step in range(move_ids.shape[0]):
        k = move_ids[step]
        lo = -(1 << 40)
        hi = 1 << 40
        for q in range(ptr[k], ptr[k + 1]):
            c = idx[q]
            v = val[q]
            if v > 0:
                lo = max(lo, -(x[c] // v))
            else:
                hi = min(hi, x[c] // (-v))
        n = hi - lo + 1
        if n > 1:
            top = -1e300
            for r in range(n):
                s = 0.0
                for q in range(ptr[k], ptr[k + 1]):
                    s -= logfact[x[idx[q]] + (lo + r) * val[q]]
                buf[r] = s
                top = max(top, s)
            total = 0.0
            for r in range(n):
                buf[r] = np.exp(buf[r] - top)
                total += buf[r]
            target = u[step] * total
            pick = n - 1
            acc = 0.0
            for r in range(n):
                acc += buf[r]
                if target < acc:
                    pick = r
                    break
            shift = lo + pick
            if shift != 0:
                for q in range(ptr[k], ptr[k + 1]):
                    x[idx[q]] += shift * val[q]
                counters[0] += 1
        else:
            counters[1] += 1
        if step >= record_from:
            out[step - record_from, :] = x


def metropolis_ratio(x: PathTable, y: PathTable) -> Fraction:
    """pi(y) / pi(x) = prod x(w)! / prod y(w)!, exactly; the kernels use its log."""
    num = den = 1
    for _, c in x.items():
        num *= math.factorial(c)
    for _, c in y.items():
        den *= math.factorial(c)
    return Fraction(num, den)


def _pack(moves: list[Move]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ptr = np.zeros(len(moves) + 1, dtype=np.int64)
    idx_parts, val_parts = [], []
    for k, mv in enumerate(moves):
        sp = mv.sparse()
        ptr[k + 1] = ptr[k] + len(sp)
        idx_parts.extend(c for c, _ in sp)
        val_parts.extend(v for _, v in sp)
    return ptr, np.array(idx_parts, dtype=np.int64), np.array(val_parts, dtype=np.int64)


class _Proposals:
    """Source of (CSR arrays, move ids) for one chunk of steps."""

    def __init__(self, families: list[Family], max_instantiations: int):
        if not families:
            raise UnsupportedShape("basis has no moves")
        self.families = families
        self.max_abs = 0
        total = sum(f.size() for f in families)
        self.enumerated = total <= max_instantiations
        if self.enumerated:
            moves: list[Move] = []
            self.offsets, self.probs = [], []
            for f in families:
                self.offsets.append(len(moves))
                ws = []
                for mv, w in f.instantiations():
                    moves.append(mv)
                    ws.append(w)
                p = np.array(ws, dtype=float)
                self.probs.append(p / p.sum())
            self.csr = _pack(moves)
            self.max_abs = int(np.abs(self.csr[2]).max())

    def draw(self, rng: np.random.Generator, n: int):
        fam = rng.integers(len(self.families), size=n)
        if self.enumerated:
            ids = np.empty(n, dtype=np.int64)
            for f in range(len(self.families)):
                sel = np.flatnonzero(fam == f)
                p = self.probs[f]
                ids[sel] = self.offsets[f] + rng.choice(len(p), size=len(sel), p=p)
            csr = self.csr
        else:
            moves = [self.families[f].sample(rng) for f in fam.tolist()]
            csr = _pack(moves)
            self.max_abs = max(self.max_abs, int(np.abs(csr[2]).max()))
            ids = np.arange(n, dtype=np.int64)
        return csr, ids


@dataclass
class ChainResult:
    values: np.ndarray                 # statistic after each post-burn-in step
    n_burnin: int
    n_samples: int
    accepted: int
    infeasible: int
    final: PathTable
    visits: dict[tuple[int, ...], int] | None = None   # dense state -> count
    enumerated: bool = True
    n_chains: int = 1
    kernel: str = "guided"

    @property
    def acceptance_rate(self) -> float:
        steps = self.n_burnin * self.n_chains + self.n_samples
        return self.accepted / steps if steps else 0.0


def _evaluate(statistic, states: np.ndarray, S: int, T: int) -> np.ndarray:
    batch = getattr(statistic, "batch", None)
    if batch is not None:
        return np.asarray(batch(states), dtype=float)
    return np.array([float(statistic(PathTable.from_dense(row, S, T))) for row in states])


def _count_rows(out: np.ndarray, visits: dict) -> None:
    # rejected steps repeat the previous row, so collapse runs before hashing
    change = np.ones(out.shape[0], dtype=bool)
    change[1:] = (out[1:] != out[:-1]).any(axis=1)
    starts = np.flatnonzero(change)
    runs = np.diff(np.append(starts, out.shape[0]))
    rows = np.ascontiguousarray(out[starts])
    keys = rows.view(np.dtype((np.void, rows.shape[1] * rows.itemsize))).ravel()
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    counts = np.bincount(inverse.ravel(), weights=runs).astype(np.int64)
    for r, c in zip(map(tuple, rows[first].tolist()), counts.tolist()):
        visits[r] = visits.get(r, 0) + c


def _run_chain(start: PathTable, proposals: _Proposals, n_burnin: int, n_samples: int,
               rng: np.random.Generator, statistic, record_visits: bool, kernel: str):
    S, T = start.S, start.T
    x = start.dense().astype(np.int64)
    N = start.N
    counters = np.zeros(2, dtype=np.int64)
    values = np.empty(n_samples, dtype=float)
    visits: dict[tuple[int, ...], int] | None = {} if record_visits else None
    logfact = None
    buf = None
    done = 0
    total = n_burnin + n_samples
    while done < total:
        n = min(CHUNK, total - done)
        csr, ids = proposals.draw(rng, n)
        size = N + max(proposals.max_abs, 1) + 1
        if logfact is None or logfact.shape[0] < size:
            logfact = gammaln(np.arange(size, dtype=float) + 1.0)
        record_from = min(n, max(0, n_burnin - done))
        out = np.empty((n - record_from, x.shape[0]), dtype=np.int64)
        if kernel == "metropolis":
            signs = rng.integers(0, 2, size=n, dtype=np.int64) * 2 - 1
            logu = np.log1p(-rng.random(n))
            _walk(x, csr[0], csr[1], csr[2], ids, signs, logu, logfact, record_from, out, counters)
        else:
            if buf is None:
                buf = np.empty(2 * N + 3)
            _walk_line(x, csr[0], csr[1], csr[2], ids, rng.random(n), logfact, record_from,
                       out, counters, buf)
        if out.shape[0]:
            pos = done + record_from - n_burnin
            if statistic is not None:
                values[pos:pos + out.shape[0]] = _evaluate(statistic, out, S, T)
            if visits is not None:
                _count_rows(out, visits)
        done += n
    return values, int(counters[0]), int(counters[1]), PathTable.from_dense(x, S, T), visits


def _run_guided(start: PathTable, tables: GuidedTables, n_burnin: int, n_samples: int,
                rng: np.random.Generator, statistic, record_visits: bool):
    S, T = start.S, start.T
    x = start.dense().astype(np.int64)
    logfact = gammaln(np.arange(start.N + 3, dtype=float) + 1.0)
    counters = np.zeros(2, dtype=np.int64)
    values = np.empty(n_samples, dtype=float)
    visits: dict[tuple[int, ...], int] | None = {} if record_visits else None
    arrays = tables.arrays()
    done = 0
    total = n_burnin + n_samples
    while done < total:
        n = min(CHUNK, total - done)
        U = rng.random((n, tables.width))
        record_from = min(n, max(0, n_burnin - done))
        out = np.empty((n - record_from, x.shape[0]), dtype=np.int64)
        guided_walk(x, U, logfact, record_from, out, counters, S, T, *arrays)
        if out.shape[0]:
            pos = done + record_from - n_burnin
            if statistic is not None:
                values[pos:pos + out.shape[0]] = _evaluate(statistic, out, S, T)
            if visits is not None:
                _count_rows(out, visits)
        done += n
    return values, int(counters[0]), int(counters[1]), PathTable.from_dense(x, S, T), visits


_TABLES: "weakref.WeakKeyDictionary[MarkovBasis, GuidedTables]" = weakref.WeakKeyDictionary()
_PROPOSALS: "weakref.WeakKeyDictionary[MarkovBasis, dict]" = weakref.WeakKeyDictionary()


def _guided_tables(basis: MarkovBasis) -> GuidedTables:
    if basis not in _TABLES:
        _TABLES[basis] = build_tables(basis)
    return _TABLES[basis]


def _proposals(basis: MarkovBasis, cap: int) -> "_Proposals":
    per = _PROPOSALS.setdefault(basis, {})
    if cap not in per:
        per[cap] = _Proposals(basis.proposal_families(), cap)
    return per[cap]


def _merge_visits(parts):
    out: dict[tuple[int, ...], int] = {}
    for part in parts:
        for k, v in part.items():
            out[k] = out.get(k, 0) + v
    return out


def run_mcmc(start: PathTable, basis: MarkovBasis, n_burnin: int, n_samples: int, seed: int,
             statistic: Callable[[PathTable], float] | None = None, *, threads: int = 1,
             record_visits: bool = False, kernel: str = "guided",
             max_instantiations: int = DEFAULT_MAX_INSTANTIATIONS) -> ChainResult:
    """Run the walk from ``start``.

    ``kernel="guided"`` (default) picks the paths a move removes from the
    current table and corrects for that in the acceptance ratio, see
    :mod:`thmc.guided`; bases read from a move file fall back to metropolis.
    ``kernel="metropolis"`` takes +-1 steps along the drawn move;
    ``kernel="line"`` resamples the multiple k of the drawn move from its
    exact conditional on the line x + k z (same target, faster mixing).

    With ``threads > 1`` the samples are split over that many independent
    chains (seeds spawned from ``seed``), each with the full burn-in; the
    result is deterministic for a given (seed, threads) pair.
    """
    if (start.S, start.T) != (basis.S, basis.T):
        raise ShapeError(f"table shape {(start.S, start.T)} != basis shape {(basis.S, basis.T)}")
    if n_burnin < 0 or n_samples < 0:
        raise ValueError("burn-in and sample counts must be nonnegative")
    if seed is None:
        raise ValueError("a seed is required")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {', '.join(KERNELS)}")
    guided = kernel == "guided" and all(f.kind != EXTERNAL for f in basis.families)
    if guided:
        tables = _guided_tables(basis)
        enumerated = False
        parallel = True
    else:
        proposals = _proposals(basis, max_instantiations)
        enumerated = proposals.enumerated
        parallel = enumerated
        if kernel == "guided":
            kernel = "metropolis"     # explicit move lists have no table-aware variant
    if threads == 1:
        rngs = [np.random.default_rng(seed)]
        shares = [n_samples]
    else:
        rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(threads)]
        shares = [n_samples // threads + (i < n_samples % threads) for i in range(threads)]

    def job(i):
        if guided:
            return _run_guided(start, tables, n_burnin, shares[i], rngs[i], statistic,
                               record_visits)
        return _run_chain(start, proposals, n_burnin, shares[i], rngs[i], statistic,
                          record_visits, kernel)

    if threads == 1:
        parts = [job(0)]
    else:
        if not parallel:
            # proposals are drawn in Python under the GIL, so threads would not help
            parts = [job(i) for i in range(threads)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(job, range(threads)))
    values = np.concatenate([p[0] for p in parts])
    visits = _merge_visits(p[4] for p in parts) if record_visits else None
    return ChainResult(values=values, n_burnin=n_burnin, n_samples=n_samples,
                       accepted=sum(p[1] for p in parts), infeasible=sum(p[2] for p in parts),
                       final=parts[-1][3], visits=visits, enumerated=enumerated, kernel=kernel,
                       n_chains=threads)
