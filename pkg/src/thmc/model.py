"""Chain models: homogeneous, toric homogeneous and non-homogeneous.

Path probabilities:

* homogeneous:      pi[s1] * p[s1, s2] * ... * p[s_{T-1}, s_T]
* toric:            c * gamma[s1] * beta[s1, s2] * ... (c normalises over S**T paths)
* nonhomogeneous:   pi[s1] * p_1[s1, s2] * ... * p_{T-1}[s_{T-1}, s_T]
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import PathTable, ShapeError, all_paths, check_path

Kind = Literal["homogeneous", "toric", "nonhomogeneous"]
_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ModelParams:
    kind: Kind
    initial: np.ndarray          # pi (homogeneous / nonhomogeneous) or gamma (toric)
    transition: np.ndarray       # (S, S), or (T-1, S, S) for nonhomogeneous

    def __post_init__(self):
        init = np.asarray(self.initial, dtype=float)
        trans = np.asarray(self.transition, dtype=float)
        object.__setattr__(self, "initial", init)
        object.__setattr__(self, "transition", trans)
        S = init.shape[0]
        if init.ndim != 1 or S < 2:
            raise ValueError(f"initial weights must be a vector of length >= 2, got {init.shape}")
        if self.kind == "nonhomogeneous":
            if trans.ndim != 3 or trans.shape[1:] != (S, S):
                raise ValueError(f"nonhomogeneous transitions need shape (T-1, {S}, {S})")
        elif trans.shape != (S, S):
            raise ValueError(f"transition matrix needs shape ({S}, {S}), got {trans.shape}")
        if self.kind not in ("homogeneous", "toric", "nonhomogeneous"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if (init < 0).any() or (trans < 0).any():
            raise ValueError("model parameters must be nonnegative")
        if self.kind != "toric":
            if abs(init.sum() - 1) > _TOL:
                raise ValueError(f"initial distribution sums to {init.sum()}, not 1")
            rows = trans.sum(axis=-1)
            if np.abs(rows - 1).max() > _TOL:
                raise ValueError("transition matrix rows must sum to 1")

    @property
    def S(self) -> int:
        return self.initial.shape[0]


def homogeneous(initial, transition) -> ModelParams:
    return ModelParams("homogeneous", np.asarray(initial), np.asarray(transition))


def toric(gamma, beta) -> ModelParams:
    return ModelParams("toric", np.asarray(gamma), np.asarray(beta))


def nonhomogeneous(initial, transitions) -> ModelParams:
    return ModelParams("nonhomogeneous", np.asarray(initial), np.asarray(transitions))


def _step_matrix(params: ModelParams, t: int) -> np.ndarray:
    return params.transition[t] if params.kind == "nonhomogeneous" else params.transition


def _check_length(params: ModelParams, T: int) -> None:
    if T < 3:
        raise ShapeError(f"need T >= 3, got {T}")
    if params.kind == "nonhomogeneous" and params.transition.shape[0] != T - 1:
        raise ShapeError(f"nonhomogeneous model has {params.transition.shape[0]} steps, T={T}")


def path_probability(params: ModelParams, path) -> float:
    """Unnormalised weight for toric models, probability otherwise."""
    p = check_path(path, params.S)
    _check_length(params, len(p))
    w = params.initial[p[0] - 1]
    for t, (a, b) in enumerate(zip(p, p[1:])):
        w *= _step_matrix(params, t)[a - 1, b - 1]
    return float(w)


def cell_probabilities(params: ModelParams, T: int) -> np.ndarray:
    """Probabilities of all S**T paths in lexicographic order (toric weights normalised)."""
    _check_length(params, T)
    probs = np.array([path_probability(params, p) for p in all_paths(params.S, T)])
    total = probs.sum()
    if total <= 0:
        raise ValueError("model assigns zero probability to every path")
    return probs / total


def simulate_paths(params: ModelParams, N: int, T: int, seed: int) -> PathTable:
    """Draw N independent paths; deterministic given the seed."""
    if N < 0:
        raise ValueError(f"N must be nonnegative, got {N}")
    _check_length(params, T)
    rng = np.random.default_rng(seed)
    S = params.S
    if params.kind == "toric":
        probs = cell_probabilities(params, T)
        cells = rng.choice(len(probs), size=N, p=probs)
        counts = np.bincount(cells, minlength=len(probs))
        return PathTable.from_dense(counts, S, T)
    states = np.empty((N, T), dtype=np.int64)
    states[:, 0] = _categorical(rng, np.broadcast_to(params.initial, (N, S)))
    for t in range(T - 1):
        rows = _step_matrix(params, t)[states[:, t]]
        states[:, t + 1] = _categorical(rng, rows)
    return PathTable.from_paths((tuple(r) for r in (states + 1).tolist()), S=S, T=T)


def _categorical(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(probs.shape[0])
    return (u[:, None] >= cum).sum(axis=1)
