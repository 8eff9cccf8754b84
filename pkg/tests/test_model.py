import numpy as np
import pytest

from thmc.core import PathTable, slice_transition_counts
from thmc.model import (cell_probabilities, homogeneous, nonhomogeneous, path_probability,
                        simulate_paths, toric)


def test_degenerate_chains():
    ident = homogeneous([1, 0], np.eye(2))
    assert simulate_paths(ident, 5, 4, seed=0) == PathTable({(1, 1, 1, 1): 5}, 2, 4)
    absorb = homogeneous([0, 1], [[1, 0], [1, 0]])
    assert simulate_paths(absorb, 7, 3, seed=1) == PathTable({(2, 1, 1): 7}, 2, 3)


def test_deterministic_per_seed():
    p = homogeneous([0.3, 0.7], [[0.6, 0.4], [0.2, 0.8]])
    assert simulate_paths(p, 50, 5, seed=3) == simulate_paths(p, 50, 5, seed=3)


def test_invalid_params():
    with pytest.raises(ValueError):
        homogeneous([0.5, 0.6], np.eye(2))
    with pytest.raises(ValueError):
        homogeneous([1, 0], [[0.5, 0.6], [0, 1]])
    with pytest.raises(ValueError):
        toric([1, -1], np.ones((2, 2)))


def test_transition_frequencies_lln():
    P = np.array([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.25, 0.25, 0.5]])
    pi = np.array([0.2, 0.5, 0.3])
    N, T = 10_000, 4
    x = simulate_paths(homogeneous(pi, P), N, T, seed=11)
    counts = sum(slice_transition_counts(x, t) for t in range(1, T)).astype(float)
    rows = counts.sum(axis=1, keepdims=True)
    est = counts / rows
    sd = np.sqrt(P * (1 - P) / rows)
    assert (np.abs(est - P) < 3 * sd + 1e-12).all()


def test_toric_matches_homogeneous_when_stochastic():
    P = np.array([[0.7, 0.3], [0.4, 0.6]])
    pi = np.array([0.5, 0.5])
    a = cell_probabilities(homogeneous(pi, P), 4)
    b = cell_probabilities(toric(pi, P), 4)
    assert np.allclose(a, b)
    assert a.sum() == pytest.approx(1.0)


def test_nonhomogeneous_path_probability():
    P1 = np.array([[0.9, 0.1], [0.5, 0.5]])
    P2 = np.array([[0.2, 0.8], [0.3, 0.7]])
    m = nonhomogeneous([0.4, 0.6], [P1, P2])
    assert path_probability(m, (1, 2, 1)) == pytest.approx(0.4 * 0.1 * 0.3)
    with pytest.raises(ValueError):
        simulate_paths(m, 3, 4, seed=0)
