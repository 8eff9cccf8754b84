"""Markov bases and exact goodness-of-fit tests for toric homogeneous Markov chains."""
from .basis import MarkovBasis, UnsupportedShape, basis_from_moves, markov_basis, random_move
from .configuration import build_configuration, identical_column_classes
from .core import Move, PathTable, SuffStat, suff_stat
from .fiber import check_connectivity, enumerate_fiber, exact_conditional
from .inference import asymptotic_p, chi_square, exact_p, fit_thmc_mle, run_test
from .mcmc import run_mcmc

__version__ = "0.1.0"
