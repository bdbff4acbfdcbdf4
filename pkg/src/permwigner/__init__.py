"""Wigner matrices with symmetrically permuted entries.

Submodules
----------
entries       entry laws and exact mixed moments
permutations  symmetric permutations of [N]^2 and their statistics
wigner        sampling, permuted copies, Monte-Carlo and exact trace moments
freeprob      noncrossing partitions, semicircular moments, free cumulants
traffic       test graphs, quotients, traffic states, double trees
spectra       anticommutator spectra and the symmetric Poisson law
cli           experiment driver (``permwigner`` console script)
"""

from .entries import EntrySpec, mixed_moment
from .errors import (
    AsymmetricPermutationError,
    BudgetExceededError,
    ConfigError,
    DimensionMismatchError,
    OrderExceededError,
    PermWignerError,
)
from .permutations import EntryPermutation, compose, inverse, make_named, random_symmetric, relative, stats
from .wigner import WignerMatrix, permute_entries, sample_wigner, trace_moment_exact, trace_moment_mc

__version__ = "0.1.0"

__all__ = [
    "AsymmetricPermutationError",
    "BudgetExceededError",
    "ConfigError",
    "DimensionMismatchError",
    "EntryPermutation",
    "EntrySpec",
    "OrderExceededError",
    "PermWignerError",
    "WignerMatrix",
    "compose",
    "inverse",
    "make_named",
    "mixed_moment",
    "permute_entries",
    "random_symmetric",
    "relative",
    "sample_wigner",
    "stats",
    "trace_moment_exact",
    "trace_moment_mc",
]
