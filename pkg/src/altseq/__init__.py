"""Longest alternating subsequence statistics.

Exact formulas, enumeration oracles and seeded Monte Carlo checks for
random permutations, iid finite-alphabet words and Markov words.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    StreamingLAS,
    TiesError,
    las,
    las_alphabet,
    las_bruteforce,
    las_distinct,
    local_extrema,
    rank_map,
)
from .exact import (  # noqa: E402
    Distribution,
    exact_mean_iid,
    gamma2_iid,
    osc,
    perm_mean,
    perm_variance,
)
from .markov import MarkovModel, osc_markov  # noqa: E402

__all__ = [
    "__version__",
    "StreamingLAS",
    "TiesError",
    "las",
    "las_alphabet",
    "las_bruteforce",
    "las_distinct",
    "local_extrema",
    "rank_map",
    "Distribution",
    "exact_mean_iid",
    "gamma2_iid",
    "osc",
    "perm_mean",
    "perm_variance",
    "MarkovModel",
    "osc_markov",
]
