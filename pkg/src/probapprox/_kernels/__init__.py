"""Hot loops: PMF tables, tail sums and exactly rounded weighted sums.

The compiled extension is used when it imports; otherwise the pure-Python
twin takes over.  Set ``PROBAPPROX_PURE_PYTHON=1`` to force the fallback.
Both produce bit-identical results.
"""

import os

from . import _pykernels as pure

try:
    if os.environ.get("PROBAPPROX_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

active = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "python"

BINOMIAL = pure.BINOMIAL
POISSON = pure.POISSON
PASCAL = pure.PASCAL

log_pmf = active.log_pmf
pmf = active.pmf
pmf_array = active.pmf_array
tail_prob = active.tail_prob
tail_terms = active.tail_terms
weighted_sum = active.weighted_sum
exact_dot = active.exact_dot
mode = active.mode

__all__ = [
    "BACKEND",
    "BINOMIAL",
    "POISSON",
    "PASCAL",
    "compiled",
    "pure",
    "log_pmf",
    "pmf",
    "pmf_array",
    "tail_prob",
    "tail_terms",
    "weighted_sum",
    "exact_dot",
    "mode",
]
