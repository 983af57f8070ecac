"""Probabilistic approximation operators and their Hoelder-class error bounds."""

from ._kernels import BACKEND
from .distributions import PmfKind, PmfSpec

__version__ = "0.1.0"

__all__ = ["BACKEND", "PmfKind", "PmfSpec", "__version__"]
