"""Binomial, Poisson and Pascal mass functions behind the operators.

All three families are indexed the same way: ``PmfSpec(kind, n, x)`` describes
the law of an integer random variable ``K`` with ``E[K] = n*x``.  Mass values
are computed in log space (see ``_kernels``) so ``n`` in the millions is fine.
"""

from __future__ import annotations

import enum
import math
import numbers
from dataclasses import dataclass

from . import _kernels
from .errors import DomainError


class PmfKind(enum.Enum):
    BINOMIAL = "binomial"
    POISSON = "poisson"
    PASCAL = "pascal"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]

    @property
    def finite_support(self) -> bool:
        return self is PmfKind.BINOMIAL

    @classmethod
    def parse(cls, name: str) -> "PmfKind":
        """Accept family names and operator names (``bernstein``, ``szasz``, ``baskakov``)."""
        key = name.strip().lower()
        key = _ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown distribution kind {name!r}") from None


_KIND_CODES = {
    PmfKind.BINOMIAL: _kernels.BINOMIAL,
    PmfKind.POISSON: _kernels.POISSON,
    PmfKind.PASCAL: _kernels.PASCAL,
}

_ALIASES = {
    "bernstein": "binomial",
    "szasz": "poisson",
    "szasz-mirakjan": "poisson",
    "baskakov": "pascal",
    "negative-binomial": "pascal",
}


def _check_int(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


@dataclass(frozen=True)
class PmfSpec:
    """Distribution of ``K`` for approximation order ``n`` at point ``x``."""

    kind: PmfKind
    n: int
    x: float

    def __post_init__(self):
        if not isinstance(self.kind, PmfKind):
            object.__setattr__(self, "kind", PmfKind.parse(str(self.kind)))
        object.__setattr__(self, "n", _check_int("n", self.n, 1))
        x = float(self.x)
        if not math.isfinite(x) or x < 0.0:
            raise DomainError(f"x must be a finite nonnegative real, got {self.x!r}")
        if self.kind is PmfKind.BINOMIAL and x > 1.0:
            raise DomainError(f"binomial x must lie in [0, 1], got {x!r}")
        object.__setattr__(self, "x", x)


def log_pmf(spec: PmfSpec, k: int) -> float:
    """``ln P[K = k]``; ``-inf`` outside the support."""
    k = _check_int("k", k, 0)
    return _kernels.log_pmf(spec.kind.code, spec.n, spec.x, k)


def pmf(spec: PmfSpec, k: int) -> float:
    k = _check_int("k", k, 0)
    return _kernels.pmf(spec.kind.code, spec.n, spec.x, k)


def pmf_table(spec: PmfSpec, upto: int):
    """Masses for ``k = 0..upto`` as a float64 array."""
    upto = _check_int("upto", upto, 0)
    return _kernels.pmf_array(spec.kind.code, spec.n, spec.x, upto)


def mean(spec: PmfSpec) -> float:
    return spec.n * spec.x


def variance(spec: PmfSpec) -> float:
    nx = spec.n * spec.x
    if spec.kind is PmfKind.BINOMIAL:
        return nx * (1.0 - spec.x)
    if spec.kind is PmfKind.POISSON:
        return nx
    return nx * (1.0 + spec.x)


def mode(spec: PmfSpec) -> int:
    return _kernels.mode(spec.kind.code, spec.n, spec.x)


def tail_prob(spec: PmfSpec, m: int) -> float:
    """``P[K > m]``.

    Summed directly over the upper terms with exact rounding rather than as
    ``1 - P[K <= m]``, so tiny tails keep their relative accuracy.  Masses
    below ~1e-30 are not resolved.
    """
    m = _check_int("m", m, 0)
    return _kernels.tail_prob(spec.kind.code, spec.n, spec.x, m)


def support_cutoff(spec: PmfSpec, eps: float) -> int:
    """Smallest ``M >= ceil(mean)`` with ``P[K > M] <= eps``.

    The upper masses are collected once and the answer is bisected over exact
    suffix sums, which equal ``tail_prob`` term for term.  Below the tail floor
    a doubling search on ``tail_prob`` takes over.
    """
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    start = math.ceil(mean(spec))
    if spec.kind is PmfKind.BINOMIAL:
        start = min(start, spec.n)
    if tail_prob(spec, start) <= eps:
        return start
    terms = _kernels.tail_terms(spec.kind.code, spec.n, spec.x, start).tolist()
    if terms and terms[-1] <= eps:
        lo, hi = 0, len(terms) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if min(1.0, math.fsum(terms[mid:])) <= eps:
                hi = mid
            else:
                lo = mid
        return start + hi
    lo, step = start, 1
    hi = start + step
    if spec.kind is PmfKind.BINOMIAL:
        hi = min(hi, spec.n)
    while tail_prob(spec, hi) > eps:
        lo = hi
        step *= 2
        hi = start + step
        if spec.kind is PmfKind.BINOMIAL:
            hi = min(hi, spec.n)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_prob(spec, mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi
