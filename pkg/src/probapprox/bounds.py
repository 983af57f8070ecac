"""Closed-form error bounds and truncation planners.

Every approximation bound reduces to one formula,

    |f(x) - S_n(f; x)| <= (L / n^alpha) * Var[K]^(alpha/2) / (gamma + x)^beta,

so the per-operator helpers only choose ``Var[K]`` and delegate; that keeps
them bitwise equal to ``general_bound``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import PmfKind, PmfSpec, mean, variance
from .errors import BoundMisuseError, DomainError
from .funcspec import HoelderSpec, TailSpec


@dataclass(frozen=True)
class BoundResult:
    value: float
    certified: bool

    def __post_init__(self):
        if not self.value >= 0.0:
            raise ValueError(f"bound value must be >= 0, got {self.value!r}")
        if self.value == math.inf and self.certified:
            raise ValueError("an infinite bound cannot be certified")


def general_bound(h: HoelderSpec, varK: float, n: int, x: float) -> BoundResult:
    if varK < 0.0:
        raise DomainError(f"variance must be >= 0, got {varK!r}")
    if x < 0.0:
        raise DomainError(f"x must be >= 0, got {x!r}")
    if x == 0.0 and h.gamma == 0.0 and h.beta > 0.0:
        # the weight (gamma + x)^-beta is singular at the origin
        return BoundResult(math.inf, False)
    numerator = (h.L / n**h.alpha) * varK ** (h.alpha / 2.0)
    if numerator == 0.0:
        return BoundResult(0.0, True)
    weight = (h.gamma + x) ** h.beta
    if weight == 0.0:
        # weight underflowed; the true bound exceeds every double
        return BoundResult(math.inf, False)
    value = numerator / weight
    if value == math.inf:
        return BoundResult(math.inf, False)
    return BoundResult(value, True)


def bernstein_bound(h: HoelderSpec, n: int, x: float) -> BoundResult:
    """``L (x(1-x)/n)^(alpha/2)`` for plain Hoelder ``f`` on [0, 1]."""
    if not h.plain:
        raise BoundMisuseError("bernstein_bound needs beta = 0; use general_bound for weighted classes")
    return general_bound(h, variance(PmfSpec(PmfKind.BINOMIAL, n, x)), n, x)


def szasz_bound(h: HoelderSpec, n: int, x: float) -> BoundResult:
    return general_bound(h, variance(PmfSpec(PmfKind.POISSON, n, x)), n, x)


def baskakov_bound(h: HoelderSpec, n: int, x: float) -> BoundResult:
    return general_bound(h, variance(PmfSpec(PmfKind.PASCAL, n, x)), n, x)


def operator_bound(kind: PmfKind, h: HoelderSpec, n: int, x: float) -> BoundResult:
    """Bound matching ``kind``; Bernstein with ``beta > 0`` falls back to the general form."""
    if kind is PmfKind.BINOMIAL:
        if h.plain:
            return bernstein_bound(h, n, x)
        return general_bound(h, variance(PmfSpec(kind, n, x)), n, x)
    if kind is PmfKind.POISSON:
        return szasz_bound(h, n, x)
    return baskakov_bound(h, n, x)


def uniform_bound(kind: PmfKind, h: HoelderSpec, n: int) -> BoundResult:
    """An ``x``-free bound where the weighted class allows one.

    Szasz: ``gamma = 0, beta = alpha/2`` gives ``L n^(-alpha/2)``; ``gamma > 0,
    beta >= alpha/2`` gives ``L n^(-alpha/2) gamma^(alpha/2 - beta)``.
    Baskakov: ``gamma >= 1, beta >= alpha`` gives ``L n^(-alpha/2) gamma^(alpha - beta)``.
    Anything else is uncertified.
    """
    base = h.L / n ** (h.alpha / 2.0)
    if kind is PmfKind.POISSON:
        if h.gamma == 0.0 and h.beta == h.alpha / 2.0:
            return BoundResult(base, True)
        if h.gamma > 0.0 and h.beta >= h.alpha / 2.0:
            return BoundResult(base * h.gamma ** (h.alpha / 2.0 - h.beta), True)
    elif kind is PmfKind.PASCAL:
        if h.gamma >= 1.0 and h.beta >= h.alpha:
            return BoundResult(base * h.gamma ** (h.alpha - h.beta), True)
    return BoundResult(math.inf, False)


def tail_truncation_bound(sup_tail: float, tail_probability: float) -> float:
    """``sup_{t > m/n} |f(t)| * P[K > m]``."""
    if not sup_tail >= 0.0:
        raise DomainError(f"sup_tail must be >= 0, got {sup_tail!r}")
    if not 0.0 <= tail_probability <= 1.0:
        raise DomainError(f"tail probability must lie in [0, 1], got {tail_probability!r}")
    return sup_tail * tail_probability


def plan_truncation_tail(tail: TailSpec, n: int, alpha: float) -> int:
    """``m = ceil(n * g^{-1}(n^(-alpha/2)))``.

    The ceiling is taken on the double product as computed; no epsilon nudge.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha!r}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    target = n ** (-alpha / 2.0)
    return math.ceil(n * tail.inverse(target))


def plan_truncation_chebyshev(kind: PmfKind, n: int, x: float, sup_norm: float) -> tuple[int, float]:
    """``m = 2 ceil(n x)`` and ``||f|| Var[K] / E[K]^2``.

    The binomial case is an extension by the same inequality.
    """
    if not x > 0.0:
        raise DomainError(f"Chebyshev planning needs x > 0, got {x!r}")
    if not (sup_norm >= 0.0 and math.isfinite(sup_norm)):
        raise DomainError(f"sup_norm must be finite and >= 0, got {sup_norm!r}")
    spec = PmfSpec(kind, n, x)
    m = 2 * math.ceil(n * x)
    mu = mean(spec)
    # divide twice: mu**2 underflows for tiny x
    return m, sup_norm * (variance(spec) / mu / mu)
