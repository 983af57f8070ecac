"""Positive linear operators ``S_n(f; x) = sum_k f(k/n) p_n(k, x)``.

Sums run in ascending ``k`` and are rounded once, exactly, at the end (see
``_kernels``), so results are reproducible bit-for-bit across backends and
call paths.  Infinite series are cut where the remaining mass drops below
``sum_eps``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from .bounds import plan_truncation_tail
from .distributions import PmfKind, PmfSpec, mean, pmf, pmf_table, support_cutoff, variance
from .errors import (
    ConfigError,
    DomainError,
    EvalDomainError,
    InconsistentProviderError,
    OperatorError,
)
from .funcspec import FunctionSpec

DEFAULT_SUM_EPS = 1e-14


# ---------------------------------------------------------------------------
# Truncation plans


@dataclass(frozen=True)
class NoTruncation:
    """Sum until the omitted mass is below ``sum_eps``."""

    def __str__(self):
        return "none"


@dataclass(frozen=True)
class Fixed:
    m: int

    def __post_init__(self):
        if isinstance(self.m, bool) or not isinstance(self.m, int) or self.m < 0:
            raise ConfigError(f"fixed truncation needs an integer m >= 0, got {self.m!r}")

    def __str__(self):
        return f"fixed:{self.m}"


@dataclass(frozen=True)
class TailRule:
    """``m = ceil(n g^{-1}(n^(-alpha/2)))`` from the function's tail envelope.

    ``alpha`` defaults to the function's Hoelder exponent (or 1).
    """

    alpha: Optional[float] = None

    def __str__(self):
        return "tail" if self.alpha is None else f"tail(alpha={self.alpha!r})"


@dataclass(frozen=True)
class ChebyshevRule:
    """``m = 2 ceil(n x)``."""

    def __str__(self):
        return "chebyshev"


TruncationPlan = Union[NoTruncation, Fixed, TailRule, ChebyshevRule]


def parse_plan(text: str) -> TruncationPlan:
    """``none``, ``fixed:M``, ``tail`` or ``chebyshev``."""
    t = text.strip().lower()
    if t == "none":
        return NoTruncation()
    if t == "tail":
        return TailRule()
    if t == "chebyshev":
        return ChebyshevRule()
    if t.startswith("fixed:"):
        try:
            return Fixed(int(t[len("fixed:"):]))
        except ValueError:
            pass
    raise ConfigError(f"unknown truncation plan {text!r}; use none, fixed:M, tail or chebyshev")


@dataclass(frozen=True)
class OperatorConfig:
    kind: PmfKind
    n: int
    sum_eps: float = DEFAULT_SUM_EPS
    truncation: TruncationPlan = NoTruncation()

    def __post_init__(self):
        if not isinstance(self.kind, PmfKind):
            object.__setattr__(self, "kind", PmfKind.parse(str(self.kind)))
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 < self.sum_eps < 1e-6:
            raise ConfigError(f"sum_eps must lie in (0, 1e-6), got {self.sum_eps!r}")


def tail_alpha(plan: TailRule, f: FunctionSpec) -> float:
    if plan.alpha is not None:
        return plan.alpha
    return f.hoelder.alpha if f.hoelder is not None else 1.0


def truncation_index(plan: TruncationPlan, kind: PmfKind, f: FunctionSpec, n: int, x: float) -> Optional[int]:
    """Last summed index under ``plan``; ``None`` means the adaptive cutoff."""
    if isinstance(plan, NoTruncation):
        return None
    if isinstance(plan, Fixed):
        return plan.m
    if isinstance(plan, TailRule):
        if f.tail is None:
            raise ConfigError(f"tail-rule truncation needs a tail function for {f.name}")
        return plan_truncation_tail(f.tail, n, tail_alpha(plan, f))
    if isinstance(plan, ChebyshevRule):
        if x == 0.0:
            return 0
        return 2 * math.ceil(n * x)
    raise ConfigError(f"unknown truncation plan {plan!r}")


# ---------------------------------------------------------------------------
# Lattice values f(k/n)


class Lattice:
    """Grows-on-demand cache of ``f(k/n)``; each ``k`` is evaluated once."""

    def __init__(self, f: FunctionSpec, n: int):
        self.f = f
        self.n = n
        self._values = np.empty(0, dtype=np.float64)

    def upto(self, m: int) -> np.ndarray:
        have = len(self._values)
        if m + 1 > have:
            ev = self.f._eval
            n = self.n
            fresh = np.empty(m + 1 - have, dtype=np.float64)
            for i, k in enumerate(range(have, m + 1)):
                t = k / n
                if t not in self.f.domain:
                    raise DomainError(f"lattice point {k}/{n} outside the domain {self.f.domain} of {self.f.name}")
                try:
                    fresh[i] = ev(t)
                except EvalDomainError as exc:
                    raise EvalDomainError(f"f({k}/{n}) failed: {exc}", exc.subexpr, t) from exc
            self._values = np.concatenate([self._values, fresh])
        return self._values[: m + 1]


def _require_domain(f: FunctionSpec, lo: float, hi: float, what: str):
    if f.domain.lo > lo or f.domain.hi < hi:
        raise DomainError(f"{what} needs f defined on [{lo}, {hi}], but {f.name} lives on {f.domain}")


def _finish(total: float, fvals, weights_fn, n: int) -> float:
    if math.isfinite(total):
        return total
    running = 0.0
    for k, fv in enumerate(fvals):
        term = float(fv) * weights_fn(k)
        running += term
        if not math.isfinite(term) or not math.isfinite(running):
            raise OperatorError(f"non-finite partial sum at k={k} (f({k}/{n}) = {float(fv)!r})")
    raise OperatorError("non-finite operator sum")


def _kernel_sum(spec: PmfSpec, lattice: Lattice, m: int) -> float:
    fvals = lattice.upto(m)
    total = _kernels.weighted_sum(spec.kind.code, spec.n, spec.x, fvals, m)
    return _finish(total, fvals, lambda k: pmf(spec, k), spec.n)


def _atom(spec: PmfSpec) -> Optional[int]:
    if spec.x == 0.0:
        return 0
    if spec.kind is PmfKind.BINOMIAL and spec.x == 1.0:
        return spec.n
    return None


def full_cutoff(spec: PmfSpec, sum_eps: float = DEFAULT_SUM_EPS) -> int:
    if spec.kind is PmfKind.BINOMIAL:
        return spec.n
    return support_cutoff(spec, sum_eps)


def _evaluate(spec: PmfSpec, lattice: Lattice, m: Optional[int], sum_eps: float) -> float:
    atom = _atom(spec)
    if atom is not None:
        if m is not None and m < atom:
            return 0.0
        return float(lattice.upto(atom)[atom])
    if m is None:
        m = full_cutoff(spec, sum_eps)
    elif spec.kind is PmfKind.BINOMIAL:
        m = min(m, spec.n)
    return _kernel_sum(spec, lattice, m)


def _named(kind: PmfKind, f: FunctionSpec, n: int, x: float, sum_eps: float, lattice=None) -> float:
    hi = 1.0 if kind is PmfKind.BINOMIAL else math.inf
    _require_domain(f, 0.0, hi, {PmfKind.BINOMIAL: "bernstein", PmfKind.POISSON: "szasz",
                                 PmfKind.PASCAL: "baskakov"}[kind])
    spec = PmfSpec(kind, n, x)
    return _evaluate(spec, lattice or Lattice(f, n), None, sum_eps)


def bernstein(f: FunctionSpec, n: int, x: float) -> float:
    """``B_n(f; x) = sum_{k=0}^n f(k/n) C(n,k) x^k (1-x)^(n-k)``."""
    return _named(PmfKind.BINOMIAL, f, n, x, DEFAULT_SUM_EPS)


def szasz(f: FunctionSpec, n: int, x: float, sum_eps: float = DEFAULT_SUM_EPS) -> float:
    """Szasz-Mirakjan operator: Poisson weights ``e^(-nx) (nx)^k / k!``."""
    return _named(PmfKind.POISSON, f, n, x, sum_eps)


def baskakov(f: FunctionSpec, n: int, x: float, sum_eps: float = DEFAULT_SUM_EPS) -> float:
    """Baskakov operator: Pascal weights ``C(n+k-1, k) x^k / (1+x)^(n+k)``."""
    return _named(PmfKind.PASCAL, f, n, x, sum_eps)


def apply(kind: PmfKind, f: FunctionSpec, n: int, x: float, sum_eps: float = DEFAULT_SUM_EPS) -> float:
    return _named(PmfKind.parse(kind) if isinstance(kind, str) else kind, f, n, x, sum_eps)


def truncated_eval(kind: PmfKind, f: FunctionSpec, n: int, m: int, x: float) -> float:
    """``sum_{k=0}^m f(k/n) p_n(k, x)``."""
    if isinstance(m, bool) or not isinstance(m, int) or m < 0:
        raise DomainError(f"m must be an integer >= 0, got {m!r}")
    kind = PmfKind.parse(kind) if isinstance(kind, str) else kind
    spec = PmfSpec(kind, n, x)
    return _evaluate(spec, Lattice(f, n), m, DEFAULT_SUM_EPS)


# ---------------------------------------------------------------------------
# Generic PMF


@dataclass(frozen=True)
class PmfProvider:
    """Arbitrary mass function on ``{0, 1, 2, ...}`` with declared moments.

    ``support_max`` (finite support) or ``cutoff`` (``eps -> M``) tell the
    operator where to stop; without either, mass is accumulated until the
    remainder is below ``sum_eps`` or Chebyshev guarantees it is.
    """

    prob: Callable[[int], float]
    mean: float
    variance: float
    support_max: Optional[int] = None
    cutoff: Optional[Callable[[float], int]] = None

    @classmethod
    def from_spec(cls, spec: PmfSpec) -> "PmfProvider":
        finite = spec.kind is PmfKind.BINOMIAL
        return cls(
            prob=lambda k: pmf(spec, k),
            mean=mean(spec),
            variance=variance(spec),
            support_max=spec.n if finite else None,
            cutoff=None if finite else (lambda eps: support_cutoff(spec, eps)),
        )


def _provider_cutoff(provider: PmfProvider, sum_eps: float) -> int:
    if provider.support_max is not None:
        return provider.support_max
    if provider.cutoff is not None:
        return provider.cutoff(sum_eps)
    # P[K > mean + t] <= var / t^2 caps the search
    limit = math.ceil(provider.mean + math.sqrt(provider.variance / sum_eps)) + 1
    mass = []
    for k in range(limit + 1):
        mass.append(provider.prob(k))
        if 1.0 - math.fsum(mass) <= sum_eps:
            return k
    return limit


def generic(f: FunctionSpec, provider: PmfProvider, n: int, x: float, sum_eps: float = DEFAULT_SUM_EPS) -> float:
    """``sum_k f(k/n) p(k)`` for any provider whose mean is ``n x``."""
    x = float(x)
    if abs(provider.mean - n * x) > 1e-12 * max(1.0, abs(n * x)):
        raise InconsistentProviderError(f"provider mean {provider.mean!r} differs from n*x = {n * x!r}")
    if not provider.variance >= 0.0:
        raise InconsistentProviderError(f"provider variance must be >= 0, got {provider.variance!r}")
    m = _provider_cutoff(provider, sum_eps)
    weights = np.array([provider.prob(k) for k in range(m + 1)], dtype=np.float64)
    if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
        raise InconsistentProviderError("provider returned a negative or non-finite probability")
    if math.fsum(weights) < 1.0 - 10.0 * sum_eps:
        raise InconsistentProviderError(f"provider mass on [0, {m}] is {math.fsum(weights)!r} < 1 - 10*sum_eps")
    fvals = Lattice(f, n).upto(m)
    total = _kernels.exact_dot(fvals, weights)
    return _finish(total, fvals, lambda k: float(weights[k]), n)


# ---------------------------------------------------------------------------
# Monte Carlo cross-check


def mc_estimate(kind: PmfKind, f: FunctionSpec, n: int, x: float, samples: int, seed: int) -> tuple[float, float]:
    """Sample mean and standard error of ``f(K/n)`` with ``K`` drawn by inverse CDF."""
    if samples < 2:
        raise DomainError(f"samples must be >= 2, got {samples!r}")
    kind = PmfKind.parse(kind) if isinstance(kind, str) else kind
    spec = PmfSpec(kind, n, x)
    lattice = Lattice(f, n)
    atom = _atom(spec)
    if atom is not None:
        return float(lattice.upto(atom)[atom]), 0.0
    m = full_cutoff(spec, 1e-16)
    cdf = np.cumsum(pmf_table(spec, m))
    rng = np.random.default_rng(seed)
    u = rng.random(samples)
    ks = np.searchsorted(cdf, u, side="right")
    overflow = ks > m
    if np.any(overflow):
        if kind is PmfKind.BINOMIAL:
            ks[overflow] = m
        else:
            ks[overflow] = [_extend_inverse(spec, m, float(cdf[-1]), float(v)) for v in u[overflow]]
    vals = lattice.upto(int(ks.max()))[ks]
    if vals.min() == vals.max():
        return float(vals[0]), 0.0
    est = math.fsum(vals) / samples
    sd = math.sqrt(math.fsum((vals - est) ** 2) / (samples - 1))
    return est, sd / math.sqrt(samples)


def _extend_inverse(spec: PmfSpec, m: int, acc: float, u: float) -> int:
    k = m
    while acc <= u:
        k += 1
        p = pmf(spec, k)
        if p == 0.0:
            break
        acc += p
    return k


# ---------------------------------------------------------------------------
# Grids


def evaluate_config(config: OperatorConfig, f: FunctionSpec, x: float, lattice: Optional[Lattice] = None) -> float:
    """Apply ``config`` (operator + truncation) at one point."""
    kind = config.kind
    hi = 1.0 if kind is PmfKind.BINOMIAL else math.inf
    _require_domain(f, 0.0, hi, kind.value + " operator")
    spec = PmfSpec(kind, config.n, x)
    m = truncation_index(config.truncation, kind, f, config.n, spec.x)
    return _evaluate(spec, lattice or Lattice(f, config.n), m, config.sum_eps)


def _plan_point(config, f, x):
    spec = PmfSpec(config.kind, config.n, x)
    m = truncation_index(config.truncation, config.kind, f, config.n, spec.x)
    if _atom(spec) is not None:
        return spec, m, _atom(spec)
    if m is None:
        m = full_cutoff(spec, config.sum_eps)
    elif spec.kind is PmfKind.BINOMIAL:
        m = min(m, spec.n)
    return spec, m, m


def grid_eval(config: OperatorConfig, f: FunctionSpec, grid, workers: Optional[int] = None) -> list[tuple[float, float]]:
    """``[(x, S(f; x)) for x in grid]`` in input order.

    ``f(k/n)`` is evaluated once for the whole grid; with ``workers > 1`` the
    per-point sums run on a thread pool (the compiled kernels release the GIL).
    Results are identical to sequential evaluation.
    """
    grid = [float(x) for x in grid]
    if not grid:
        return []
    hi = 1.0 if config.kind is PmfKind.BINOMIAL else math.inf
    _require_domain(f, 0.0, hi, config.kind.value + " operator")
    lattice = Lattice(f, config.n)
    plans = []
    for x in grid:
        try:
            plans.append(_plan_point(config, f, x))
        except ConfigError:
            raise
        except Exception as exc:
            raise OperatorError(f"x={x!r}: {exc}") from exc
    try:
        lattice.upto(max(top for _, _, top in plans))
    except Exception:
        # find the first grid point whose own lattice fails
        for x, (spec, m, top) in zip(grid, plans):
            try:
                Lattice(f, config.n).upto(top)
            except Exception as exc:
                raise OperatorError(f"x={x!r}: {exc}") from exc
        raise

    def one(item):
        x, (spec, m, _) = item
        try:
            return x, _evaluate(spec, lattice, m, config.sum_eps)
        except Exception as exc:
            raise OperatorError(f"x={x!r}: {exc}") from exc

    items = list(zip(grid, plans))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, items))
    return [one(item) for item in items]
