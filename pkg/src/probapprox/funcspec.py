"""Target functions: a small expression language plus annotated builtins.

Grammar (whitespace is insignificant)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | VAR | NAME '(' expr ')' | '(' expr ')'

so ``^`` binds tighter than unary minus, which binds tighter than ``*``/``/``,
which bind tighter than ``+``/``-``.  ``-x^2`` is ``-(x^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Optional

import numpy as np

from .errors import (
    ConfigError,
    DomainError,
    EvalDomainError,
    ExprSyntaxError,
    PlanningError,
    UnknownIdentifierError,
)

# ---------------------------------------------------------------------------
# AST


class Expr:
    """Base class of expression nodes; nodes are immutable and hashable."""

    prec: ClassVar[int] = 5

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Var(Expr):
    name: str = "x"


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    prec: ClassVar[int] = 3


@dataclass(frozen=True)
class Func(Expr):
    arg: Expr
    name: ClassVar[str] = ""
    fn: ClassVar[Callable[[float], float]]


@dataclass(frozen=True)
class Abs(Func):
    name: ClassVar[str] = "abs"
    fn: ClassVar = staticmethod(abs)


@dataclass(frozen=True)
class Sqrt(Func):
    name: ClassVar[str] = "sqrt"
    fn: ClassVar = staticmethod(math.sqrt)


@dataclass(frozen=True)
class Exp(Func):
    name: ClassVar[str] = "exp"
    fn: ClassVar = staticmethod(math.exp)


@dataclass(frozen=True)
class Log(Func):
    name: ClassVar[str] = "log"
    fn: ClassVar = staticmethod(math.log)


@dataclass(frozen=True)
class Sin(Func):
    name: ClassVar[str] = "sin"
    fn: ClassVar = staticmethod(math.sin)


@dataclass(frozen=True)
class Cos(Func):
    name: ClassVar[str] = "cos"
    fn: ClassVar = staticmethod(math.cos)


FUNCTIONS = {cls.name: cls for cls in (Abs, Sqrt, Exp, Log, Sin, Cos)}


@dataclass(frozen=True)
class BinOp(Expr):
    left: Expr
    right: Expr
    symbol: ClassVar[str] = ""


@dataclass(frozen=True)
class Add(BinOp):
    symbol: ClassVar[str] = "+"
    prec: ClassVar[int] = 1


@dataclass(frozen=True)
class Sub(BinOp):
    symbol: ClassVar[str] = "-"
    prec: ClassVar[int] = 1


@dataclass(frozen=True)
class Mul(BinOp):
    symbol: ClassVar[str] = "*"
    prec: ClassVar[int] = 2


@dataclass(frozen=True)
class Div(BinOp):
    symbol: ClassVar[str] = "/"
    prec: ClassVar[int] = 2


@dataclass(frozen=True)
class Pow(BinOp):
    symbol: ClassVar[str] = "^"
    prec: ClassVar[int] = 4


_BINOPS = {cls.symbol: cls for cls in (Add, Sub, Mul, Div, Pow)}

# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)

_START_OF_OPERAND = frozenset({"number", "identifier", "(", "-", "+"})


@dataclass
class _Token:
    kind: str  # number | name | op | end
    text: str
    offset: int  # byte offset


def _tokenize(text: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        byte_pos = len(text[:pos].encode("utf-8"))
        if pos >= len(text):
            tokens.append(_Token("end", "", byte_pos))
            return tokens
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", byte_pos, _START_OF_OPERAND)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), len(text[: m.start(kind)].encode("utf-8"))))
        pos = m.end()


class _Parser:
    def __init__(self, text, variable):
        self.tokens = _tokenize(text)
        self.i = 0
        self.variable = variable

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        tok = self.tok
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {what}", tok.offset, expected)

    def expect(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        self.fail({text})

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self.fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = _BINOPS[op](node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = _BINOPS[op](node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return Pow(base, self.unary())
        return base

    def primary(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text == self.variable:
                return Var(tok.text)
            cls = FUNCTIONS.get(tok.text)
            if cls is None:
                raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.offset,
                                             {self.variable, *FUNCTIONS})
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return cls(arg)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail(_START_OF_OPERAND)


def parse(text: str, variable: str = "x") -> Expr:
    """Parse ``text`` into an expression tree in one variable."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(text, variable).parse()


# ---------------------------------------------------------------------------
# Printing


def _fmt_num(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot print non-finite literal {v!r}")
    if math.copysign(1.0, v) < 0:
        return f"(-{_fmt_num(-v)})"
    if v.is_integer() and v < 1e16:
        return str(int(v))
    return repr(v)


def to_text(e: Expr) -> str:
    """Render ``e`` with the fewest parentheses that re-parse to the same tree."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        if e.arg.prec < Neg.prec:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Pow):
        left = to_text(e.left)
        if e.left.prec <= Pow.prec:
            left = f"({left})"
        right = to_text(e.right)
        if e.right.prec < Neg.prec:
            right = f"({right})"
        return f"{left}^{right}"
    if isinstance(e, BinOp):
        left = to_text(e.left)
        if e.left.prec < e.prec:
            left = f"({left})"
        right = to_text(e.right)
        if e.right.prec <= e.prec:
            right = f"({right})"
        return f"{left} {e.symbol} {right}"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Evaluation

_EVAL_ERRORS = (ValueError, ZeroDivisionError, OverflowError)


def _compile(e: Expr):
    if isinstance(e, Num):
        v = e.value
        return lambda x: v
    if isinstance(e, Var):
        return lambda x: x
    if isinstance(e, Neg):
        a = _compile(e.arg)
        return lambda x: -a(x)
    if isinstance(e, Func):
        a = _compile(e.arg)
        fn = e.fn
        return lambda x: fn(a(x))
    a, b = _compile(e.left), _compile(e.right)
    if isinstance(e, Add):
        return lambda x: a(x) + b(x)
    if isinstance(e, Sub):
        return lambda x: a(x) - b(x)
    if isinstance(e, Mul):
        return lambda x: a(x) * b(x)
    if isinstance(e, Div):
        return lambda x: a(x) / b(x)
    if isinstance(e, Pow):
        return lambda x: math.pow(a(x), b(x))
    raise TypeError(f"not an expression node: {e!r}")


def _describe(e, args):
    if isinstance(e, Log):
        return "log of nonpositive value"
    if isinstance(e, Sqrt):
        return "sqrt of negative value"
    if isinstance(e, Div) and args and args[1] == 0.0:
        return "division by zero"
    if isinstance(e, Pow) and args and args[0] < 0.0:
        return "negative base with non-integer exponent"
    if isinstance(e, Pow) and args and args[0] == 0.0:
        return "zero raised to a negative power"
    return "non-finite result"


def _locate(e: Expr, x: float):
    """Slow path: return the innermost node whose value is not a finite real."""
    if isinstance(e, (Num, Var)):
        return None, (e.value if isinstance(e, Num) else x)
    children = [e.arg] if isinstance(e, (Neg, Func)) else [e.left, e.right]
    args = []
    for child in children:
        bad, v = _locate(child, x)
        if bad is not None:
            return bad, None
        args.append(v)
    try:
        v = _compile(type(e)(*[Num(a) for a in args]))(x)
    except _EVAL_ERRORS:
        return (e, _describe(e, args)), None
    if not math.isfinite(v):
        return (e, _describe(e, args)), None
    return None, v


class Evaluator:
    """Callable wrapper turning an ``Expr`` into a checked real function."""

    def __init__(self, expr: Expr):
        self.expr = expr
        self._fn = _compile(expr)

    def __call__(self, x: float) -> float:
        x = float(x)
        try:
            v = self._fn(x)
        except _EVAL_ERRORS:
            v = math.nan
        if isinstance(v, float) and math.isfinite(v):
            return v
        if isinstance(v, int):
            return float(v)
        bad, _ = _locate(self.expr, x)
        if bad is None:
            raise EvalDomainError("non-finite result", to_text(self.expr), x)
        node, message = bad
        raise EvalDomainError(message, to_text(node), x)


# ---------------------------------------------------------------------------
# Specs


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise DomainError(f"invalid interval [{self.lo}, {self.hi}]")

    def __contains__(self, x):
        return self.lo <= x <= self.hi

    @property
    def bounded(self):
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __str__(self):
        hi = "inf" if self.hi == math.inf else repr(self.hi)
        return f"[{self.lo!r}, {hi}]"


UNIT = Interval(0.0, 1.0)
HALF_LINE = Interval(0.0, math.inf)


@dataclass(frozen=True)
class HoelderSpec:
    """Constants of ``|f(x)-f(y)| <= L |x-y|^alpha / (gamma+x+y)^beta``.

    ``beta = 0`` is the plain Hoelder class (``gamma`` is then irrelevant).
    """

    L: float
    alpha: float
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("L", "alpha", "beta", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.L > 0.0 and math.isfinite(self.L)):
            raise DomainError(f"L must be positive and finite, got {self.L}")
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (self.beta >= 0.0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be >= 0, got {self.beta}")
        if not (self.gamma >= 0.0 and math.isfinite(self.gamma)):
            raise DomainError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def plain(self) -> bool:
        return self.beta == 0.0


DEFAULT_BRACKET = (1e-12, 1e12)


class TailSpec:
    """Strictly decreasing envelope ``g`` with ``|f(t)| = O(g(t))``.

    ``inverse`` is a closed form for ``g^{-1}`` in the variable ``y``; without
    it the inverse is found by log-scale bisection on ``bracket``.
    """

    def __init__(self, g, inverse=None, bracket=DEFAULT_BRACKET):
        self.g_expr = parse(g) if isinstance(g, str) else g
        self.inverse_expr = parse(inverse, variable="y") if isinstance(inverse, str) else inverse
        lo, hi = float(bracket[0]), float(bracket[1])
        if not 0.0 < lo < hi < math.inf:
            raise ConfigError(f"tail bracket must satisfy 0 < lo < hi < inf, got {bracket}")
        self.bracket = (lo, hi)
        self._g = Evaluator(self.g_expr)
        self._inv = Evaluator(self.inverse_expr) if self.inverse_expr is not None else None
        self._check_decreasing()

    def _check_decreasing(self):
        lo, hi = self.bracket
        grid = np.geomspace(lo, hi, 64)
        try:
            vals = [self._g(float(t)) for t in grid]
        except EvalDomainError as exc:
            raise ConfigError(f"tail function g fails on its bracket: {exc}") from None
        for t0, t1, v0, v1 in zip(grid, grid[1:], vals, vals[1:]):
            if not (v1 < v0) or v1 <= 0.0:
                raise ConfigError(
                    f"tail function g is not strictly decreasing and positive on {self.bracket}: "
                    f"g({t0:.6g})={v0!r}, g({t1:.6g})={v1!r}"
                )

    def g(self, t: float) -> float:
        return self._g(t)

    def inverse(self, y: float) -> float:
        """``g^{-1}(y)``; bisection returns the upper end of the final bracket."""
        if self._inv is not None:
            try:
                t = self._inv(y)
            except EvalDomainError as exc:
                raise PlanningError(f"closed-form inverse failed at y={y!r}: {exc}") from None
            if t < 0.0:
                raise PlanningError(f"closed-form inverse gave negative value {t!r} at y={y!r}")
            return t
        lo, hi = self.bracket
        g_lo, g_hi = self._g(lo), self._g(hi)
        if not g_hi <= y <= g_lo:
            raise PlanningError(f"target {y!r} outside the range [{g_hi!r}, {g_lo!r}] of g on {self.bracket}")
        while hi / lo - 1.0 > 1e-12:
            mid = math.sqrt(lo * hi)
            if mid <= lo or mid >= hi:
                break
            if self._g(mid) > y:
                lo = mid
            else:
                hi = mid
        return hi

    def __repr__(self):
        inv = to_text(self.inverse_expr) if self.inverse_expr is not None else None
        return f"TailSpec(g={to_text(self.g_expr)!r}, inverse={inv!r}, bracket={self.bracket})"


@dataclass(frozen=True)
class FunctionSpec:
    """A target function with its analytic metadata."""

    body: Expr
    domain: Interval = HALF_LINE
    hoelder: Optional[HoelderSpec] = None
    tail: Optional[TailSpec] = None
    sup_norm: Optional[float] = None
    name: str = ""
    _eval: Evaluator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.body, str):
            object.__setattr__(self, "body", parse(self.body))
        object.__setattr__(self, "_eval", Evaluator(self.body))
        if not self.name:
            object.__setattr__(self, "name", to_text(self.body))
        if self.sup_norm is not None:
            object.__setattr__(self, "sup_norm", float(self.sup_norm))
            self._check_sup_norm()

    @property
    def text(self) -> str:
        return to_text(self.body)

    def _check_sup_norm(self):
        bound = self.sup_norm * (1.0 + 1e-9)
        for t in domain_sample(self.domain, 1024):
            v = abs(self._eval(t))
            if v > bound:
                raise ConfigError(f"|f({t!r})| = {v!r} exceeds declared sup_norm {self.sup_norm!r}")

    def __call__(self, x: float) -> float:
        return eval(self, x)

    def lattice(self, n: int, upto: int) -> np.ndarray:
        """``f(k/n)`` for ``k = 0..upto``."""
        ev = self._eval
        return np.array([ev(k / n) for k in range(upto + 1)], dtype=np.float64)


def domain_sample(domain: Interval, count: int):
    """Deterministic sample of a domain; unbounded ends are covered geometrically."""
    if domain.bounded:
        return [float(t) for t in np.linspace(domain.lo, domain.hi, count)]
    half = count // 2
    lo = domain.lo
    near = np.linspace(lo, lo + 16.0, half)
    far = lo + np.geomspace(16.0, 1e6, count - half + 1)[1:]
    return [float(t) for t in np.concatenate([near, far])]


def eval(f: FunctionSpec, x: float) -> float:  # noqa: A001 - mirrors the public operation name
    x = float(x)
    if x not in f.domain:
        raise DomainError(f"x={x!r} outside the domain {f.domain} of {f.name}")
    return f._eval(x)


def from_text(text: str, domain: Interval = HALF_LINE, **meta) -> FunctionSpec:
    return FunctionSpec(parse(text), domain=domain, **meta)


# ---------------------------------------------------------------------------
# Hoelder constant estimation


def _ratios(values, points, alpha, beta, gamma, pairs):
    best = 0.0
    for i, j in pairs:
        x, y = points[i], points[j]
        if x == y:
            continue
        r = abs(values[i] - values[j]) / abs(x - y) ** alpha
        if beta != 0.0:
            r *= (gamma + x + y) ** beta
        if r > best:
            best = r
    return best


def estimate_hoelder_L(f, alpha, beta, gamma, domain, pairs, seed) -> float:
    """Largest sampled Hoelder ratio: a lower bound on the true constant.

    Half the budget goes to all pairs of a uniform grid (at most 64 points),
    half to uniformly random pairs drawn from ``seed``.
    """
    if not isinstance(domain, Interval):
        domain = Interval(*domain)
    if not domain.lo < domain.hi or not domain.bounded:
        raise DomainError(f"estimation needs a bounded nondegenerate interval, got {domain}")
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if pairs < 2:
        raise DomainError("pairs must be >= 2")
    ev = f._eval if isinstance(f, FunctionSpec) else Evaluator(f)
    n_random = pairs // 2
    grid_budget = pairs - n_random
    g = 2
    while g < 64 and (g + 1) * g // 2 <= grid_budget:
        g += 1
    grid = [float(t) for t in np.linspace(domain.lo, domain.hi, g)]
    grid_vals = [ev(t) for t in grid]
    best = _ratios(grid_vals, grid, alpha, beta, gamma,
                   ((i, j) for i in range(g) for j in range(i + 1, g)))
    rng = np.random.default_rng(seed)
    draws = rng.uniform(domain.lo, domain.hi, size=(n_random, 2))
    pts = [float(t) for t in draws.ravel()]
    vals = [ev(t) for t in pts]
    best = max(best, _ratios(vals, pts, alpha, beta, gamma,
                             ((2 * i, 2 * i + 1) for i in range(n_random))))
    return best


# ---------------------------------------------------------------------------
# Builtin registry

# Headroom applied to numerically estimated constants.
L_HEADROOM = 1.1
_ESTIMATE_DOMAIN = Interval(0.0, 8.0)
_ESTIMATE_PAIRS = 8192
_ESTIMATE_SEED = 20240101


def _estimated(text, alpha, beta, gamma):
    L = estimate_hoelder_L(parse(text), alpha, beta, gamma, _ESTIMATE_DOMAIN, _ESTIMATE_PAIRS, _ESTIMATE_SEED)
    return HoelderSpec(L * L_HEADROOM, alpha, beta, gamma)


def _runge01():
    return FunctionSpec(
        parse("1/(1+x^2)"),
        domain=HALF_LINE,
        hoelder=_estimated("1/(1+x^2)", 1.0, 1.0, 0.0),
        tail=TailSpec("x^(-2)", inverse="y^(-0.5)"),
        sup_norm=1.0,
        name="runge01",
    )


def _expneg():
    return FunctionSpec(
        parse("exp(-x)"),
        domain=HALF_LINE,
        hoelder=_estimated("exp(-x)", 1.0, 1.0, 0.0),
        tail=TailSpec("exp(-x)", inverse="-log(y)", bracket=(1e-12, 700.0)),
        sup_norm=1.0,
        name="expneg",
    )


def _vee():
    return FunctionSpec(parse("abs(x-0.5)"), domain=UNIT, hoelder=HoelderSpec(1.0, 1.0),
                        sup_norm=0.5, name="vee")


def _sqrtx():
    return FunctionSpec(parse("sqrt(x)"), domain=HALF_LINE, hoelder=HoelderSpec(1.0, 1.0, 0.5, 0.0),
                        name="sqrtx")


def _one():
    return FunctionSpec(parse("1"), domain=HALF_LINE, sup_norm=1.0, name="one")


def _identity():
    return FunctionSpec(parse("x"), domain=HALF_LINE, hoelder=HoelderSpec(1.0, 1.0), name="identity")


def _square():
    return FunctionSpec(parse("x^2"), domain=HALF_LINE, name="square")


_REGISTRY = {
    "runge01": _runge01,
    "expneg": _expneg,
    "vee": _vee,
    "sqrtx": _sqrtx,
    "one": _one,
    "identity": _identity,
    "square": _square,
}
_CACHE: dict = {}


def builtin_names():
    return sorted(_REGISTRY)


def builtin(name: str) -> FunctionSpec:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown builtin {name!r}; choose from {', '.join(builtin_names())}") from None
    if name not in _CACHE:
        _CACHE[name] = factory()
    return _CACHE[name]
