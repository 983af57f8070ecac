import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import mp_operator
from probapprox.distributions import PmfKind, PmfSpec, pmf, support_cutoff, tail_prob
from probapprox.errors import ConfigError, DomainError, EvalDomainError, InconsistentProviderError, OperatorError
from probapprox.funcspec import UNIT, builtin, from_text
from probapprox.operators import (
    ChebyshevRule,
    Fixed,
    NoTruncation,
    OperatorConfig,
    PmfProvider,
    TailRule,
    apply,
    baskakov,
    bernstein,
    generic,
    grid_eval,
    mc_estimate,
    parse_plan,
    szasz,
    truncated_eval,
)

B, P, N = PmfKind.BINOMIAL, PmfKind.POISSON, PmfKind.PASCAL
ONE = from_text("1")
IDENT = from_text("x")
SQUARE = from_text("x^2")
SUM_EPS = 1e-14


def point(kind, draw_x):
    return draw_x(st.floats(0.0, 1.0)) if kind is B else draw_x(st.floats(0.0, 20.0))


@st.composite
def configs(draw, max_n=64):
    kind = draw(st.sampled_from(list(PmfKind)))
    n = draw(st.integers(1, max_n))
    return kind, n, point(kind, draw)


# examples


@given(st.integers(1, 200), st.floats(0.0, 1.0))
def test_bernstein_reproduces_constants(n, x):
    assert bernstein(ONE, n, x) == pytest.approx(1.0, abs=1e-15)


def test_bernstein_square_hand_sum():
    assert bernstein(SQUARE, 2, 0.5) == 0.375


def test_bernstein_identity_brute_force():
    ref = mp_operator("binomial", lambda t: t, 37, 0.42, 37)
    assert abs(bernstein(IDENT, 37, 0.42) - float(ref)) <= 1e-14


def test_bernstein_endpoints_exact():
    f = builtin("vee")
    assert bernstein(f, 9, 0.0) == f(0.0)
    assert bernstein(f, 9, 1.0) == f(1.0)


@pytest.mark.parametrize("op,kind,expected", [(szasz, "poisson", 1.25), (baskakov, "pascal", 1.5)])
def test_second_moment_examples(op, kind, expected):
    ref = float(mp_operator(kind, lambda t: t * t, 4, 1.0, 200))
    assert op(SQUARE, 4, 1.0) == pytest.approx(expected, abs=1e-10)
    assert op(SQUARE, 4, 1.0) == pytest.approx(ref, abs=1e-10)


def test_mean_examples():
    assert szasz(IDENT, 10, 2.5) == pytest.approx(2.5, abs=1e-10)
    assert baskakov(IDENT, 6, 3.0) == pytest.approx(3.0, abs=1e-9)


@pytest.mark.parametrize("op", [szasz, baskakov])
def test_infinite_operators_constants_and_origin(op):
    assert op(ONE, 7, 1.3) == pytest.approx(1.0, abs=2 * SUM_EPS)
    f = builtin("runge01")
    assert op(f, 7, 0.0) == f(0.0)


def test_bernstein_needs_unit_domain():
    with pytest.raises(DomainError):
        bernstein(from_text("x", domain=UNIT), 3, 1.5)
    with pytest.raises(DomainError):
        szasz(builtin("vee"), 3, 0.5)


def test_evaluation_error_names_lattice_point():
    with pytest.raises(EvalDomainError) as info:
        szasz(from_text("1/(x-0.5)"), 4, 1.0)
    assert "2/4" in str(info.value)


def test_lattice_overflow_names_point():
    with pytest.raises(EvalDomainError) as info:
        szasz(from_text("exp(x)"), 1, 700.0)
    assert "/1)" in str(info.value)


def test_generic_reproduces_named_operators_bitwise():
    f = builtin("runge01")
    for kind, op, x in ((B, lambda g, n, x: bernstein(g, n, x), 0.37), (P, szasz, 2.2), (N, baskakov, 0.9)):
        if kind is B:
            g = builtin("vee")
        else:
            g = f
        provider = PmfProvider.from_spec(PmfSpec(kind, 25, x))
        assert np.float64(generic(g, provider, 25, x)).tobytes() == np.float64(op(g, 25, x)).tobytes()


def test_generic_point_mass():
    f = builtin("runge01")
    provider = PmfProvider(prob=lambda k: 1.0 if k == 2 else 0.0, mean=2.0, variance=0.0)
    assert generic(f, provider, 4, 0.5) == f(0.5)


def test_generic_inconsistent_providers():
    f = builtin("runge01")
    with pytest.raises(InconsistentProviderError):
        generic(f, PmfProvider(prob=lambda k: 1.0 if k == 3 else 0.0, mean=3.0, variance=0.0), 4, 0.5)
    with pytest.raises(InconsistentProviderError):
        generic(f, PmfProvider(prob=lambda k: 0.4 if k == 2 else 0.0, mean=2.0, variance=0.0, support_max=5), 4, 0.5)
    with pytest.raises(InconsistentProviderError):
        generic(f, PmfProvider(prob=lambda k: -0.5 if k == 0 else 0.75, mean=1.0, variance=1.0, support_max=2),
                2, 0.5)


def test_generic_without_cutoff_hint():
    spec = PmfSpec(P, 10, 0.7)
    provider = PmfProvider(prob=lambda k: pmf(spec, k), mean=7.0, variance=7.0)
    assert generic(SQUARE, provider, 10, 0.7) == pytest.approx(0.49 + 0.07, rel=1e-12)


def test_truncated_examples():
    f = builtin("runge01")
    assert truncated_eval(B, SQUARE, 5, 9, 0.3) == bernstein(SQUARE, 5, 0.3)
    assert truncated_eval(P, f, 6, 0, 0.5) == f(0.0) * math.exp(-3.0)


def test_truncated_expneg_against_direct_summation():
    f = builtin("expneg")
    n, m, x = 16, 23, 1.0
    full = float(mp_operator("poisson", lambda t: mpmath.exp(-t), n, x, 400))
    trunc = truncated_eval(P, f, n, m, x)
    sup_tail = math.exp(-(m + 1) / n)
    assert abs(full - trunc) <= sup_tail * tail_prob(PmfSpec(P, n, x), m)


def test_truncated_rejects_negative_m():
    with pytest.raises(DomainError):
        truncated_eval(P, ONE, 3, -1, 0.5)


# Monte Carlo


def test_mc_constant_and_origin():
    assert mc_estimate(P, ONE, 10, 1.0, 1000, 1) == (1.0, 0.0)
    f = builtin("runge01")
    assert mc_estimate(N, f, 10, 0.0, 1000, 1) == (f(0.0), 0.0)


def test_mc_reproducible():
    f = builtin("vee")
    assert mc_estimate(B, f, 50, 0.5, 10_000, 42) == mc_estimate(B, f, 50, 0.5, 10_000, 42)


def test_mc_within_five_standard_errors():
    f = builtin("vee")
    est, se = mc_estimate(B, f, 50, 0.5, 10**6, 0)
    assert abs(est - bernstein(f, 50, 0.5)) <= 5 * se


@pytest.mark.slow
def test_mc_coverage_over_seeds():
    f = builtin("vee")
    exact = bernstein(f, 50, 0.5)
    hits = 0
    for seed in range(100):
        est, se = mc_estimate(B, f, 50, 0.5, 10**6, seed)
        hits += abs(est - exact) <= 5 * se
    assert hits >= 99


def test_mc_infinite_kinds():
    f = builtin("runge01")
    for kind, op in ((P, szasz), (N, baskakov)):
        est, se = mc_estimate(kind, f, 20, 1.5, 200_000, 3)
        assert abs(est - op(f, 20, 1.5)) <= 5 * se


def test_mc_requires_two_samples():
    with pytest.raises(DomainError):
        mc_estimate(P, ONE, 3, 1.0, 1, 0)


# configuration and grids


def test_config_validation():
    with pytest.raises(ConfigError):
        OperatorConfig(P, 4, sum_eps=1e-3)
    with pytest.raises(DomainError):
        OperatorConfig(P, 0)
    assert OperatorConfig("szasz", 4).kind is P


@pytest.mark.parametrize("text,plan", [("none", NoTruncation()), ("fixed:12", Fixed(12)), ("tail", TailRule()),
                                       ("chebyshev", ChebyshevRule())])
def test_parse_plan(text, plan):
    assert parse_plan(text) == plan
    assert str(plan) == text


@pytest.mark.parametrize("text", ["fixed:-1", "fixed:x", "cheb", ""])
def test_parse_plan_rejects(text):
    with pytest.raises(ConfigError):
        parse_plan(text)


def test_grid_eval_examples():
    assert grid_eval(OperatorConfig(P, 5), SQUARE, []) == []
    f = builtin("runge01")
    assert grid_eval(OperatorConfig(P, 5), f, [0.0]) == [(0.0, f(0.0))]
    out = grid_eval(OperatorConfig(B, 2), SQUARE, [0.25, 0.5])
    assert out == [(0.25, bernstein(SQUARE, 2, 0.25)), (0.5, bernstein(SQUARE, 2, 0.5))]


def test_grid_eval_parallel_matches_sequential():
    f = builtin("runge01")
    grid = [i * 0.05 for i in range(161)]
    for plan in (NoTruncation(), TailRule(), ChebyshevRule(), Fixed(40)):
        config = OperatorConfig(P, 64, truncation=plan)
        assert grid_eval(config, f, grid, workers=4) == grid_eval(config, f, grid)


def test_grid_eval_reports_failing_x():
    with pytest.raises(OperatorError) as info:
        grid_eval(OperatorConfig(B, 4), builtin("vee"), [0.5, 1.5])
    assert "x=1.5" in str(info.value)


def test_binomial_truncation_past_n_is_none():
    f = builtin("vee")
    a = grid_eval(OperatorConfig(B, 10, truncation=Fixed(50)), f, [0.3, 0.7])
    b = grid_eval(OperatorConfig(B, 10), f, [0.3, 0.7])
    assert a == b


def test_tail_rule_needs_tail():
    with pytest.raises(ConfigError):
        grid_eval(OperatorConfig(P, 4, truncation=TailRule()), SQUARE, [1.0])


# invariants


@given(configs())
def test_partition_of_unity(cfg):
    kind, n, x = cfg
    assert abs(apply(kind, ONE, n, x) - 1.0) <= 2 * SUM_EPS


@given(configs())
def test_linear_reproduction(cfg):
    kind, n, x = cfg
    tol = 1e-13 if kind is B else 1e-9
    assert abs(apply(kind, IDENT, n, x) - x) <= tol * max(x, 1e-300) + 1e-300


@given(configs())
def test_second_moment_identities(cfg):
    kind, n, x = cfg
    extra = {B: x * (1 - x) / n, P: x / n, N: x * (1 + x) / n}[kind]
    expected = x * x + extra
    assert abs(apply(kind, SQUARE, n, x) - expected) <= 1e-9 * expected + 1e-300


WEIGHTS = ["1", "x", "abs(sin(3*x))", "1/(1+x^2)", "exp(-x)"]


@given(configs(), st.sampled_from(WEIGHTS), st.sampled_from(WEIGHTS), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_linearity(cfg, ftext, gtext, a, b):
    kind, n, x = cfg
    f, g = from_text(ftext), from_text(gtext)
    combo = from_text(f"({a!r})*({ftext}) + ({b!r})*({gtext})")
    lhs = apply(kind, combo, n, x)
    sf, sg = apply(kind, f, n, x), apply(kind, g, n, x)
    rhs = a * sf + b * sg
    scale = abs(a * sf) + abs(b * sg)
    assert abs(lhs - rhs) <= 1e-11 * scale + 1e-12


@given(configs(), st.sampled_from(WEIGHTS[1:]))
def test_positivity_and_monotonicity(cfg, text):
    kind, n, x = cfg
    f = from_text(text)
    lower = apply(kind, f, n, x)
    assert lower >= -2 * SUM_EPS
    upper = from_text(f"{text} + abs(cos(x))")
    assert lower <= apply(kind, upper, n, x) + 4 * SUM_EPS


@given(st.sampled_from([P, N]), st.integers(1, 64), st.floats(0.01, 10.0), st.integers(0, 300),
       st.sampled_from(["runge01", "expneg"]))
def test_truncation_consistency(kind, n, x, m, name):
    f = builtin(name)
    spec = PmfSpec(kind, n, x)
    cut = max(support_cutoff(spec, SUM_EPS), m)
    full = apply(kind, f, n, x)
    trunc = truncated_eval(kind, f, n, m, x)
    sup_tail = max((abs(f(k / n)) for k in range(m + 1, cut + 1)), default=0.0)
    assert abs(full - trunc) <= sup_tail * tail_prob(spec, m) + 4 * SUM_EPS


@given(configs(max_n=40), st.sampled_from(["runge01", "expneg", "sqrtx"]))
def test_generic_bitwise(cfg, name):
    kind, n, x = cfg
    f = builtin(name)
    provider = PmfProvider.from_spec(PmfSpec(kind, n, x))
    assert np.float64(generic(f, provider, n, x)).tobytes() == np.float64(apply(kind, f, n, x)).tobytes()
