import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probapprox.errors import (
    ConfigError,
    DomainError,
    EvalDomainError,
    ExprSyntaxError,
    PlanningError,
    UnknownIdentifierError,
)
from probapprox.funcspec import (
    HALF_LINE,
    UNIT,
    Abs,
    Add,
    Cos,
    Div,
    Evaluator,
    Exp,
    FunctionSpec,
    HoelderSpec,
    Interval,
    Log,
    Mul,
    Neg,
    Num,
    Pow,
    Sin,
    Sqrt,
    Sub,
    TailSpec,
    Var,
    builtin,
    builtin_names,
    domain_sample,
    estimate_hoelder_L,
    eval as f_eval,
    from_text,
    parse,
    to_text,
)

X = Var()


# parsing


def test_parse_runge():
    assert parse("1/(1+x^2)") == Div(Num(1), Add(Num(1), Pow(X, Num(2))))


def test_parse_expneg():
    assert parse("exp(-x)") == Exp(Neg(X))


def test_incomplete_expression_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("1+")
    assert info.value.offset == 2
    assert "number" in info.value.expected


@pytest.mark.parametrize("text,tree", [
    ("-x^2", Neg(Pow(X, Num(2)))),
    ("2^3^2", Pow(Num(2), Pow(Num(3), Num(2)))),
    ("x^-2", Pow(X, Neg(Num(2)))),
    ("-2*x", Mul(Neg(Num(2)), X)),
    ("1-2-3", Sub(Sub(Num(1), Num(2)), Num(3))),
    ("8/4/2", Div(Div(Num(8), Num(4)), Num(2))),
    ("1+2*3", Add(Num(1), Mul(Num(2), Num(3)))),
    ("(1+2)*3", Mul(Add(Num(1), Num(2)), Num(3))),
    ("  abs ( x - .5 ) ", Abs(Sub(X, Num(0.5)))),
    ("1.5e-3*x", Mul(Num(1.5e-3), X)),
    ("+x", X),
])
def test_precedence_and_associativity(text, tree):
    assert parse(text) == tree


@pytest.mark.parametrize("text,offset", [(")", 0), ("x x", 2), ("sqrt x", 5), ("(x", 2), ("x + * 2", 4), ("", 0),
                                         ("x $ 1", 2)])
def test_syntax_error_offsets(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("2*y + 1")
    assert info.value.offset == 2
    with pytest.raises(UnknownIdentifierError):
        parse("tan(x)")


def test_offsets_are_bytes():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x+é")
    # the ASCII prefix "x+" is two bytes
    assert info.value.offset == 2


def test_alternate_variable():
    assert parse("y^(-0.5)", variable="y") == Pow(Var("y"), Neg(Num(0.5)))


# printing


@pytest.mark.parametrize("text", ["1 / (1 + x^2)", "exp(-x)", "-x^2", "(-x)^2", "2^3^2", "(2^3)^2", "x - (1 - x)",
                                  "x / (2 * x)", "-(x + 1)", "x^-2", "abs(x - 0.5)"])
def test_print_is_minimal_and_stable(text):
    e = parse(text)
    assert to_text(e) == text
    assert parse(to_text(e)) == e


LEAVES = st.one_of(st.just(X), st.floats(-50.0, 50.0, allow_nan=False).map(Num))


def _extend(children):
    unary = st.sampled_from([Neg, Abs, Sqrt, Exp, Log, Sin, Cos])
    binary = st.sampled_from([Add, Sub, Mul, Div, Pow])
    return st.one_of(st.builds(lambda c, a: c(a), unary, children),
                     st.builds(lambda c, a, b: c(a, b), binary, children, children))


EXPRS = st.recursive(LEAVES, _extend, max_leaves=12)
GRID17 = [float(t) for t in np.linspace(0.0, 4.0, 17)]


def _outcome(ev, x):
    try:
        return ("ok", np.float64(ev(x)).tobytes())
    except EvalDomainError:
        return ("err", None)


@settings(max_examples=1000)
@given(EXPRS)
def test_parse_print_round_trip(e):
    again = parse(to_text(e))
    a, b = Evaluator(e), Evaluator(again)
    for x in GRID17:
        assert _outcome(a, x) == _outcome(b, x)


# evaluation


@pytest.mark.parametrize("text,x,value", [("1/(1+x^2)", 0.0, 1.0), ("exp(-x)", 0.0, 1.0), ("abs(x-0.5)", 0.75, 0.25)])
def test_eval_examples(text, x, value):
    assert f_eval(from_text(text), x) == value


@pytest.mark.parametrize("text,x,subexpr", [("log(x)", 0.0, "log(x)"), ("1/x", 0.0, "1 / x"),
                                            ("sqrt(x-1)", 0.5, "sqrt(x - 1)"), ("(x-1)^0.5", 0.0, "(x - 1)^0.5"),
                                            ("1 + exp(x)", 1000.0, "exp(x)"), ("2 * log(x - 3) + 1", 1.0, "log(x - 3)")])
def test_eval_domain_error_names_subexpression(text, x, subexpr):
    with pytest.raises(EvalDomainError) as info:
        f_eval(from_text(text), x)
    assert info.value.subexpr == subexpr
    assert info.value.x == x


def test_eval_outside_declared_domain():
    with pytest.raises(DomainError):
        f_eval(builtin("vee"), 1.5)


@given(EXPRS, st.floats(0.0, 10.0))
def test_eval_deterministic_and_never_nan(e, x):
    ev = Evaluator(e)
    first = _outcome(ev, x)
    assert first == _outcome(ev, x)
    if first[0] == "ok":
        assert math.isfinite(np.frombuffer(first[1])[0])


# specs


def test_hoelder_spec_validation():
    with pytest.raises(DomainError):
        HoelderSpec(0.0, 1.0)
    with pytest.raises(DomainError):
        HoelderSpec(1.0, 1.5)
    with pytest.raises(DomainError):
        HoelderSpec(1.0, 1.0, -1.0)
    assert HoelderSpec(1.0, 0.5).plain


def test_tail_spec_requires_decrease():
    with pytest.raises(ConfigError):
        TailSpec("x")
    with pytest.raises(ConfigError):
        TailSpec("1 + sin(x)")


def test_tail_inverse_bisection_close_to_closed_form():
    numeric = TailSpec("x^(-2)")
    for y in (0.5, 0.25, 1e-3, 1e-8):
        assert numeric.inverse(y) == pytest.approx(y**-0.5, rel=1e-11)
        assert numeric.g(numeric.inverse(y)) <= y


def test_tail_inverse_out_of_range():
    with pytest.raises(PlanningError):
        TailSpec("x^(-2)", bracket=(1.0, 10.0)).inverse(1e-5)


def test_sup_norm_checked():
    with pytest.raises(ConfigError):
        from_text("x", domain=UNIT, sup_norm=0.5)
    assert from_text("sin(x)", sup_norm=1.0).sup_norm == 1.0


def test_domain_sample_covers_domain():
    pts = domain_sample(HALF_LINE, 1024)
    assert len(pts) == 1024 and pts[0] == 0.0 and max(pts) >= 1e5
    assert domain_sample(UNIT, 11)[-1] == 1.0
    with pytest.raises(DomainError):
        Interval(2.0, 1.0)


def test_lattice_values():
    f = from_text("x^2")
    assert list(f.lattice(4, 4)) == [0.0, 0.0625, 0.25, 0.5625, 1.0]


# Hoelder estimation


def test_estimate_vee():
    L = estimate_hoelder_L(builtin("vee"), 1.0, 0.0, 0.0, UNIT, 4096, 7)
    assert 0.999 <= L <= 1.0


def test_estimate_constant_is_zero():
    assert estimate_hoelder_L(from_text("1"), 0.5, 1.0, 2.0, UNIT, 1000, 3) == 0.0


def test_estimate_sqrt_weighted():
    L = estimate_hoelder_L(builtin("sqrtx"), 1.0, 0.5, 0.0, Interval(0.0, 100.0), 8192, 11)
    assert L <= 1.0 + 1e-9


def test_estimate_is_reproducible_for_seed():
    f = builtin("runge01")
    a = estimate_hoelder_L(f, 1.0, 1.0, 0.0, Interval(0.0, 8.0), 2000, 5)
    assert a == estimate_hoelder_L(f, 1.0, 1.0, 0.0, Interval(0.0, 8.0), 2000, 5)


def test_estimate_rejects_degenerate_domain():
    with pytest.raises(DomainError):
        estimate_hoelder_L(from_text("x"), 1.0, 0.0, 0.0, Interval(1.0, 1.0), 10, 0)


@pytest.mark.parametrize("name", [n for n in builtin_names() if builtin(n).hoelder is not None])
def test_estimate_never_exceeds_declared_constant(name):
    f = builtin(name)
    h = f.hoelder
    domain = UNIT if f.domain == UNIT else Interval(0.0, 50.0)
    L = estimate_hoelder_L(f, h.alpha, h.beta, h.gamma, domain, 8192, 99)
    assert L <= h.L * (1 + 1e-9)


# builtins


def test_registry_contents():
    assert {"runge01", "expneg", "vee", "sqrtx"} <= set(builtin_names())
    with pytest.raises(ConfigError):
        builtin("nope")


def test_runge01_annotations():
    f = builtin("runge01")
    assert f.text == "1 / (1 + x^2)"
    assert (f.hoelder.alpha, f.hoelder.beta, f.hoelder.gamma) == (1.0, 1.0, 0.0)
    assert f.tail.g(3.0) == pytest.approx(1.0 / 9.0, rel=1e-15)
    assert f.sup_norm == 1.0


def test_runge01_tail_condition():
    f = builtin("runge01")
    for x in np.linspace(1.0, 1000.0, 1024):
        assert abs(f(float(x))) <= f.tail.g(float(x))


def test_expneg_annotations():
    f = builtin("expneg")
    assert (f.hoelder.alpha, f.hoelder.beta) == (1.0, 1.0)
    assert f.tail.g(2.0) == math.exp(-2.0)
    assert f.sup_norm == 1.0


def test_vee_and_sqrtx_annotations():
    assert builtin("vee").hoelder == HoelderSpec(1.0, 1.0)
    assert builtin("vee").domain == UNIT
    assert builtin("sqrtx").hoelder == HoelderSpec(1.0, 1.0, 0.5, 0.0)


def test_function_spec_from_string_body():
    f = FunctionSpec("x^2", name="sq")
    assert f(3.0) == 9.0 and f.name == "sq"
