"""Command-line front end.

    probapprox pmf    --op szasz --n 10 --x 0.5 --upto 20
    probapprox eval   --op bernstein --n 2 --f "x^2" --x 0.5
    probapprox bound  --op bernstein --L 1 --alpha 1 --n 100 --grid 0:0.1:1
    probapprox plan   --op szasz --builtin runge01 --plan tail --alpha 1 --n 16
    probapprox verify --op bernstein --builtin vee --n 100 --grid 0:0.01:1
    probapprox rate   --op bernstein --builtin vee --grid 0:0.01:1 --n-list 16,64,256,1024

Exit status is 0 on success and 1 on any usage or domain error, with a
single diagnostic line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .bounds import operator_bound, plan_truncation_chebyshev, plan_truncation_tail, tail_truncation_bound
from .distributions import PmfKind, PmfSpec, log_pmf, pmf, tail_prob
from .errors import ConfigError, ExprSyntaxError, ProbApproxError
from .funcspec import FunctionSpec, HoelderSpec, TailSpec, builtin, builtin_names, from_text
from .harness import convergence_rate, fmt_float, render_report, verify_bounds, verify_truncation
from .operators import (
    DEFAULT_SUM_EPS,
    Lattice,
    NoTruncation,
    OperatorConfig,
    full_cutoff,
    grid_eval,
    mc_estimate,
    parse_plan,
)

PROG = "probapprox"
HELP_WIDTH = 80
OPERATORS = ("bernstein", "szasz", "baskakov")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so ``main`` owns the exit code and message."""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        kwargs.setdefault("formatter_class", _formatter)
        super().__init__(*args, **kwargs)

    def error(self, message):
        command = self.prog[len(PROG):].strip()
        raise UsageError(f"{command}: {message}" if command else message)


def _formatter(prog):
    # fixed width so help text does not depend on the terminal
    return argparse.HelpFormatter(prog, width=HELP_WIDTH)


# ---------------------------------------------------------------------------
# Flag parsing helpers


def parse_grid(text: str) -> list[float]:
    """``LO:STEP:HI``; the last point snaps to ``HI`` when within half a step."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--grid: expected LO:STEP:HI, got {text!r}")
    try:
        lo, step, hi = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--grid: expected LO:STEP:HI, got {text!r}") from None
    if not all(math.isfinite(v) for v in (lo, step, hi)):
        raise UsageError(f"--grid: values must be finite, got {text!r}")
    if step <= 0.0:
        raise UsageError(f"--grid: step must be > 0, got {step!r}")
    if hi < lo:
        raise UsageError(f"--grid: HI must be >= LO, got {text!r}")
    count = math.floor((hi - lo) / step + 0.5)
    points = [lo + i * step for i in range(count + 1)]
    if abs(points[-1] - hi) <= 0.5 * step:
        points[-1] = hi
    return points


def parse_n_list(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",")]
    except ValueError:
        raise UsageError(f"--n-list: expected comma-separated integers, got {text!r}") from None
    if any(v < 1 for v in values):
        raise UsageError("--n-list: every n must be >= 1")
    return values


def _points(args, required=True) -> Optional[list[float]]:
    if args.grid is not None:
        return parse_grid(args.grid)
    if args.x is not None:
        return [args.x]
    if required:
        raise UsageError(f"{args.command}: one of --grid or --x is required")
    return None


def _expr_flag(flag, text):
    try:
        return from_text(text)
    except ExprSyntaxError as exc:
        raise UsageError(f"{flag}: {exc}") from None


def _function(args) -> FunctionSpec:
    """The target function, with any metadata flags layered over a builtin's."""
    if args.builtin is not None:
        f = builtin(args.builtin)
    elif args.f is not None:
        f = _expr_flag("--f", args.f)
    else:
        raise UsageError(f"{args.command}: one of --f or --builtin is required")
    changes = {}
    if getattr(args, "g", None) is not None:
        try:
            changes["tail"] = TailSpec(args.g, inverse=args.g_inverse)
        except ExprSyntaxError as exc:
            raise UsageError(f"--g: {exc}") from None
    elif getattr(args, "g_inverse", None) is not None:
        raise UsageError("--g-inverse needs --g")
    if getattr(args, "sup_norm", None) is not None:
        changes["sup_norm"] = args.sup_norm
    return dataclasses.replace(f, **changes) if changes else f


def _hoelder(args, f: Optional[FunctionSpec]) -> HoelderSpec:
    given = args.L is not None or args.alpha is not None
    if given:
        if args.L is None or args.alpha is None:
            raise UsageError(f"{args.command}: --L and --alpha go together")
        return HoelderSpec(args.L, args.alpha, args.beta or 0.0, args.gamma or 0.0)
    if f is not None and f.hoelder is not None:
        if args.beta is not None or args.gamma is not None:
            base = f.hoelder
            return HoelderSpec(base.L, base.alpha, base.beta if args.beta is None else args.beta,
                               base.gamma if args.gamma is None else args.gamma)
        return f.hoelder
    raise UsageError(f"{args.command}: Hoelder constants needed; pass --L and --alpha or an annotated --builtin")


def _kind(args) -> PmfKind:
    return PmfKind.parse(args.op)


# ---------------------------------------------------------------------------
# Tabular output


def _render_table(command: str, columns, rows, fmt: str) -> str:
    if fmt == "json":
        payload = {"command": command, "rows": [dict(zip(columns, row)) for row in rows]}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if v is None else fmt_float(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]):
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    path = Path(out)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# Subcommands


def cmd_pmf(args) -> str:
    spec = PmfSpec(_kind(args), args.n, args.x)
    ks = [args.k] if args.k is not None else range(args.upto + 1)
    rows = [(k, pmf(spec, k), log_pmf(spec, k)) for k in ks]
    return _render_table("pmf", ("k", "pmf", "log_pmf"), rows, args.format)


def cmd_eval(args) -> str:
    f = _function(args)
    grid = _points(args)
    config = OperatorConfig(_kind(args), args.n, args.sum_eps, parse_plan(args.truncate))
    values = grid_eval(config, f, grid, workers=args.workers)
    if args.mc is None:
        return _render_table("eval", ("x", "approx"), values, args.format)
    if args.mc < 2:
        raise UsageError("--mc: need at least 2 samples")
    rows = []
    for i, (x, approx) in enumerate(values):
        est, err = mc_estimate(config.kind, f, args.n, x, args.mc, args.seed + i)
        rows.append((x, approx, est, err))
    return _render_table("eval", ("x", "approx", "mc_mean", "mc_stderr"), rows, args.format)


def cmd_bound(args) -> str:
    h = _hoelder(args, None)
    kind = _kind(args)
    rows = []
    for x in _points(args):
        b = operator_bound(kind, h, args.n, x)
        rows.append((x, b.value, b.certified))
    return _render_table("bound", ("x", "bound", "certified"), rows, args.format)


def _tail_plan_bound(kind, f, n, m, x, sum_eps):
    """``sup_{k > m} |f(k/n)| * P[K > m]`` at one point."""
    spec = PmfSpec(kind, n, x)
    top = spec.n if kind is PmfKind.BINOMIAL else max(full_cutoff(spec, sum_eps), m)
    if top <= m:
        return 0.0
    tail = Lattice(f, n).upto(top)[m + 1:]
    return tail_truncation_bound(float(max(abs(tail))), tail_prob(spec, m))


def cmd_plan(args) -> str:
    kind = _kind(args)
    f = _function(args)
    grid = _points(args, required=args.plan == "chebyshev")
    if args.plan == "tail":
        if f.tail is None:
            raise ConfigError(f"tail plan needs a tail function for {f.name}; pass --g")
        alpha = args.alpha if args.alpha is not None else (f.hoelder.alpha if f.hoelder else 1.0)
        m = plan_truncation_tail(f.tail, args.n, alpha)
        if grid is None:
            return _render_table("plan", ("n", "m", "envelope"), [(args.n, m, f.tail.g(m / args.n))], args.format)
        rows = [(x, args.n, m, _tail_plan_bound(kind, f, args.n, m, x, args.sum_eps)) for x in grid]
        return _render_table("plan", ("x", "n", "m", "bound"), rows, args.format)
    if f.sup_norm is None:
        raise ConfigError(f"chebyshev plan needs a sup norm for {f.name}; pass --sup-norm")
    rows = []
    for x in grid:
        m, bound = plan_truncation_chebyshev(kind, args.n, x, f.sup_norm)
        rows.append((x, args.n, m, bound))
    return _render_table("plan", ("x", "n", "m", "bound"), rows, args.format)


def cmd_verify(args) -> str:
    f = _function(args)
    grid = _points(args)
    plan = parse_plan(args.truncate)
    if args.target == "truncation":
        if isinstance(plan, NoTruncation):
            raise UsageError("verify: --target truncation needs --truncate fixed:M, tail or chebyshev")
        report = verify_truncation(_kind(args), f, args.n, plan, grid, args.sum_eps)
    else:
        config = OperatorConfig(_kind(args), args.n, args.sum_eps, plan)
        report = verify_bounds(config, f, grid, _hoelder(args, f))
    return render_report(report, args.format)


def cmd_rate(args) -> str:
    f = _function(args)
    if args.grid is None and args.x is None:
        raise UsageError("rate: one of --grid or --x is required")
    fit = convergence_rate(_kind(args), f, _points(args), parse_n_list(args.n_list),
                           parse_plan(args.truncate), args.sum_eps)
    return render_report(fit, args.format)


# ---------------------------------------------------------------------------
# Parser


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _real(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
    return v


def _add_op(p, degree=True):
    p.add_argument("--op", required=True, choices=OPERATORS, help="approximation operator")
    if degree:
        p.add_argument("--n", required=True, type=_positive_int, help="operator degree n >= 1")


def _add_function(p, tail=False, sup_norm=False):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--f", metavar="EXPR", help="target function as an expression in x")
    g.add_argument("--builtin", metavar="NAME", help=f"named target function: {', '.join(builtin_names())}")
    if tail:
        p.add_argument("--g", metavar="EXPR", help="decreasing tail envelope g(x) for the tail plan")
        p.add_argument("--g-inverse", metavar="EXPR", help="closed-form inverse of g in the variable y")
    if sup_norm:
        p.add_argument("--sup-norm", type=_real, metavar="REAL", help="sup norm of f over its domain")


def _add_points(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--grid", metavar="LO:STEP:HI", help="evaluation grid, HI included within half a step")
    g.add_argument("--x", type=_real, metavar="REAL", help="single evaluation point")


def _add_sum_eps(p):
    p.add_argument("--sum-eps", type=_real, default=DEFAULT_SUM_EPS, metavar="REAL",
                   help="omitted-mass tolerance for infinite series (default 1e-14)")


def _add_output(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format (default csv)")
    p.add_argument("--out", metavar="PATH", help="output file (default standard output)")


def _add_hoelder(p, alpha_help="Hoelder exponent in (0, 1]"):
    p.add_argument("--L", type=_real, metavar="REAL", help="Hoelder constant L")
    p.add_argument("--alpha", type=_real, metavar="REAL", help=alpha_help)
    p.add_argument("--beta", type=_real, metavar="REAL", help="weight exponent beta (default 0)")
    p.add_argument("--gamma", type=_real, metavar="REAL", help="weight shift gamma (default 0)")


def _add_truncate(p):
    p.add_argument("--truncate", default="none", metavar="PLAN",
                   help="truncation plan: none, fixed:M, tail or chebyshev (default none)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Probabilistic approximation operators and their error bounds.")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("pmf", help="tabulate a mass function", description="Tabulate p(k) and log p(k).")
    _add_op(p)
    p.add_argument("--x", type=_real, required=True, metavar="REAL", help="distribution parameter x")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=_nonneg_int, metavar="INT", help="single index k")
    g.add_argument("--upto", type=_nonneg_int, metavar="INT", help="all indices 0..INT")
    _add_output(p)
    p.set_defaults(run=cmd_pmf)

    p = sub.add_parser("eval", help="evaluate an operator on a grid",
                       description="Evaluate S_n(f; x), optionally truncated, with a Monte Carlo cross-check.")
    _add_op(p)
    _add_function(p, tail=True, sup_norm=True)
    _add_points(p)
    _add_truncate(p)
    p.add_argument("--mc", type=_positive_int, metavar="SAMPLES", help="add Monte Carlo mean and standard error")
    p.add_argument("--seed", type=_nonneg_int, default=0, metavar="INT",
                   help="Monte Carlo seed; point i uses SEED+i (default 0)")
    p.add_argument("--workers", type=_positive_int, metavar="INT", help="threads for the grid sweep")
    _add_sum_eps(p)
    _add_output(p)
    p.set_defaults(run=cmd_eval)

    p = sub.add_parser("bound", help="closed-form error bound on a grid",
                       description="Evaluate the Hoelder-class error bound for an operator.")
    _add_op(p)
    _add_hoelder(p)
    _add_points(p)
    _add_output(p)
    p.set_defaults(run=cmd_bound)

    p = sub.add_parser("plan", help="choose a truncation index",
                       description="Choose the truncation index m and the predicted truncation bound.")
    _add_op(p)
    _add_function(p, tail=True, sup_norm=True)
    p.add_argument("--plan", required=True, choices=("tail", "chebyshev"), help="planning rule")
    p.add_argument("--alpha", type=_real, metavar="REAL", help="rate exponent for the tail plan")
    _add_points(p)
    _add_sum_eps(p)
    _add_output(p)
    p.set_defaults(run=cmd_plan)

    p = sub.add_parser("verify", help="check bounds pointwise",
                       description="Compare observed errors with the theorem or truncation bound.")
    _add_op(p)
    _add_function(p, tail=True, sup_norm=True)
    _add_points(p)
    p.add_argument("--target", choices=("theorem", "truncation"), default="theorem",
                   help="bound to check (default theorem)")
    _add_truncate(p)
    _add_hoelder(p)
    _add_sum_eps(p)
    _add_output(p)
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("rate", help="fit an empirical convergence rate",
                       description="Fit log(sup-grid error) against log(n).")
    _add_op(p, degree=False)
    _add_function(p, tail=True, sup_norm=True)
    _add_points(p)
    p.add_argument("--n-list", required=True, metavar="N1,N2,...", help="increasing degrees, at least 4")
    _add_truncate(p)
    _add_sum_eps(p)
    _add_output(p)
    p.set_defaults(run=cmd_rate)
    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        text = args.run(args)
        _emit(text, args.out)
    except SystemExit as exc:
        # --help and --version
        return 0 if exc.code in (None, 0) else 1
    except (UsageError, ProbApproxError, ValueError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"{PROG}: error: {message}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
