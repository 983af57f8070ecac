"""Experiments that hold computed approximations against the proven bounds."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .bounds import operator_bound, plan_truncation_chebyshev, plan_truncation_tail, tail_truncation_bound
from .distributions import PmfKind, PmfSpec, tail_prob
from .errors import ConfigError, ProbApproxError, RateError
from .funcspec import FunctionSpec, HoelderSpec
from .operators import (
    ChebyshevRule,
    Fixed,
    Lattice,
    NoTruncation,
    OperatorConfig,
    TailRule,
    TruncationPlan,
    evaluate_config,
    full_cutoff,
    tail_alpha,
    truncation_index,
    truncated_eval,
)

REL_SLACK = 1e-9
ABS_SLACK = 1e-12
NOISE_FLOOR = 1e-15

CSV_COLUMNS = ("x", "f", "approx", "abs_error", "bound", "certified", "satisfied")


def is_satisfied(abs_error: float, bound: float, certified: bool) -> bool:
    if not certified:
        return True
    return abs_error <= bound * (1.0 + REL_SLACK) + ABS_SLACK


@dataclass
class ReportRow:
    x: float
    f_of_x: float
    approx: float
    abs_error: float
    bound_value: float
    bound_certified: bool
    satisfied: bool
    note: str = ""


@dataclass
class Summary:
    max_abs_error: float
    max_ratio: float
    all_satisfied: bool


@dataclass
class ErrorReport:
    metadata: dict
    rows: list = field(default_factory=list)
    summary: Optional[Summary] = None

    def __post_init__(self):
        if self.summary is None:
            self.summary = summarize(self.rows)

    def to_dict(self) -> dict:
        return {
            "type": "ErrorReport",
            "metadata": self.metadata,
            "rows": [asdict(r) for r in self.rows],
            "summary": asdict(self.summary),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ErrorReport":
        return cls(
            metadata=data["metadata"],
            rows=[ReportRow(**r) for r in data["rows"]],
            summary=Summary(**data["summary"]),
        )


def summarize(rows) -> Summary:
    finite_errors = [r.abs_error for r in rows if not math.isnan(r.abs_error)]
    max_err = max(finite_errors, default=0.0)
    ratio = 0.0
    for r in rows:
        if not r.bound_certified or math.isnan(r.abs_error):
            continue
        if r.bound_value > 0.0:
            ratio = max(ratio, r.abs_error / r.bound_value)
        elif r.abs_error > 0.0:
            ratio = math.inf
    return Summary(max_err, ratio, all(r.satisfied for r in rows))


@dataclass
class RateFit:
    n_values: list
    errors: list
    slope: float
    intercept: float
    r_squared: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"type": "RateFit", **asdict(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "RateFit":
        data = {k: v for k, v in data.items() if k != "type"}
        return cls(**data)


def _metadata(kind, n, plan, f: FunctionSpec, hoelder: Optional[HoelderSpec], sum_eps, **extra) -> dict:
    meta = {
        "operator": {PmfKind.BINOMIAL: "bernstein", PmfKind.POISSON: "szasz", PmfKind.PASCAL: "baskakov"}[kind],
        "kind": kind.value,
        "n": n,
        "truncation": str(plan),
        "function": f.name,
        "expression": f.text,
        "hoelder": None if hoelder is None else asdict(hoelder),
        "sum_eps": sum_eps,
    }
    meta.update(extra)
    return meta


def _error_row(x, note, f_of_x=math.nan):
    return ReportRow(x, f_of_x, math.nan, math.nan, math.nan, False, False, note)


def _truncation_extra(config: OperatorConfig, f: FunctionSpec, x: float, m: Optional[int], lattice: Lattice):
    """Additional bound for the omitted terms when a truncation plan is active."""
    plan = config.truncation
    if m is None or x == 0.0:
        return 0.0, True
    spec = PmfSpec(config.kind, config.n, x)
    if isinstance(plan, ChebyshevRule):
        if f.sup_norm is None:
            return math.inf, False
        return plan_truncation_chebyshev(config.kind, config.n, x, f.sup_norm)[1], True
    full = max(full_cutoff(spec, config.sum_eps), m)
    if full <= m:
        return 0.0, True
    sup_tail = float(np.max(np.abs(lattice.upto(full)[m + 1:])))
    return tail_truncation_bound(sup_tail, tail_prob(spec, m)), True


def verify_bounds(config: OperatorConfig, f: FunctionSpec, grid, hoelder: Optional[HoelderSpec] = None) -> ErrorReport:
    """Pointwise ``|f(x) - S(f; x)|`` against the matching theorem bound.

    Under a truncation plan the truncation-error bound is added to the
    theorem bound.
    """
    h = hoelder or f.hoelder
    if h is None:
        raise ConfigError(f"{f.name} carries no Hoelder constants; pass them explicitly")
    notes = []
    if config.kind is not PmfKind.BINOMIAL and f.sup_norm is None and isinstance(config.truncation, NoTruncation):
        notes.append("unbounded-tail: bound not certified")
    lattice = Lattice(f, config.n)
    rows = []
    for x in (float(v) for v in grid):
        try:
            fx = f(x)
        except ProbApproxError as exc:
            rows.append(_error_row(x, str(exc)))
            continue
        try:
            approx = evaluate_config(config, f, x, lattice)
            bound = operator_bound(config.kind, h, config.n, x)
            m = truncation_index(config.truncation, config.kind, f, config.n, x)
            extra, extra_ok = _truncation_extra(config, f, x, m, lattice)
        except ProbApproxError as exc:
            rows.append(_error_row(x, str(exc), fx))
            continue
        err = abs(fx - approx)
        value = bound.value + extra
        certified = bound.certified and extra_ok
        rows.append(ReportRow(x, fx, approx, err, value, certified, is_satisfied(err, value, certified)))
    meta = _metadata(config.kind, config.n, config.truncation, f, h, config.sum_eps, check="theorem")
    if notes:
        meta["notes"] = notes
    return ErrorReport(meta, rows)


def verify_truncation(kind: PmfKind, f: FunctionSpec, n: int, plan: TruncationPlan, grid,
                      sum_eps: float = 1e-14) -> ErrorReport:
    """Pointwise ``|S(f; x) - S~_m(f; x)|`` against the truncation bound.

    ``approx`` holds the truncated value and ``f`` the full series value.
    The full series runs to ``max(cutoff, m)`` so it always contains the
    truncated terms.
    """
    kind = PmfKind.parse(kind) if isinstance(kind, str) else kind
    if isinstance(plan, NoTruncation):
        raise ConfigError("verify_truncation needs a fixed, tail or chebyshev plan")
    if isinstance(plan, TailRule) and f.tail is None:
        raise ConfigError(f"tail-rule truncation needs a tail function for {f.name}")
    if isinstance(plan, ChebyshevRule) and f.sup_norm is None:
        raise ConfigError(f"Chebyshev truncation needs sup_norm for {f.name}")
    lattice = Lattice(f, n)
    extra = {"check": "truncation"}
    if isinstance(plan, TailRule):
        extra["m"] = plan_truncation_tail(f.tail, n, tail_alpha(plan, f))
    elif isinstance(plan, Fixed):
        extra["m"] = plan.m
    rows = []
    for x in (float(v) for v in grid):
        try:
            spec = PmfSpec(kind, n, x)
            m = truncation_index(plan, kind, f, n, x)
            top = max(full_cutoff(spec, sum_eps), m)
            if kind is PmfKind.BINOMIAL:
                top = spec.n
            full = truncated_eval(kind, f, n, top, x)
            trunc = truncated_eval(kind, f, n, m, x)
            if isinstance(plan, ChebyshevRule):
                if x == 0.0:
                    value, certified = 0.0, True
                else:
                    value, certified = plan_truncation_chebyshev(kind, n, x, f.sup_norm)[1], True
            else:
                tail_vals = lattice.upto(top)[m + 1:]
                sup_tail = float(np.max(np.abs(tail_vals))) if len(tail_vals) else 0.0
                value, certified = tail_truncation_bound(sup_tail, tail_prob(spec, m)), True
        except ProbApproxError as exc:
            rows.append(_error_row(x, str(exc)))
            continue
        err = abs(full - trunc)
        rows.append(ReportRow(x, full, trunc, err, value, certified, is_satisfied(err, value, certified)))
    meta = _metadata(kind, n, plan, f, f.hoelder, sum_eps, **extra)
    return ErrorReport(meta, rows)


def fit_loglog(n_values, errors) -> tuple[float, float, float]:
    """Least-squares line through ``(ln n, ln error)``: slope, intercept, R^2.

    Closed form with exactly rounded sums and libm logs, so the fit is
    byte-reproducible across BLAS builds and SIMD dispatch.
    """
    lx = [math.log(float(n)) for n in n_values]
    ly = [math.log(float(e)) for e in errors]
    count = len(lx)
    mx, my = math.fsum(lx) / count, math.fsum(ly) / count
    dx = [v - mx for v in lx]
    dy = [v - my for v in ly]
    sxx = math.fsum(a * a for a in dx)
    slope = math.fsum(a * b for a, b in zip(dx, dy)) / sxx
    intercept = my - slope * mx
    ss_res = math.fsum((b - slope * a) ** 2 for a, b in zip(dx, dy))
    ss_tot = math.fsum(b * b for b in dy)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return slope, intercept, min(1.0, max(0.0, r2))


def convergence_rate(kind: PmfKind, f: FunctionSpec, grid, n_values, use_truncation: TruncationPlan = NoTruncation(),
                     sum_eps: float = 1e-14) -> RateFit:
    """Empirical exponent of the sup-grid error as ``n`` grows."""
    kind = PmfKind.parse(kind) if isinstance(kind, str) else kind
    n_values = [int(n) for n in n_values]
    if len(n_values) < 4:
        raise RateError("need at least 4 values of n")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise RateError("n values must be strictly increasing")
    grid = [float(x) for x in grid]
    fx = [f(x) for x in grid]
    kept_n, kept_err = [], []
    for n in n_values:
        config = OperatorConfig(kind, n, sum_eps, use_truncation)
        lattice = Lattice(f, n)
        err = max(abs(v - evaluate_config(config, f, x, lattice)) for x, v in zip(grid, fx))
        if err > NOISE_FLOOR:
            kept_n.append(n)
            kept_err.append(err)
    if len(kept_n) < 4:
        raise RateError(f"only {len(kept_n)} n values have errors above the noise floor {NOISE_FLOOR}")
    slope, intercept, r2 = fit_loglog(kept_n, kept_err)
    meta = {
        "kind": kind.value,
        "function": f.name,
        "expression": f.text,
        "truncation": str(use_truncation),
        "grid_points": len(grid),
    }
    return RateFit(kept_n, kept_err, slope, intercept, r2, meta)


# ---------------------------------------------------------------------------
# Serialization


def fmt_float(v: float) -> str:
    """17 significant digits; round-trips any double."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _csv_text(report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if isinstance(report, ErrorReport):
        writer.writerow(CSV_COLUMNS)
        for r in report.rows:
            writer.writerow([fmt_float(r.x), fmt_float(r.f_of_x), fmt_float(r.approx), fmt_float(r.abs_error),
                             fmt_float(r.bound_value), fmt_float(r.bound_certified), fmt_float(r.satisfied)])
    elif isinstance(report, RateFit):
        writer.writerow(("n", "error", "slope", "intercept", "r_squared"))
        for n, e in zip(report.n_values, report.errors):
            writer.writerow([str(n), fmt_float(e), fmt_float(report.slope), fmt_float(report.intercept),
                             fmt_float(report.r_squared)])
    else:
        raise TypeError(f"cannot serialize {type(report).__name__}")
    return buf.getvalue()


def _json_text(report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def render_report(report, format: str = "csv") -> str:  # noqa: A002
    if format == "csv":
        return _csv_text(report)
    if format == "json":
        return _json_text(report)
    raise ConfigError(f"unknown format {format!r}; use csv or json")


def write_report(report: Union[ErrorReport, RateFit], format: str = "csv", destination=None) -> None:  # noqa: A002
    """Write ``report`` as CSV or JSON to a path, or to stdout when ``destination`` is None/'-'."""
    text = render_report(report, format)
    if destination is None or destination == "-":
        sys.stdout.write(text)
        return
    path = Path(destination)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report: {exc.strerror}", str(path)) from exc


def load_report(text: str):
    data = json.loads(text)
    if data.get("type") == "RateFit":
        return RateFit.from_dict(data)
    return ErrorReport.from_dict(data)
