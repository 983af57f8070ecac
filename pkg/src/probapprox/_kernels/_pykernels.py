"""Pure-Python reference kernels.

Every routine here has a twin in ``_ckernels.pyx`` performing the same IEEE
operations in the same order, so both backends return identical bits.  Keep
them in lockstep when editing either file.

PMF terms use Loader's saddle-point form of the log-gamma ratios
(``stirlerr`` + ``bd0``), which stays accurate to a few ulps for large
``n`` and ``k`` where differences of ``lgamma`` values lose digits.
"""

import math

import numpy as np

BINOMIAL = 0
POISSON = 1
PASCAL = 2

LN_2PI = 1.8378770664093456
# Tail sums stop once the geometric remainder bound drops below this mass.
TAIL_FLOOR = 1e-30

# lgamma(n + 1) - (n + 1/2) log(n) + n - log(sqrt(2 pi)), n = 0..15
_SFERR = (
    0.0,
    0.08106146679532726,
    0.0413406959554093,
    0.02767792568499834,
    0.020790672103765093,
    0.016644691189821193,
    0.013876128823070748,
    0.01189670994589177,
    0.010411265261972096,
    0.009255462182712733,
    0.00833056343336287,
    0.007573675487951841,
    0.00694284010720953,
    0.006408994188004207,
    0.0059513701127588475,
    0.005554733551962801,
)

_S0 = 1.0 / 12.0
_S1 = 1.0 / 360.0
_S2 = 1.0 / 1260.0
_S3 = 1.0 / 1680.0
_S4 = 1.0 / 1188.0

NEG_INF = -math.inf


def stirlerr(n):
    if n <= 15.0:
        return _SFERR[int(n)]
    nn = n * n
    if n > 500.0:
        return (_S0 - _S1 / nn) / n
    if n > 80.0:
        return (_S0 - (_S1 - _S2 / nn) / nn) / n
    if n > 35.0:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


def bd0(x, np_):
    """Deviance term ``x log(x/np) + np - x`` without cancellation."""
    if abs(x - np_) < 0.1 * (x + np_):
        v = (x - np_) / (x + np_)
        s = (x - np_) * v
        ej = 2.0 * x * v
        v = v * v
        j = 1
        while j < 1000:
            ej = ej * v
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
        return s
    return x * math.log(x / np_) + np_ - x


def log_dbinom_raw(x, n, p, q):
    if p == 0.0:
        return 0.0 if x == 0.0 else NEG_INF
    if q == 0.0:
        return 0.0 if x == n else NEG_INF
    if x == 0.0:
        if n == 0.0:
            return 0.0
        if p < 0.1:
            return -bd0(n, n * q) - n * p
        return n * math.log(q)
    if x == n:
        if q < 0.1:
            return -bd0(n, n * p) - n * q
        return n * math.log(p)
    if x < 0.0 or x > n:
        return NEG_INF
    lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q)
    lf = LN_2PI + math.log(x) + math.log1p(-x / n)
    return lc - 0.5 * lf


def log_pmf(kind, n, x, k):
    fn = float(n)
    fk = float(k)
    if kind == BINOMIAL:
        if k > n:
            return NEG_INF
        return log_dbinom_raw(fk, fn, x, 1.0 - x)
    if kind == POISSON:
        lam = fn * x
        if lam == 0.0:
            return 0.0 if k == 0 else NEG_INF
        if k == 0:
            return -lam
        return -stirlerr(fk) - bd0(fk, lam) - 0.5 * (LN_2PI + math.log(fk))
    # Pascal: n/(n+k) * dbinom(n; n+k, 1/(1+x))
    if x == 0.0:
        return 0.0 if k == 0 else NEG_INF
    p = 1.0 / (1.0 + x)
    q = x / (1.0 + x)
    return log_dbinom_raw(fn, fn + fk, p, q) - math.log1p(fk / fn)


def pmf(kind, n, x, k):
    lp = log_pmf(kind, n, x, k)
    if lp == NEG_INF:
        return 0.0
    return math.exp(lp)


def mode(kind, n, x):
    if kind == BINOMIAL:
        return min(n, int(math.floor((n + 1) * x)))
    if kind == POISSON:
        return int(math.floor(n * x))
    return int(math.floor((n - 1) * x))


def ratio(kind, n, x, k):
    """``p(k+1) / p(k)``; only called past the mode with nondegenerate ``x``."""
    if kind == BINOMIAL:
        return (n - k) / (k + 1.0) * (x / (1.0 - x))
    if kind == POISSON:
        return (n * x) / (k + 1.0)
    return (n + k) / (k + 1.0) * (x / (1.0 + x))


def _degenerate_atom(kind, n, x):
    """Index of the point mass for degenerate parameters, else -1."""
    if x == 0.0:
        return 0
    if kind == BINOMIAL and x == 1.0:
        return n
    return -1


def tail_terms(kind, n, x, m):
    """The masses ``tail_prob`` sums: ``p[m+1], ...`` up to its stopping index."""
    atom = _degenerate_atom(kind, n, x)
    if atom >= 0:
        return np.array([1.0] if m < atom else [], dtype=np.float64)
    md = mode(kind, n, x)
    terms = []
    k = m + 1
    while True:
        if kind == BINOMIAL and k > n:
            break
        p = pmf(kind, n, x, k)
        terms.append(p)
        if k > md:
            if p == 0.0:
                break
            r = ratio(kind, n, x, k)
            if r < 1.0 and p * r <= TAIL_FLOOR * (1.0 - r):
                break
        k += 1
    return np.array(terms, dtype=np.float64)


def tail_prob(kind, n, x, m):
    """P[K > m] as an exactly rounded sum of the upper terms."""
    s = math.fsum(tail_terms(kind, n, x, m).tolist())
    return 1.0 if s > 1.0 else s


def pmf_array(kind, n, x, m):
    out = np.empty(m + 1, dtype=np.float64)
    for k in range(m + 1):
        out[k] = pmf(kind, n, x, k)
    return out


def _fsum_or_nan(products):
    for v in products:
        if not math.isfinite(v):
            return math.nan
    try:
        return math.fsum(products)
    except OverflowError:
        return math.nan


def exact_dot(values, weights):
    """Correctly rounded sum of ``values[k] * weights[k]``; NaN on overflow."""
    products = [float(v) * float(w) for v, w in zip(values, weights)]
    return _fsum_or_nan(products)


def weighted_sum(kind, n, x, fvals, m):
    if len(fvals) < m + 1:
        raise ValueError("fvals shorter than m + 1")
    products = [float(fvals[k]) * pmf(kind, n, x, k) for k in range(m + 1)]
    return _fsum_or_nan(products)
