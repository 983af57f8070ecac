# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; operation-for-operation twin of ``_pykernels``."""

import math

import numpy as np

from libc.math cimport log, log1p, exp, floor, fabs, frexp, ldexp, isfinite, INFINITY, NAN
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, realloc, free

cdef enum:
    BINOMIAL = 0
    POISSON = 1
    PASCAL = 2

cdef double LN_2PI = 1.8378770664093456
cdef double TAIL_FLOOR = 1e-30
cdef double NEG_INF = -INFINITY

cdef double[16] _SFERR
_SFERR[:] = [
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
]

cdef double _S0 = 1.0 / 12.0
cdef double _S1 = 1.0 / 360.0
cdef double _S2 = 1.0 / 1260.0
cdef double _S3 = 1.0 / 1680.0
cdef double _S4 = 1.0 / 1188.0


cdef double _stirlerr(double n) noexcept nogil:
    cdef double nn
    if n <= 15.0:
        return _SFERR[<int>n]
    nn = n * n
    if n > 500.0:
        return (_S0 - _S1 / nn) / n
    if n > 80.0:
        return (_S0 - (_S1 - _S2 / nn) / nn) / n
    if n > 35.0:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


cdef double _bd0(double x, double np_) noexcept nogil:
    cdef double v, s, ej, s1
    cdef int j
    if fabs(x - np_) < 0.1 * (x + np_):
        v = (x - np_) / (x + np_)
        s = (x - np_) * v
        ej = 2.0 * x * v
        v = v * v
        j = 1
        while j < 1000:
            ej = ej * v
            s1 = s + ej / <double>(2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
        return s
    return x * log(x / np_) + np_ - x


cdef double _log_dbinom_raw(double x, double n, double p, double q) noexcept nogil:
    cdef double lc, lf
    if p == 0.0:
        return 0.0 if x == 0.0 else NEG_INF
    if q == 0.0:
        return 0.0 if x == n else NEG_INF
    if x == 0.0:
        if n == 0.0:
            return 0.0
        if p < 0.1:
            return -_bd0(n, n * q) - n * p
        return n * log(q)
    if x == n:
        if q < 0.1:
            return -_bd0(n, n * p) - n * q
        return n * log(p)
    if x < 0.0 or x > n:
        return NEG_INF
    lc = _stirlerr(n) - _stirlerr(x) - _stirlerr(n - x) - _bd0(x, n * p) - _bd0(n - x, n * q)
    lf = LN_2PI + log(x) + log1p(-x / n)
    return lc - 0.5 * lf


cdef double _log_pmf(int kind, long n, double x, long k) noexcept nogil:
    cdef double fn = <double>n
    cdef double fk = <double>k
    cdef double lam, p, q
    if kind == BINOMIAL:
        if k > n:
            return NEG_INF
        return _log_dbinom_raw(fk, fn, x, 1.0 - x)
    if kind == POISSON:
        lam = fn * x
        if lam == 0.0:
            return 0.0 if k == 0 else NEG_INF
        if k == 0:
            return -lam
        return -_stirlerr(fk) - _bd0(fk, lam) - 0.5 * (LN_2PI + log(fk))
    if x == 0.0:
        return 0.0 if k == 0 else NEG_INF
    p = 1.0 / (1.0 + x)
    q = x / (1.0 + x)
    return _log_dbinom_raw(fn, fn + fk, p, q) - log1p(fk / fn)


cdef double _pmf(int kind, long n, double x, long k) noexcept nogil:
    cdef double lp = _log_pmf(kind, n, x, k)
    if lp == NEG_INF:
        return 0.0
    return exp(lp)


cdef long _mode(int kind, long n, double x) noexcept nogil:
    cdef long md
    if kind == BINOMIAL:
        md = <long>floor(<double>(n + 1) * x)
        return n if md > n else md
    if kind == POISSON:
        return <long>floor(<double>n * x)
    return <long>floor(<double>(n - 1) * x)


cdef double _ratio(int kind, long n, double x, long k) noexcept nogil:
    if kind == BINOMIAL:
        return <double>(n - k) / (<double>k + 1.0) * (x / (1.0 - x))
    if kind == POISSON:
        return (<double>n * x) / (<double>k + 1.0)
    return <double>(n + k) / (<double>k + 1.0) * (x / (1.0 + x))


cdef long _degenerate_atom(int kind, long n, double x) noexcept nogil:
    if x == 0.0:
        return 0
    if kind == BINOMIAL and x == 1.0:
        return n
    return -1


# Exactly rounded streaming summation (Shewchuk partials, CPython fsum rounding).
cdef struct FSum:
    double* p
    Py_ssize_t n
    Py_ssize_t cap
    bint bad


cdef int _fsum_init(FSum* s) noexcept nogil:
    s.cap = 32
    s.n = 0
    s.bad = 0
    s.p = <double*>malloc(s.cap * sizeof(double))
    return 0 if s.p != NULL else -1


cdef void _fsum_free(FSum* s) noexcept nogil:
    if s.p != NULL:
        free(s.p)
        s.p = NULL


cdef int _fsum_add(FSum* s, double x) noexcept nogil:
    cdef Py_ssize_t i = 0, j
    cdef double y, t, hi, lo, yr
    cdef double* grown
    if s.bad:
        return 0
    if not isfinite(x):
        s.bad = 1
        return 0
    for j in range(s.n):
        y = s.p[j]
        if fabs(x) < fabs(y):
            t = x
            x = y
            y = t
        hi = x + y
        yr = hi - x
        lo = y - yr
        if lo != 0.0:
            s.p[i] = lo
            i += 1
        x = hi
    s.n = i
    if x != 0.0:
        if not isfinite(x):
            s.bad = 1
            return 0
        if s.n >= s.cap:
            grown = <double*>realloc(s.p, 2 * s.cap * sizeof(double))
            if grown == NULL:
                return -1
            s.p = grown
            s.cap = 2 * s.cap
        s.p[s.n] = x
        s.n += 1
    return 0


cdef double _fsum_result(FSum* s) noexcept nogil:
    cdef Py_ssize_t n = s.n
    cdef double hi = 0.0, lo = 0.0, x, y, yr
    if s.bad:
        return NAN
    if n > 0:
        n -= 1
        hi = s.p[n]
        while n > 0:
            x = hi
            n -= 1
            y = s.p[n]
            hi = x + y
            yr = hi - x
            lo = y - yr
            if lo != 0.0:
                break
        if n > 0 and ((lo < 0.0 and s.p[n - 1] < 0.0) or (lo > 0.0 and s.p[n - 1] > 0.0)):
            y = lo * 2.0
            x = hi + y
            yr = x - hi
            if y == yr:
                hi = x
    return hi


# Fixed-point accumulator: every double below 2**1000 is an integer multiple
# of 2**-LONG_OFFSET, kept as 32-bit digits in int64 limbs.  Each add moves a
# limb by under 2**33, so LONG_MAX_ADDS adds never overflow and carries wait
# until the end.  The exact total is rounded once, giving the same bits as fsum.
cdef enum:
    LONG_LIMBS = 72
    LONG_OFFSET = 1126
    LONG_MAX_ADDS = 1 << 23

cdef double LONG_CEILING = 2.0 ** 1000
_LONG_SCALE = 2 ** 1126
cdef int64_t DIGIT_MASK = 4294967295

cdef struct LongAcc:
    int64_t d[LONG_LIMBS]
    Py_ssize_t adds
    bint big


cdef void _long_init(LongAcc* a) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(LONG_LIMBS):
        a.d[i] = 0
    a.adds = 0
    a.big = 0


cdef void _long_add(LongAcc* a, double v) noexcept nogil:
    """Exact ``+= v``; flags values fsum might overflow on so callers fall back."""
    cdef int e
    cdef int64_t mant, lo, hi
    cdef Py_ssize_t pos, i
    cdef int shift
    if v == 0.0 or a.big:
        return
    if not isfinite(v) or fabs(v) >= LONG_CEILING or a.adds >= LONG_MAX_ADDS:
        a.big = 1
        return
    mant = <int64_t>ldexp(fabs(frexp(v, &e)), 53)
    pos = e - 53 + LONG_OFFSET
    i = pos >> 5
    shift = pos & 31
    lo = (mant & DIGIT_MASK) << shift
    hi = (mant >> 32) << shift
    if v > 0.0:
        a.d[i] += lo & DIGIT_MASK
        a.d[i + 1] += (lo >> 32) + (hi & DIGIT_MASK)
        a.d[i + 2] += hi >> 32
    else:
        a.d[i] -= lo & DIGIT_MASK
        a.d[i + 1] -= (lo >> 32) + (hi & DIGIT_MASK)
        a.d[i + 2] -= hi >> 32
    a.adds += 1


cdef double _long_result(LongAcc* a):
    cdef Py_ssize_t i
    total = 0
    for i in range(LONG_LIMBS - 1, -1, -1):
        total = (total << 32) + a.d[i]
    return total / _LONG_SCALE


def stirlerr(double n):
    return _stirlerr(n)


def bd0(double x, double np_):
    return _bd0(x, np_)


def log_pmf(int kind, long n, double x, long k):
    return _log_pmf(kind, n, x, k)


def pmf(int kind, long n, double x, long k):
    return _pmf(kind, n, x, k)


def mode(int kind, long n, double x):
    return _mode(kind, n, x)


def tail_prob(int kind, long n, double x, long m):
    """P[K > m] as an exactly rounded sum of the upper terms."""
    cdef long atom = _degenerate_atom(kind, n, x)
    cdef long md, k
    cdef double p, r, total
    cdef LongAcc acc
    if atom >= 0:
        return 1.0 if m < atom else 0.0
    _long_init(&acc)
    with nogil:
        md = _mode(kind, n, x)
        k = m + 1
        while True:
            if kind == BINOMIAL and k > n:
                break
            p = _pmf(kind, n, x, k)
            _long_add(&acc, p)
            if k > md:
                if p == 0.0:
                    break
                r = _ratio(kind, n, x, k)
                if r < 1.0 and p * r <= TAIL_FLOOR * (1.0 - r):
                    break
            k += 1
    if acc.big:
        return math.fsum(tail_terms(kind, n, x, m).tolist())
    total = _long_result(&acc)
    return 1.0 if total > 1.0 else total


def tail_terms(int kind, long n, double x, long m):
    """The masses ``tail_prob`` sums: ``p[m+1], ...`` up to its stopping index."""
    cdef long atom = _degenerate_atom(kind, n, x)
    cdef long md, k
    cdef double p, r
    if atom >= 0:
        return np.array([1.0] if m < atom else [], dtype=np.float64)
    terms = []
    md = _mode(kind, n, x)
    k = m + 1
    while True:
        if kind == BINOMIAL and k > n:
            break
        p = _pmf(kind, n, x, k)
        terms.append(p)
        if k > md:
            if p == 0.0:
                break
            r = _ratio(kind, n, x, k)
            if r < 1.0 and p * r <= TAIL_FLOOR * (1.0 - r):
                break
        k += 1
    return np.array(terms, dtype=np.float64)


def pmf_array(int kind, long n, double x, long m):
    out = np.empty(m + 1, dtype=np.float64)
    cdef double[::1] view = out
    cdef long k
    with nogil:
        for k in range(m + 1):
            view[k] = _pmf(kind, n, x, k)
    return out


def exact_dot(values, weights):
    """Correctly rounded sum of ``values[k] * weights[k]``; NaN on overflow."""
    cdef const double[::1] a = np.ascontiguousarray(values, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t i, length = min(a.shape[0], b.shape[0])
    cdef double total
    cdef LongAcc fast
    cdef FSum acc
    _long_init(&fast)
    with nogil:
        for i in range(length):
            _long_add(&fast, a[i] * b[i])
    if not fast.big:
        return _long_result(&fast)
    if _fsum_init(&acc) != 0:
        raise MemoryError()
    with nogil:
        for i in range(length):
            _fsum_add(&acc, a[i] * b[i])
        total = _fsum_result(&acc)
        _fsum_free(&acc)
    return total


def weighted_sum(int kind, long n, double x, fvals, long m):
    cdef const double[::1] f = np.ascontiguousarray(fvals, dtype=np.float64)
    cdef long k
    cdef double total
    cdef LongAcc fast
    cdef FSum acc
    if f.shape[0] < m + 1:
        raise ValueError("fvals shorter than m + 1")
    _long_init(&fast)
    with nogil:
        for k in range(m + 1):
            _long_add(&fast, f[k] * _pmf(kind, n, x, k))
            if fast.big:
                break
    if not fast.big:
        return _long_result(&fast)
    if _fsum_init(&acc) != 0:
        raise MemoryError()
    with nogil:
        for k in range(m + 1):
            _fsum_add(&acc, f[k] * _pmf(kind, n, x, k))
        total = _fsum_result(&acc)
        _fsum_free(&acc)
    return total
