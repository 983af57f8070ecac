"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 256] [--x 2.0]

Each row reports the best of ``--repeat`` timings per call and the speedup.
Both backends return bit-identical results, which is checked before timing.
"""

import argparse
import math
import timeit

import numpy as np

from probapprox._kernels import POISSON, PASCAL, BINOMIAL, compiled, pure


def cases(n, x):
    xb = min(x / (1.0 + x), 0.5)
    m = math.ceil(n * x + 12.0 * math.sqrt(n * x * (1.0 + x)) + 20.0)
    fvals = np.sqrt(np.arange(m + 1) / n)
    return [
        ("log_pmf poisson", "log_pmf", (POISSON, n, x, int(n * x))),
        ("log_pmf pascal", "log_pmf", (PASCAL, n, x, int(n * x))),
        ("pmf_array binomial", "pmf_array", (BINOMIAL, n, xb, n)),
        ("tail_prob poisson", "tail_prob", (POISSON, n, x, int(n * x))),
        ("tail_prob pascal", "tail_prob", (PASCAL, n, x, int(n * x))),
        ("weighted_sum poisson", "weighted_sum", (POISSON, n, x, fvals, m)),
        ("weighted_sum pascal", "weighted_sum", (PASCAL, n, x, fvals, m)),
        ("exact_dot", "exact_dot", (fvals, pure.pmf_array(POISSON, n, x, m))),
    ]


def best_per_call(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def same_bits(a, b):
    if isinstance(a, np.ndarray):
        return a.tobytes() == b.tobytes()
    return np.float64(a).tobytes() == np.float64(b).tobytes()


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--n", type=int, default=256)
    parser.add_argument("--x", type=float, default=2.0)
    args = parser.parse_args()
    if compiled is None:
        parser.exit(1, "compiled kernels are not built; reinstall with Cython available\n")

    print(f"n={args.n} x={args.x} best of {args.repeat}")
    print(f"{'kernel':<22}{'python':>12}{'cython':>12}{'speedup':>10}")
    for label, name, call in cases(args.n, args.x):
        fast, slow = getattr(compiled, name), getattr(pure, name)
        if not same_bits(fast(*call), slow(*call)):
            raise SystemExit(f"{label}: backends disagree")
        t_slow = best_per_call(slow, call, args.repeat)
        t_fast = best_per_call(fast, call, args.repeat)
        print(f"{label:<22}{t_slow * 1e6:>10.1f}us{t_fast * 1e6:>10.1f}us{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
