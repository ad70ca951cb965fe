"""Compare the compiled DP core with the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 500 1000 2000] [--repeats 3]

Both backends are run on the same inputs; outputs are checked for equality
before timings are reported.
"""
import argparse
import time

import numpy as np

from malign.kernels import compiled, fallback


def _best(fn, repeats):
    out, best = None, float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def _same(x, y):
    if isinstance(x, tuple):
        return all(_same(a, b) for a, b in zip(x, y))
    if isinstance(x, np.ndarray):
        return np.array_equal(x, y)
    return x == y


def cases(n, rng):
    a = rng.integers(0, 4, n, dtype=np.uint8)
    b = a.copy()
    hit = rng.random(n) < 0.05
    b[hit] = rng.integers(0, 4, int(hit.sum()), dtype=np.uint8)
    args = (1, -1, -2, -1)
    yield "global", lambda k: k.align_dp(a, b, *args, False, -n, n)
    yield "local", lambda k: k.align_dp(a, b, *args, True, -n, n)
    yield "banded64", lambda k: k.align_dp(a, b, *args, False, -64, 64)
    starts = np.sort(rng.integers(0, 50 * n, n))
    jitter = starts + rng.integers(-20, 20, n)
    lens = rng.integers(15, 40, n)
    yield "chain", lambda k: k.chain_dp(starts, jitter, lens, 100, 64)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if compiled is None:
        print("compiled core not available; build with `pip install -e . --no-build-isolation`")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<10}{'n':>7}{'cython s':>12}{'numpy s':>12}{'speedup':>10}")
    for n in args.sizes:
        for name, run in cases(n, rng):
            fast, tc = _best(lambda: run(compiled), args.repeats)
            slow, tp = _best(lambda: run(fallback), args.repeats)
            if not _same(fast, slow):
                raise SystemExit(f"backends disagree on {name} n={n}")
            print(f"{name:<10}{n:>7}{tc:>12.4f}{tp:>12.4f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
