"""Benchmark the RK4 propagation kernel: compiled extension vs pure Python.

The propagation loop is the only sequential hot path in the package (one
call per solve, thousands of dependent steps); everything else is
numpy-vectorized.  Usage:

    python benchmarks/bench_rk4.py [--sizes 10001,100001] [--repeats 7]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from solvforge._rk4_py import rk4_propagate as rk4_python

try:
    from solvforge._rk4_cy import rk4_propagate as rk4_cython
except ImportError:
    rk4_cython = None


def _inputs(n: int):
    r = np.linspace(0.0, 10.0, n)
    step = r[1] - r[0]
    # representative profile: shallow well plus oscillatory spectral term
    q = -2.0 / np.cosh(r) ** 2 - 2.5
    qd = 4.0 * np.tanh(r) / np.cosh(r) ** 2
    qm = 0.5 * (q[:-1] + q[1:]) + (step / 8.0) * (qd[:-1] - qd[1:])
    return q, qm, float(step)


def _time(fn, q, qm, step, repeats: int) -> float:
    t = timeit.repeat(lambda: fn(q, qm, step, 0.0, 1.0), number=1, repeat=repeats)
    return min(t)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="10001,100001",
                    help="comma-separated node counts")
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"{'nodes':>8}  {'python':>12}  {'cython':>12}  {'per step':>10}  {'speedup':>8}")
    for n in sizes:
        q, qm, step = _inputs(n)
        t_py = _time(rk4_python, q, qm, step, args.repeats)
        if rk4_cython is not None:
            p, d = rk4_cython(q, qm, step, 0.0, 1.0)
            p2, d2 = rk4_python(q, qm, step, 0.0, 1.0)
            assert np.array_equal(p, p2) and np.array_equal(d, d2), "backend mismatch"
            t_cy = _time(rk4_cython, q, qm, step, args.repeats)
            print(
                f"{n:>8}  {t_py * 1e3:>10.3f} ms  {t_cy * 1e3:>10.3f} ms"
                f"  {t_cy / (n - 1) * 1e9:>7.1f} ns  {t_py / t_cy:>7.1f}x"
            )
        else:
            print(f"{n:>8}  {t_py * 1e3:>10.3f} ms  {'(not built)':>12}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
