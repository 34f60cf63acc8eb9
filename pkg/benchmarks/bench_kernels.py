"""Time the compiled and pure-Python kernels on LU and Lemke.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.
"""
import argparse
import timeit

import numpy as np

from geqnewton import _kernels_py

try:
    from geqnewton import _kernels_c
except ImportError:
    _kernels_c = None


def lu_case(n, rng):
    A = rng.normal(size=(n, n)) + n * np.eye(n)
    return lambda mod: mod.lu_factor(A, 1e-13)


def lemke_case(n, rng):
    L = rng.normal(size=(n, n))
    M = L @ L.T + 0.1 * np.eye(n)
    q = rng.normal(size=n)
    return lambda mod: mod.lemke(M, q, 50 * n)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=20)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)] + ([("cython", _kernels_c)] if _kernels_c else [])
    if _kernels_c is None:
        print("compiled extension not built; timing the Python kernels only")
    print(f"{'kernel':<8}{'n':>5}" + "".join(f"{name + ' [ms]':>16}" for name, _ in backends) + f"{'speedup':>10}")
    for label, make in (("lu", lu_case), ("lemke", lemke_case)):
        for n in (4, 8, 16, 32):
            call = make(n, rng)
            times = []
            for _, mod in backends:
                best = min(timeit.repeat(lambda: call(mod), repeat=args.repeat, number=args.number))
                times.append(1e3 * best / args.number)
            speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
            print(f"{label:<8}{n:>5}" + "".join(f"{t:>16.4f}" for t in times) + speed)


if __name__ == "__main__":
    main()
