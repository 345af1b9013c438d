"""Time the compiled and pure-Python extremal kernels on the same problems.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

from decay_cert import _backend
from decay_cert._pykernels import GAMMA_CONSTANT, GAMMA_POWERLAW

PROBLEMS = {
    "bernoulli t<=10": (GAMMA_CONSTANT, 1.0, 0.0, 1.0, 2.0, 0.4, 10.0),
    "powerlaw t<=100": (GAMMA_POWERLAW, 1.0, 0.5, 1.0, 3.0, 0.1, 100.0),
    "powerlaw t<=1e4": (GAMMA_POWERLAW, 1.0, 0.5, 1.0, 3.0, 0.1, 1e4),
}
TOLS = (1e-9, 1e-12, 1e12)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["python"]
    try:
        _backend.get_kernel("cython")
        backends.append("cython")
    except ImportError:
        print("compiled kernel not built; timing the Python kernel only")
    print(f"{'problem':18s} {'steps':>6s} " + " ".join(f"{b + ' [ms]':>14s}" for b in backends) + "  speedup")
    for label, prob in PROBLEMS.items():
        times = {}
        steps = None
        for b in backends:
            kern = _backend.get_kernel(b)
            steps = len(kern(*prob, *TOLS)[0]) - 1
            n = 3
            t = min(timeit.repeat(lambda: kern(*prob, *TOLS), number=n, repeat=args.repeat)) / n
            times[b] = t * 1e3
        row = f"{label:18s} {steps:6d} " + " ".join(f"{times[b]:14.3f}" for b in backends)
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
