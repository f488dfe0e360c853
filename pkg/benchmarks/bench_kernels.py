#!/usr/bin/env python3
"""Compare the numba and pure-numpy kernel backends on the hot paths.

Usage: python benchmarks/bench_kernels.py [--sizes 25,50,100,200] [--repeats 5]
"""

import argparse
import time

import numpy as np

from countloop.kernels import numpy_impl

try:
    from countloop.kernels import numba_impl
except ImportError:
    numba_impl = None


def make_case(rng, n):
    cx = rng.uniform(60, 960, n)
    cy = rng.uniform(60, 960, n)
    hw = rng.uniform(8, 45, n)
    hh = rng.uniform(8, 45, n)
    return cx, cy, hw, hh


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - started)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="25,50,100,200")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = [("numpy", numpy_impl)]
    if numba_impl is not None:
        # trigger jit compilation outside the timed region
        warm = make_case(np.random.default_rng(0), 8)
        numba_impl.relax_boxes(*warm, 9.0, 0.7, 0.5, 50, 0.0, 1023.0)
        numba_impl.violating_pairs(*warm, 9.0)
        numba_impl.nn_distances(warm[0], warm[1])
        numba_impl.iou_matrix(warm[0] - warm[2], warm[1] - warm[3],
                              warm[0] + warm[2], warm[1] + warm[3])
        backends.append(("numba", numba_impl))
    else:
        print("numba not installed; benchmarking the numpy path only\n")

    kernels = {
        "relax_boxes": lambda impl, case: impl.relax_boxes(
            *case, 9.0, 0.7, 0.5, 200, 0.0, 1023.0),
        "violating_pairs": lambda impl, case: impl.violating_pairs(*case, 9.0),
        "nn_distances": lambda impl, case: impl.nn_distances(case[0], case[1]),
        "iou_matrix": lambda impl, case: impl.iou_matrix(
            case[0] - case[2], case[1] - case[3],
            case[0] + case[2], case[1] + case[3]),
    }

    header = f"{'kernel':<18}{'n':>6}" + "".join(
        f"{name + ' (ms)':>14}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for kernel_name, call in kernels.items():
        for n in sizes:
            case = make_case(np.random.default_rng(42), n)
            times = [time_call(call, impl, case, repeats=args.repeats)
                     for _, impl in [(nm, im) for nm, im in backends]]
            row = f"{kernel_name:<18}{n:>6}"
            for t in times:
                row += f"{t * 1e3:>14.3f}"
            if len(times) == 2 and times[1] > 0:
                row += f"{times[0] / times[1]:>10.1f}x"
            print(row)


if __name__ == "__main__":
    main()
