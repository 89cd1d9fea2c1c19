"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is checked for identical output before it is timed.
"""
import argparse
import timeit

import numpy as np

from camcoord import _pykernels
from camcoord.scenario import make_scenario
from camcoord.plangen import UNCONSTRAINED, generate_plan_sets

try:
    from camcoord import _ckernels
except ImportError:
    _ckernels = None


def cases():
    rng = np.random.default_rng(0)
    obstacles = rng.random((100, 100)) < 0.1
    scn = make_scenario("squares4", placement=(4, 4), plan_count=90)
    ps = generate_plan_sets(scn, UNCONSTRAINED)[5]
    indptr, indices, values = ps.csr
    resid = rng.integers(-16, 16, scn.grid.n_cells).astype(np.int64)
    return {
        "line_cells": ((3, 5, 97, 61), {}),
        "visibility_mask": ((obstacles, 50, 50), {}),
        "triangle_counts": (((200.0, 200.0), (355.0, 140.0), (355.0, 260.0), 10.0, 4, 0, 40, 0, 40), {}),
        "plan_deltas": ((resid, indptr, indices, values), {}),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the numpy backend is available")
    print(f"{'kernel':<18}{'numpy ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, (a, kw) in cases().items():
        py = getattr(_pykernels, name)
        t_py = min(timeit.repeat(lambda: py(*a, **kw), number=args.number, repeat=args.repeat))
        t_py = 1e3 * t_py / args.number
        if _ckernels is None:
            print(f"{name:<18}{t_py:>12.3f}{'-':>12}{'-':>10}")
            continue
        cy = getattr(_ckernels, name)
        ref, got = py(*a, **kw), cy(*a, **kw)
        if not np.array_equal(np.asarray(ref), np.asarray(got)):
            raise SystemExit(f"{name}: backends disagree")
        t_cy = min(timeit.repeat(lambda: cy(*a, **kw), number=args.number, repeat=args.repeat))
        t_cy = 1e3 * t_cy / args.number
        print(f"{name:<18}{t_py:>12.3f}{t_cy:>12.3f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
