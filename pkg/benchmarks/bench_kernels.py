"""Time each compiled kernel against its numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel: best-of-N wall time for both versions and the
speed-up. The compiled versions are warmed up first so JIT time is excluded.
"""
import argparse
import timeit

import numpy as np

from activecoreset import kernels


def cases(rng):
    pts2 = rng.standard_normal((400, 2))
    nodes = rng.random((5000, 2))
    x = rng.random(2)
    A, b = rng.standard_normal((8, 3)), rng.random(8)
    pts3 = rng.standard_normal((20_000, 3))
    M = rng.standard_normal((3, 3))
    img = rng.integers(0, 256, (150, 200)).astype(np.uint8)
    px = rng.uniform(0, 200, (20_000, 2))
    S = rng.random((500, 3, 2))
    idx = rng.integers(0, 500, 20_000)
    bary = rng.dirichlet(np.ones(3), 20_000)
    w0 = np.full(len(pts2), 1.0 / len(pts2))
    return {
        "khachiyan": lambda f: f(pts2, w0.copy(), 1e-5, 100_000),
        "nearest": lambda f: f(nodes, len(nodes), x),
        "radius_neighbors": lambda f: f(nodes, len(nodes), x, 0.05),
        "halfspace_contains": lambda f: f(A, b, pts3, 1e-12),
        "quadform": lambda f: f(np.zeros(3), M @ M.T, pts3),
        "l1_frame": lambda f: f(pts3, np.zeros(3), M),
        "bitmap_lookup": lambda f: f(img, np.zeros(2), 1.0, px, 128),
        "simplex_points": lambda f: f(S, idx, bary),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=10)
    args = ap.parse_args(argv)
    if not kernels._HAVE_NUMBA:
        print("numba is not installed; only the numpy versions exist")
    print(f"{'kernel':<20}{'numba ms':>12}{'numpy ms':>12}{'speed-up':>10}")
    for name, call in cases(np.random.default_rng(0)).items():
        fast, slow = kernels.IMPLS[name]
        call(fast)
        t_fast = min(timeit.repeat(lambda: call(fast), number=args.number, repeat=args.repeat)) / args.number
        t_slow = min(timeit.repeat(lambda: call(slow), number=args.number, repeat=args.repeat)) / args.number
        print(f"{name:<20}{t_fast * 1e3:>12.3f}{t_slow * 1e3:>12.3f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
