"""Time the numba and numpy kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from csstack import _accel, kernels
from csstack.learners.tree import grow_tree


def cases(rng):
    X = rng.normal(size=(2000, 10))
    y = (X[:, 0] + rng.normal(size=2000) > 0).astype(float)
    w = np.ones(2000)
    tree = grow_tree(X, y, w, max_depth=8, min_leaf=2)
    Xq = rng.normal(size=(500, 10))
    raw = np.sort(rng.uniform(size=20000))
    yr = (rng.uniform(size=20000) < raw).astype(float)
    return {
        "best_split": lambda: kernels.best_split(X, y, w, 1.0),
        "tree_predict": lambda: tree.predict(X),
        "knn_scores": lambda: kernels.knn_scores(X, y, w, Xq, 7),
        "pava": lambda: kernels.pava_sorted(yr, np.ones_like(yr)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed")
    fns = cases(np.random.default_rng(0))
    print(f"{'kernel':<14}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    saved = _accel.USE_NUMBA
    try:
        for name, fn in fns.items():
            best = {}
            for flag in (True, False):
                _accel.USE_NUMBA = flag
                fn()  # JIT warm-up
                best[flag] = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
            print(f"{name:<14}{best[True]:>12.2f}{best[False]:>12.2f}{best[False] / best[True]:>9.1f}x")
    finally:
        _accel.USE_NUMBA = saved


if __name__ == "__main__":
    main()
