"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so the comparison does not depend on
MCSGA_BACKEND. Results are checked for equality before timing.
"""

import argparse
import time

import numpy as np

from mcsga import _fallback as py

try:
    from mcsga import _core as core
except ImportError:  # pragma: no cover
    core = None


def _best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    # GA generation: 1000 weight vectors scored on a 4568 x 5 matrix in 10 folds
    n, m = 4568, 5
    conf = rng.random((n, m))
    pos = (rng.random(n) < 0.1).astype(np.int8)
    offsets = np.linspace(0, n, 11).astype(np.intp)
    W = rng.random((1000, m))
    yield "fold_pauc_batch 1000x(4568x5)", lambda b: b.fold_pauc_batch(W, conf, pos, offsets, 0.0, 0.1)

    X = rng.normal(size=(1600, 30))
    yt = (X[:, :10].sum(1) + rng.normal(size=1600) > 2).astype(np.int8)
    sample = rng.integers(0, 1600, 1600).astype(np.intp)
    yield "grow_tree n=1600 mtry=6", lambda b: b.grow_tree(X, yt, sample, 6, 5, 1)

    tree = core.grow_tree(X, yt, sample, 6, 5, 1) if core else py.grow_tree(X, yt, sample, 6, 5, 1)
    roots = np.zeros(50, dtype=np.intp)
    yield "forest_votes 50 trees x 1600 rows", lambda b: b.forest_votes(X, roots, *tree)

    Xs = rng.normal(size=(600, 10))
    ys = np.where(Xs[:, 0] + rng.normal(size=600) > 0, 1, -1).astype(np.int8)
    K = np.exp(-0.1 * ((Xs[:, None] - Xs[None]) ** 2).sum(-1))
    yield "smo_solve n=600", lambda b: b.smo_solve(K, ys, 1.0, 1e-3, 10**6)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if core is None:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':38s} {'compiled s':>11s} {'python s':>10s} {'speedup':>8s}")
    for name, fn in cases(np.random.default_rng(0)):
        if core is not None:
            a, b = fn(core), fn(py)
            same = all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(
                a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)))
            assert same, f"{name}: backends disagree"
        tc = _best_of(lambda: fn(core), args.repeat) if core is not None else float("nan")
        tp = _best_of(lambda: fn(py), args.repeat)
        print(f"{name:38s} {tc:11.4f} {tp:10.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
