"""Compare the compiled clustering kernels against the pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py --n 5000 --d 6 --k 8 --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from playstyles._kernels import _pykern

try:
    from playstyles._kernels import _ckern
except ImportError:
    _ckern = None


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=5000, help="points")
    parser.add_argument("--d", type=int, default=6, help="dimensions")
    parser.add_argument("--k", type=int, default=8, help="clusters")
    parser.add_argument("--sil-n", type=int, default=1200,
                        help="points for the O(n^2) silhouette timing")
    parser.add_argument("--repeat", type=int, default=5,
                        help="repetitions; best time wins")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    points = np.ascontiguousarray(rng.normal(size=(args.n, args.d)))
    centroids = np.ascontiguousarray(rng.normal(size=(args.k, args.d)))
    sil_points = np.ascontiguousarray(rng.normal(size=(args.sil_n, args.d)))
    sil_labels = np.ascontiguousarray(
        rng.integers(0, args.k, size=args.sil_n), dtype=np.int64
    )

    backends = [("python", _pykern)]
    if _ckern is not None:
        backends.append(("cython", _ckern))
    else:
        print("compiled kernel not built; timing the fallback only")

    rows = []
    for name, impl in backends:
        t_assign = _time(lambda: impl.assign(points, centroids), args.repeat)
        t_sil = _time(
            lambda: impl.silhouette_samples(sil_points, sil_labels, args.k),
            args.repeat,
        )
        rows.append((name, t_assign, t_sil))

    print(f"n={args.n} d={args.d} k={args.k} sil_n={args.sil_n} "
          f"repeat={args.repeat} (best-of)")
    print(f"{'backend':<8} {'assign':>12} {'silhouette':>12}")
    for name, t_assign, t_sil in rows:
        print(f"{name:<8} {t_assign * 1e3:>10.2f}ms {t_sil * 1e3:>10.2f}ms")
    if len(rows) == 2:
        (_, pa, ps), (_, ca, cs) = rows
        print(f"{'speedup':<8} {pa / ca:>11.1f}x {ps / cs:>11.1f}x")

    # sanity: both backends agree on this workload
    if _ckern is not None:
        pl, pd = _pykern.assign(points, centroids)
        cl, cd = _ckern.assign(points, centroids)
        assert np.array_equal(pl, cl) and np.allclose(pd, cd)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
