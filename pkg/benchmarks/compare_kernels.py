"""Benchmark the compiled kernels against the pure fallback.

Usage: python3 benchmarks/compare_kernels.py [--n 2000] [--m 25] [--repeat 3]

Times the two hot kernels (top-m neighbor selection and the greedy cover
scan) on synthetic inputs sized like a large candidate pool, and verifies
both backends produce identical outputs while timing them.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from icsel._accel import pure

try:
    from icsel._accel import _fast
except ImportError:
    _fast = None


def bench(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=2000, help="pool size")
    parser.add_argument("--m", type=int, default=25, help="neighbors per node")
    parser.add_argument("--sets", type=int, default=1000)
    parser.add_argument("--universe", type=int, default=1000)
    parser.add_argument("--budget", type=int, default=45)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if _fast is None:
        print("compiled backend not built; run `pip install -e . --no-build-isolation`")
        return 1

    rng = np.random.default_rng(0)
    emb = rng.normal(size=(args.n, 64))
    unit = emb / np.linalg.norm(emb, axis=1, keepdims=True)
    sim = np.ascontiguousarray(unit @ unit.T)

    rows = []
    t_pure, out_pure = bench(lambda: pure.topm_neighbors(sim, args.m), args.repeat)
    t_fast, out_fast = bench(lambda: _fast.topm_neighbors(sim, args.m), args.repeat)
    assert np.array_equal(out_pure[0], out_fast[0]) and np.array_equal(out_pure[1], out_fast[1])
    rows.append(("topm_neighbors", f"n={args.n} m={args.m}", t_pure, t_fast))

    members, indptr = [], [0]
    for _ in range(args.sets):
        size = int(rng.integers(1, max(2, args.universe // 10)))
        members.extend(rng.choice(args.universe, size=size, replace=False).tolist())
        indptr.append(len(members))
    indptr = np.asarray(indptr, dtype=np.int64)
    members = np.asarray(members, dtype=np.int32)
    unc = rng.uniform(0, 1, size=args.universe)

    t_pure, out_pure = bench(
        lambda: pure.greedy_cover(indptr, members, args.universe, args.budget, unc),
        args.repeat,
    )
    t_fast, out_fast = bench(
        lambda: _fast.greedy_cover(indptr, members, args.universe, args.budget, unc),
        args.repeat,
    )
    assert out_pure[0] == out_fast[0] and out_pure[2] == out_fast[2]
    rows.append(
        ("greedy_cover", f"sets={args.sets} |U|={args.universe} B={args.budget}", t_pure, t_fast)
    )

    print(f"{'kernel':<16} {'size':<30} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>8}")
    for name, size, tp, tf in rows:
        print(f"{name:<16} {size:<30} {tp:>10.4f} {tf:>13.4f} {tp / tf:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
