"""Synthetic Gaussian-mixture pools for trend-level benchmarks and demos.

The mixture geometry is fixed (4 clusters in 16 dimensions, imbalanced sizes,
partial overlap); the seed varies the sampled points. Cluster labels are the
ground truth, so the kernel oracle can stand in for a model while selection
strategies compete on the same pool.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from icsel.core import Example, Pool, save_pool, seeded_rng

N_CLUSTERS = 4
DIM = 16
# imbalanced sizes + moderate overlap: rare hard regions are where selection
# strategy matters, which is what the trend benchmarks measure
CLUSTER_PROPORTIONS = (0.55, 0.25, 0.12, 0.08)
MEAN_SCALE = 1.0
NOISE_SCALE = 0.4
STRUCTURE_SEED = 6021023
LABELS = ("alpha", "beta", "gamma", "delta")


def _cluster_means(dim: int = DIM, scale: float = MEAN_SCALE) -> np.ndarray:
    """Fixed cluster centers: deterministic random directions, unit scaled."""
    rng = np.random.default_rng(STRUCTURE_SEED)
    raw = rng.normal(size=(N_CLUSTERS, dim))
    return scale * raw / np.linalg.norm(raw, axis=1, keepdims=True)


def _counts(n: int) -> list[int]:
    counts = [int(p * n) for p in CLUSTER_PROPORTIONS]
    counts[0] += n - sum(counts)
    return counts


def sample_mixture(
    rng: np.random.Generator, n: int, dim: int = DIM, noise: float | None = None
) -> tuple[np.ndarray, list[int]]:
    """(points, cluster assignments) with fixed per-cluster counts."""
    if noise is None:
        noise = NOISE_SCALE
    means = _cluster_means(dim)
    pts = []
    labels = []
    for c, cnt in enumerate(_counts(n)):
        pts.append(means[c] + noise * rng.normal(size=(cnt, dim)))
        labels.extend([c] * cnt)
    return np.vstack(pts).astype(np.float32), labels


def make_benchmark_pool(
    seed: int, n_train: int = 300, n_test: int = 150, dim: int = DIM
) -> Pool:
    """Train + test pool drawn from the fixed mixture; labels are cluster names."""
    rng = seeded_rng(seed, "synthetic-pool")
    train_pts, train_cl = sample_mixture(rng, n_train, dim)
    test_pts, test_cl = sample_mixture(rng, n_test, dim)
    examples = []
    for i in range(n_train):
        examples.append(
            Example(
                f"train-{i:04d}",
                f"train example {i} (cluster {LABELS[train_cl[i]]})",
                train_pts[i],
                LABELS[train_cl[i]],
            )
        )
    for i in range(n_test):
        examples.append(
            Example(
                f"test-{i:04d}",
                f"test example {i} (cluster {LABELS[test_cl[i]]})",
                test_pts[i],
                LABELS[test_cl[i]],
            )
        )
    splits = {
        "train": list(range(n_train)),
        "test": list(range(n_train, n_train + n_test)),
    }
    return Pool(examples, splits)


def write_benchmark(
    out_dir: str | Path, seed: int = 0, n_train: int = 300, n_test: int = 150
) -> Path:
    """Write a pool file plus a minimal experiment config; returns the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pool = make_benchmark_pool(seed, n_train, n_test)
    save_pool(pool, out / "pool.jsonl")
    # paths are resolved relative to the config file's directory
    config = {
        "pool": {"train": "pool.jsonl"},
        "strategies": ["adaicl", "adaicl-plus", "random"],
        "seeds": [0, 1, 2],
        "output_dir": "runs",
    }
    config_path = out / "config.json"
    config_path.write_text(json.dumps(config, indent=2))
    return config_path


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="emit a synthetic benchmark pool + config")
    parser.add_argument("out_dir")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-train", type=int, default=300)
    parser.add_argument("--n-test", type=int, default=150)
    args = parser.parse_args(argv)
    path = write_benchmark(args.out_dir, args.seed, args.n_train, args.n_test)
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
