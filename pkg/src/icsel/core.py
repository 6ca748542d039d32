"""Domain types, pool ingestion, seeded randomness, and candidate-pool preparation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

GROUND_TRUTH = "ground-truth"
HUMAN = "human"
PSEUDO_LABEL = "pseudo-label"
PROVENANCES = (GROUND_TRUTH, HUMAN, PSEUDO_LABEL)


class PoolError(ValueError):
    """Malformed pool input: parse failure, dimension mismatch, duplicate id."""


class AnnotationError(ValueError):
    """Invalid annotated-set mutation (duplicate id, empty label, bad provenance)."""


class BudgetError(ValueError):
    """Budget accounting violation."""


def seeded_rng(seed: int, *tags: str) -> np.random.Generator:
    """Independent deterministic RNG stream for (seed, tags).

    Tags let one experiment seed drive several operations without coupling
    their draw sequences.
    """
    entropy = [int(seed)]
    for tag in tags:
        digest = hashlib.sha256(tag.encode("utf-8")).digest()
        entropy.append(int.from_bytes(digest[:8], "little"))
    return np.random.default_rng(entropy)


@dataclass(frozen=True)
class Example:
    """One pool item: unique id, raw text, optional label, embedding vector."""

    id: str
    text: str
    embedding: np.ndarray  # float32, read-only
    label: str | None = None

    def __post_init__(self) -> None:
        emb = np.asarray(self.embedding, dtype=np.float32)
        emb.setflags(write=False)
        object.__setattr__(self, "embedding", emb)


class Pool:
    """Ordered example collection with a shared embedding dimension and named splits."""

    def __init__(self, examples: Sequence[Example], splits: dict[str, list[int]] | None = None):
        if not examples:
            raise PoolError("pool must contain at least one example")
        self.examples: list[Example] = list(examples)
        first_dim = self.examples[0].embedding.shape
        for ex in self.examples:
            if ex.embedding.ndim != 1:
                raise PoolError(f"embedding of '{ex.id}' is not a vector")
            if ex.embedding.shape != first_dim:
                raise PoolError(
                    f"dimension mismatch for id '{ex.id}': got {ex.embedding.shape[0]}, "
                    f"expected {first_dim[0]}"
                )
        self.dim: int = int(first_dim[0])
        self._index: dict[str, int] = {}
        for i, ex in enumerate(self.examples):
            if ex.id in self._index:
                raise PoolError(f"duplicate id '{ex.id}'")
            self._index[ex.id] = i
        self._matrix = np.stack([ex.embedding for ex in self.examples]).astype(np.float32)
        norms = np.linalg.norm(self._matrix.astype(np.float64), axis=1)
        if not np.all(np.isfinite(self._matrix)):
            bad = self.examples[int(np.argwhere(~np.isfinite(self._matrix))[0][0])].id
            raise PoolError(f"non-finite embedding for id '{bad}'")
        if np.any(norms == 0.0):
            bad = self.examples[int(np.argmin(norms))].id
            raise PoolError(f"zero-norm embedding for id '{bad}'")
        self._norms = norms
        self._unit: np.ndarray | None = None
        self.splits: dict[str, list[int]] = {}
        for name, idx in (splits or {}).items():
            idx = list(idx)
            if any(i < 0 or i >= len(self.examples) for i in idx):
                raise PoolError(f"split '{name}' references an out-of-range index")
            self.splits[name] = idx

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def index_of(self, example_id: str) -> int:
        try:
            return self._index[example_id]
        except KeyError:
            raise PoolError(f"unknown example id '{example_id}'") from None

    def __getitem__(self, i: int) -> Example:
        return self.examples[i]

    @property
    def embeddings(self) -> np.ndarray:
        """(n, dim) float32 matrix in pool order."""
        return self._matrix

    @property
    def unit_embeddings(self) -> np.ndarray:
        """(n, dim) float64 row-normalized embeddings (cached)."""
        if self._unit is None:
            self._unit = self._matrix.astype(np.float64) / self._norms[:, None]
        return self._unit

    def split(self, name: str) -> list[int]:
        if name not in self.splits:
            raise PoolError(f"unknown split '{name}'")
        return self.splits[name]

    def label_vocabulary(self, indices: Iterable[int] | None = None) -> list[str]:
        """Sorted distinct ground-truth labels over the given indices (default all)."""
        idx = range(len(self.examples)) if indices is None else indices
        return sorted({self.examples[i].label for i in idx if self.examples[i].label is not None})


@dataclass(frozen=True)
class AnnotatedEntry:
    example_id: str
    label: str
    provenance: str = GROUND_TRUTH


class AnnotatedSet:
    """Ordered (id, label) pairs with per-entry provenance; ids unique, labels non-empty."""

    def __init__(self, entries: Iterable[AnnotatedEntry] = ()):
        self.entries: list[AnnotatedEntry] = []
        self._ids: set[str] = set()
        for e in entries:
            self.add(e)

    def add(self, entry: AnnotatedEntry) -> None:
        if not entry.label:
            raise AnnotationError(f"empty label for id '{entry.example_id}'")
        if entry.provenance not in PROVENANCES:
            raise AnnotationError(f"unknown provenance '{entry.provenance}'")
        if entry.example_id in self._ids:
            raise AnnotationError(f"duplicate annotation for id '{entry.example_id}'")
        self.entries.append(entry)
        self._ids.add(entry.example_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[AnnotatedEntry]:
        return iter(self.entries)

    def __contains__(self, example_id: str) -> bool:
        return example_id in self._ids

    def ids(self) -> list[str]:
        return [e.example_id for e in self.entries]

    def label_of(self, example_id: str) -> str:
        for e in self.entries:
            if e.example_id == example_id:
                return e.label
        raise AnnotationError(f"id '{example_id}' not annotated")

    def copy(self) -> "AnnotatedSet":
        return AnnotatedSet(self.entries)

    def to_records(self) -> list[dict]:
        return [
            {"id": e.example_id, "label": e.label, "provenance": e.provenance}
            for e in self.entries
        ]

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "AnnotatedSet":
        return cls(
            AnnotatedEntry(r["id"], r["label"], r.get("provenance", GROUND_TRUTH))
            for r in records
        )


@dataclass
class Budget:
    """Annotation budget: total, spent so far, optional per-step increments."""

    total: int
    spent: int = 0
    schedule: list[int] | None = None

    def __post_init__(self) -> None:
        if self.total < 0:
            raise BudgetError("budget total must be non-negative")
        if self.spent < 0 or self.spent > self.total:
            raise BudgetError("spent must lie in [0, total]")
        if self.schedule is not None:
            if any(s <= 0 for s in self.schedule):
                raise BudgetError("schedule increments must be positive")
            if sum(self.schedule) != self.total:
                raise BudgetError(
                    f"schedule increments sum to {sum(self.schedule)}, expected total {self.total}"
                )

    @property
    def remaining(self) -> int:
        return self.total - self.spent

    def charge(self, n: int) -> None:
        if n < 0 or self.spent + n > self.total:
            raise BudgetError(f"cannot charge {n} against remaining {self.remaining}")
        self.spent += n


# ---------------------------------------------------------------------------
# Pool I/O
#
# JSONL: one object per line with fields id, text, optional label, optional
# split, optional embedding. In "jsonl+bin" format embeddings live in a
# little-endian float32 row-major sidecar <path>.bin described by a JSON
# manifest <path>.manifest.json with {count, dim, ids}.
# ---------------------------------------------------------------------------

JSONL = "jsonl"
JSONL_BIN = "jsonl+bin"
_FORMAT_ALIASES = {JSONL: JSONL, JSONL_BIN: JSONL_BIN, "jsonl+binary-embeddings": JSONL_BIN}


def _sidecar_paths(path: Path) -> tuple[Path, Path]:
    return Path(str(path) + ".manifest.json"), Path(str(path) + ".bin")


def load_pool(path: str | Path, fmt: str = JSONL) -> Pool:
    """Load a pool from JSONL, optionally with a binary embedding sidecar."""
    path = Path(path)
    if fmt not in _FORMAT_ALIASES:
        raise PoolError(f"unknown pool format '{fmt}'")
    fmt = _FORMAT_ALIASES[fmt]
    sidecar: dict[str, np.ndarray] = {}
    if fmt == JSONL_BIN:
        manifest_path, bin_path = _sidecar_paths(path)
        try:
            manifest = json.loads(manifest_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PoolError(f"cannot read embedding manifest {manifest_path}: {exc}") from exc
        count, dim, ids = manifest["count"], manifest["dim"], manifest["ids"]
        raw = np.fromfile(bin_path, dtype="<f4")
        if raw.size != count * dim:
            raise PoolError(
                f"embedding sidecar holds {raw.size} floats, manifest expects {count * dim}"
            )
        rows = raw.reshape(count, dim)
        if len(ids) != count:
            raise PoolError("manifest ids length disagrees with count")
        sidecar = {i: rows[j] for j, i in enumerate(ids)}

    examples: list[Example] = []
    splits: dict[str, list[int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PoolError(f"{path}:{lineno}: malformed JSON record: {exc}") from exc
            if "id" not in rec or "text" not in rec:
                raise PoolError(f"{path}:{lineno}: record missing 'id' or 'text'")
            ex_id = str(rec["id"])
            if fmt == JSONL_BIN:
                if ex_id not in sidecar:
                    raise PoolError(f"id '{ex_id}' missing from embedding sidecar")
                emb = sidecar[ex_id]
            else:
                if "embedding" not in rec:
                    raise PoolError(f"{path}:{lineno}: record '{ex_id}' lacks an embedding")
                emb = np.asarray(rec["embedding"], dtype=np.float32)
            examples.append(Example(ex_id, str(rec["text"]), emb, rec.get("label")))
            split_name = rec.get("split", "train")
            splits.setdefault(split_name, []).append(len(examples) - 1)
    return Pool(examples, splits)


def save_pool(pool: Pool, path: str | Path, fmt: str = JSONL) -> None:
    """Write a pool back to disk; load_pool(save_pool(p)) round-trips bit-exactly."""
    path = Path(path)
    if fmt not in _FORMAT_ALIASES:
        raise PoolError(f"unknown pool format '{fmt}'")
    fmt = _FORMAT_ALIASES[fmt]
    index_to_split = {}
    for name, idx in pool.splits.items():
        for i in idx:
            index_to_split[i] = name
    with open(path, "w", encoding="utf-8") as fh:
        for i, ex in enumerate(pool.examples):
            rec: dict = {"id": ex.id, "text": ex.text}
            if ex.label is not None:
                rec["label"] = ex.label
            rec["split"] = index_to_split.get(i, "train")
            if fmt == JSONL:
                rec["embedding"] = [float(v) for v in ex.embedding]
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    if fmt == JSONL_BIN:
        manifest_path, bin_path = _sidecar_paths(path)
        pool.embeddings.astype("<f4").tofile(bin_path)
        manifest = {"count": len(pool), "dim": pool.dim, "ids": [ex.id for ex in pool.examples]}
        manifest_path.write_text(json.dumps(manifest))


# ---------------------------------------------------------------------------
# Seeded k-means and the pool-preparation operations built on it
# ---------------------------------------------------------------------------


def kmeans(
    points: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 300
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded k-means++ init followed by Lloyd iterations.

    Converges when no assignment changes (max 300 iterations); an empty
    cluster is re-seeded to the point farthest from its centroid. Fully
    deterministic given the generator state.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range for {n} points")

    # k-means++: first center uniform, then proportional to squared distance
    centers = np.empty((k, pts.shape[1]), dtype=np.float64)
    chosen = np.zeros(n, dtype=bool)
    first = int(rng.integers(n))
    centers[0] = pts[first]
    chosen[first] = True
    d2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # duplicate points: fall back to the lowest unchosen index
            nxt = int(np.argmin(chosen))
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        centers[j] = pts[nxt]
        chosen[nxt] = True
        d2 = np.minimum(d2, np.sum((pts - centers[j]) ** 2, axis=1))

    assignment = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        dists = np.linalg.norm(pts[:, None, :] - centers[None, :, :], axis=2)
        new_assignment = np.argmin(dists, axis=1)  # ties -> lower centroid index
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for j in range(k):
            mask = assignment == j
            if mask.any():
                centers[j] = pts[mask].mean(axis=0)
            else:
                far = int(np.argmax(np.sum((pts - centers[j]) ** 2, axis=1)))
                centers[j] = pts[far]
    return centers, assignment


def nearest_to_centroids(
    points: np.ndarray, centroids: np.ndarray, forbidden: set[int] | None = None
) -> list[int]:
    """One point per centroid, nearest first-come with removal; ties -> lower index."""
    pts = np.asarray(points, dtype=np.float64)
    available = np.ones(pts.shape[0], dtype=bool)
    for i in forbidden or ():
        available[i] = False
    picked: list[int] = []
    for c in centroids:
        d = np.sum((pts - c) ** 2, axis=1)
        d[~available] = np.inf
        i = int(np.argmin(d))
        if not available[i]:
            raise ValueError("more centroids than available points")
        picked.append(i)
        available[i] = False
    return picked


def prepare_candidate_pool(
    pool: Pool,
    subsample: int,
    clusters: int,
    seed: int,
    indices: Sequence[int] | None = None,
) -> list[int]:
    """Subsample the pool, cluster, and keep the example nearest each centroid.

    Returns sorted pool indices; deterministic for a fixed seed.
    """
    base = list(indices) if indices is not None else list(range(len(pool)))
    if not 1 <= subsample <= len(base):
        raise ValueError(f"subsample={subsample} out of range for {len(base)} examples")
    if not 1 <= clusters <= subsample:
        raise ValueError(f"clusters={clusters} out of range for subsample {subsample}")
    rng = seeded_rng(seed, "candidate-pool")
    sub = sorted(int(i) for i in rng.choice(len(base), size=subsample, replace=False))
    sub_pool_idx = [base[i] for i in sub]
    pts = pool.embeddings[sub_pool_idx].astype(np.float64)
    centers, _ = kmeans(pts, clusters, rng)
    picked = nearest_to_centroids(pts, centers)
    return sorted(sub_pool_idx[i] for i in picked)


def init_pool_kmeans(
    pool: Pool,
    size: int,
    seed: int,
    indices: Sequence[int] | None = None,
) -> AnnotatedSet:
    """Initial annotated set: `size` examples nearest to k-means centroids,
    labeled from ground truth."""
    if size == 0:
        return AnnotatedSet()
    base = list(indices) if indices is not None else list(range(len(pool)))
    if not 1 <= size <= len(base):
        raise ValueError(f"size={size} out of range for {len(base)} examples")
    rng = seeded_rng(seed, "init-pool")
    pts = pool.embeddings[base].astype(np.float64)
    centers, _ = kmeans(pts, size, rng)
    picked = sorted(base[i] for i in nearest_to_centroids(pts, centers))
    entries = []
    for i in picked:
        ex = pool.examples[i]
        if ex.label is None:
            raise AnnotationError(f"example '{ex.id}' lacks a ground-truth label")
        entries.append(AnnotatedEntry(ex.id, ex.label, GROUND_TRUTH))
    return AnnotatedSet(entries)
