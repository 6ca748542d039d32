import numpy as np
import pytest

from icsel.core import AnnotatedEntry, AnnotatedSet, Example, Pool


def make_pool(embeddings, labels=None, ids=None, texts=None, splits=None) -> Pool:
    emb = np.asarray(embeddings, dtype=np.float32)
    n = emb.shape[0]
    ids = ids or [f"ex-{i:03d}" for i in range(n)]
    texts = texts or [f"text {i}" for i in range(n)]
    labels = labels if labels is not None else [None] * n
    examples = [Example(ids[i], texts[i], emb[i], labels[i]) for i in range(n)]
    return Pool(examples, splits)


def blob_pool(rng, centers, sizes, noise=0.1, labels=None, splits=None) -> Pool:
    """Gaussian blobs around the given centers; label = blob name."""
    centers = np.asarray(centers, dtype=np.float64)
    pts, labs = [], []
    names = labels or [f"blob{i}" for i in range(len(centers))]
    for c, size, name in zip(centers, sizes, names):
        pts.append(c + noise * rng.normal(size=(size, centers.shape[1])))
        labs.extend([name] * size)
    emb = np.vstack(pts)
    return make_pool(emb, labels=labs, splits=splits)


def annotate_all(pool: Pool, indices) -> AnnotatedSet:
    return AnnotatedSet(
        AnnotatedEntry(pool.examples[i].id, pool.examples[i].label) for i in indices
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
