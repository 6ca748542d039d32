"""Cosine similarity, directed m-NN and threshold graphs, egonet cover sets,
and the neighbor-count heuristic."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from icsel import _accel
from icsel.core import Pool


class GraphError(ValueError):
    pass


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine of the angle between two nonzero vectors of equal length."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise GraphError(f"length mismatch: {va.shape[0]} vs {vb.shape[0]}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise GraphError("cosine similarity undefined for a zero-norm vector")
    return float(np.dot(va, vb) / (na * nb))


def pairwise_cosine(embeddings: np.ndarray) -> np.ndarray:
    """(n, n) float64 cosine matrix; rows must be nonzero."""
    X = np.asarray(embeddings, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise GraphError("zero-norm embedding in similarity computation")
    U = X / norms[:, None]
    S = U @ U.T
    np.clip(S, -1.0, 1.0, out=S)
    return S


@dataclass(frozen=True)
class GraphKind:
    kind: str  # "mnn" | "delta"
    m: int | None = None
    delta: float | None = None
    mean_out_degree: float | None = None


@dataclass
class SemanticGraph:
    """Directed neighbor structure: per-node out-edges sorted by descending
    similarity (ties toward the lower index)."""

    n: int
    out_idx: list[np.ndarray]
    out_sim: list[np.ndarray]
    kind: GraphKind
    _in_adj: list[list[tuple[int, float]]] | None = field(default=None, repr=False)

    def out_neighbors(self, u: int) -> np.ndarray:
        return self.out_idx[u]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.out_idx[u]

    def in_edges(self, v: int) -> list[tuple[int, float]]:
        """(u, sim) pairs with an edge u -> v, ascending by u."""
        if self._in_adj is None:
            adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
            for u in range(self.n):
                for v_, s in zip(self.out_idx[u], self.out_sim[u]):
                    adj[int(v_)].append((u, float(s)))
            self._in_adj = [sorted(lst) for lst in adj]
        return self._in_adj[v]

    def in_neighbors(self, v: int) -> list[int]:
        """Nodes u with an edge u -> v, ascending."""
        return [u for u, _ in self.in_edges(v)]

    def edge_sim(self, u: int, v: int) -> float:
        pos = np.nonzero(self.out_idx[u] == v)[0]
        if pos.size == 0:
            raise GraphError(f"no edge {u} -> {v}")
        return float(self.out_sim[u][pos[0]])

    def mean_out_degree(self) -> float:
        return sum(len(a) for a in self.out_idx) / self.n

    def to_json(self) -> str:
        edges = []
        for u in range(self.n):
            for v, s in zip(self.out_idx[u], self.out_sim[u]):
                edges.append([int(u), int(v), float(s)])
        params = {"kind": self.kind.kind}
        if self.kind.m is not None:
            params["m"] = self.kind.m
        if self.kind.delta is not None:
            params["delta"] = self.kind.delta
        if self.kind.mean_out_degree is not None:
            params["mean_out_degree"] = self.kind.mean_out_degree
        return json.dumps({"n": self.n, "params": params, "edges": edges})

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[tuple[int, int, float]], kind: GraphKind | None = None
    ) -> "SemanticGraph":
        """Build directly from (u, v, sim) triples (self-loops rejected)."""
        out: list[list[tuple[float, int]]] = [[] for _ in range(n)]
        for u, v, s in edges:
            if u == v:
                raise GraphError(f"self-loop on node {u}")
            out[u].append((s, v))
        out_idx, out_sim = [], []
        for u in range(n):
            ordered = sorted(out[u], key=lambda t: (-t[0], t[1]))
            out_idx.append(np.array([v for _, v in ordered], dtype=np.int64))
            out_sim.append(np.array([s for s, _ in ordered], dtype=np.float64))
        return cls(n, out_idx, out_sim, kind or GraphKind("mnn"))


def _embedding_matrix(pool_or_matrix, indices: Sequence[int] | None) -> np.ndarray:
    if isinstance(pool_or_matrix, Pool):
        mat = pool_or_matrix.embeddings
    else:
        mat = np.asarray(pool_or_matrix)
    if indices is not None:
        mat = mat[list(indices)]
    return mat


def build_mnn_graph(
    pool_or_matrix, m: int, indices: Sequence[int] | None = None
) -> SemanticGraph:
    """Directed m-nearest-neighbor graph under cosine similarity.

    Each node points to its min(m, n-1) most similar other nodes; ties break
    toward the lower index. Node i corresponds to indices[i] when a subset is
    given.
    """
    if m < 1:
        raise GraphError("m must be >= 1")
    mat = _embedding_matrix(pool_or_matrix, indices)
    S = pairwise_cosine(mat)
    idx, sims = _accel.topm_neighbors(S, m)
    n = S.shape[0]
    return SemanticGraph(
        n,
        [idx[i] for i in range(n)],
        [sims[i] for i in range(n)],
        GraphKind("mnn", m=m),
    )


def build_delta_graph(
    pool_or_matrix, target_avg_degree: int, indices: Sequence[int] | None = None
) -> SemanticGraph:
    """Similarity-threshold graph: keep every pair with sim >= delta, with delta
    chosen so the mean out-degree is as close to the target as possible without
    exceeding it."""
    mat = _embedding_matrix(pool_or_matrix, indices)
    n = mat.shape[0]
    if not 1 <= target_avg_degree <= n - 1:
        raise GraphError(f"target_avg_degree={target_avg_degree} out of range for n={n}")
    S = pairwise_cosine(mat)
    iu = np.triu_indices(n, k=1)
    pair_sims = S[iu]
    values, counts = np.unique(pair_sims, return_counts=True)
    values = values[::-1]  # descending
    counts = counts[::-1]
    cum_edges = np.cumsum(counts) * 2  # ordered pairs
    allowed = cum_edges <= target_avg_degree * n
    if not allowed.any():
        delta = float(values[0])
        warnings.warn(
            f"degenerate similarity distribution: the sparsest threshold graph already "
            f"exceeds mean degree {target_avg_degree}; using delta={delta}",
            stacklevel=2,
        )
    else:
        delta = float(values[np.nonzero(allowed)[0][-1]])
    mask = S >= delta
    np.fill_diagonal(mask, False)
    out_idx, out_sim = [], []
    for u in range(n):
        nbrs = np.nonzero(mask[u])[0]
        order = np.argsort(-S[u, nbrs], kind="stable")
        nbrs = nbrs[order]
        out_idx.append(nbrs.astype(np.int64))
        out_sim.append(S[u, nbrs])
    mean_deg = sum(len(a) for a in out_idx) / n
    return SemanticGraph(
        n, out_idx, out_sim, GraphKind("delta", delta=delta, mean_out_degree=mean_deg)
    )


@dataclass(frozen=True)
class CoverSet:
    """Egonet-derived candidate set: hard nodes with edges toward the center."""

    center: int
    members: tuple[int, ...]  # sorted ascending
    hops: int = 1

    def __len__(self) -> int:
        return len(self.members)


def build_cover_sets(
    graph: SemanticGraph, hard: Iterable[int], hops: int = 1
) -> list[CoverSet]:
    """One cover set per hard center, ordered by ascending center index.

    1-hop members are the hard nodes with an edge toward the center; the 2-hop
    set unions in the members' own 1-hop sets and drops the center itself.
    Sets may be empty.
    """
    if hops not in (1, 2):
        raise GraphError("hops must be 1 or 2")
    centers = sorted(set(int(h) for h in hard))
    for c in centers:
        if not 0 <= c < graph.n:
            raise GraphError(f"hard node {c} outside graph")
    hard_set = set(centers)
    one_hop: dict[int, set[int]] = {
        v: {u for u in graph.in_neighbors(v) if u in hard_set} for v in centers
    }
    result = []
    for v in centers:
        members = set(one_hop[v])
        if hops == 2:
            for u in one_hop[v]:
                members |= one_hop[u]
            members.discard(v)
        result.append(CoverSet(v, tuple(sorted(members)), hops))
    return result


def heuristic_m_range(
    budget: int,
    max_iterations: int,
    theta: float,
    theta_hat: float,
    pool_size: int,
    hops: int = 1,
) -> tuple[float, float]:
    """Real-valued bounds on the neighbor count m for the desired iteration
    budget; integer choice is left to the caller.

    With n_theta = floor(theta * N) and n_theta_hat = floor(theta_hat * n_theta),
    the 1-hop bounds are (T * n_theta_hat / (theta * B), T * n_theta / (theta * B));
    the 2-hop variant bounds m^2 with theta^2 in the denominator, so the square
    root of those bounds is returned.
    """
    if not (0 < theta <= 1 and 0 < theta_hat <= 1):
        raise ValueError("theta and theta_hat must lie in (0, 1]")
    if budget <= 0 or max_iterations <= 0 or pool_size <= 0:
        raise ValueError("budget, max_iterations, and pool_size must be positive")
    if hops not in (1, 2):
        raise ValueError("hops must be 1 or 2")
    n_theta = math.floor(theta * pool_size)
    n_theta_hat = math.floor(theta_hat * n_theta)
    if hops == 1:
        lo = max_iterations * n_theta_hat / (theta * budget)
        hi = max_iterations * n_theta / (theta * budget)
        return lo, hi
    lo_sq = max_iterations * n_theta_hat / (theta**2 * budget)
    hi_sq = max_iterations * n_theta / (theta**2 * budget)
    return math.sqrt(lo_sq), math.sqrt(hi_sq)
