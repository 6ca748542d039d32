"""Numpy/pure-Python fallback for the hot kernels.

Semantics here are the reference: the compiled backend must produce
bit-identical outputs (same tie handling, same float summation order).
"""

from __future__ import annotations

import numpy as np

NAME = "pure"


def topm_neighbors(sim: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-row top-m entries of a square similarity matrix, diagonal excluded.

    Rows are ordered by descending similarity with ties resolved toward the
    lower column index. Returns (indices, similarities), each of shape
    (n, min(m, n-1)).
    """
    n = sim.shape[0]
    m_eff = min(m, n - 1)
    masked = np.array(sim, dtype=np.float64, copy=True)
    np.fill_diagonal(masked, -np.inf)
    # stable sort on the negated matrix keeps equal entries in index order
    order = np.argsort(-masked, axis=1, kind="stable")[:, :m_eff]
    vals = np.take_along_axis(masked, order, axis=1)
    return order.astype(np.int64), vals


def greedy_cover(
    indptr: np.ndarray,
    members: np.ndarray,
    n_universe: int,
    budget: int,
    uncertainty: np.ndarray,
) -> tuple[list[int], np.ndarray, list[int]]:
    """Greedy maximum coverage over CSR-encoded sets.

    Each pick takes the set with the most uncovered members; ties go to the
    larger left-to-right sum of member uncertainty over the still-uncovered
    members, then to the lower set position. Stops when the budget is spent,
    everything is covered, or the best marginal gain is zero.

    Returns (picked set positions in pick order, covered mask, marginal gains).
    """
    n_sets = len(indptr) - 1
    covered = np.zeros(n_universe, dtype=bool)
    active = np.ones(n_sets, dtype=bool)
    picked: list[int] = []
    gains: list[int] = []
    while len(picked) < budget:
        best_gain = 0
        candidates: list[int] = []
        for s in range(n_sets):
            if not active[s]:
                continue
            mem = members[indptr[s] : indptr[s + 1]]
            g = int(np.count_nonzero(~covered[mem]))
            if g > best_gain:
                best_gain = g
                candidates = [s]
            elif g == best_gain and g > 0:
                candidates.append(s)
        if best_gain == 0:
            break
        best = candidates[0]
        if len(candidates) > 1:
            best_unc = -np.inf
            for s in candidates:
                acc = 0.0
                for x in members[indptr[s] : indptr[s + 1]]:
                    if not covered[x]:
                        acc += uncertainty[x]
                if acc > best_unc:
                    best_unc = acc
                    best = s
        mem = members[indptr[best] : indptr[best + 1]]
        covered[mem] = True
        active[best] = False
        picked.append(best)
        gains.append(best_gain)
    return picked, covered, gains
