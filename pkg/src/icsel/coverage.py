"""Greedy maximum coverage, the tier-weighted variant, and an exhaustive oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from icsel import _accel
from icsel.graph import CoverSet


class CoverageError(ValueError):
    pass


@dataclass
class CoverInstance:
    """A maximum-coverage problem over hard-example indices.

    `uncertainty` optionally maps elements to an uncertainty mass (higher =
    more uncertain) used only for tie-breaking between equally good sets.
    """

    universe: tuple[int, ...]
    sets: list[CoverSet]
    budget: int
    uncertainty: Mapping[int, float] | None = None

    def __post_init__(self) -> None:
        self.universe = tuple(sorted(set(int(u) for u in self.universe)))
        uni = set(self.universe)
        for s in self.sets:
            stray = set(s.members) - uni
            if stray:
                raise CoverageError(
                    f"set centered at {s.center} contains non-universe elements {sorted(stray)}"
                )
        if self.budget < 0:
            raise CoverageError("budget must be non-negative")


@dataclass
class WeightTiers:
    """Per-element coverage tier t; an element contributes base**(-t) to a set's
    score and its tier rises by one each time a containing set is picked."""

    base: float = 10.0
    tiers: dict[int, int] = field(default_factory=dict)

    def tier(self, element: int) -> int:
        return self.tiers.get(element, 0)

    def weight(self, element: int) -> float:
        return self.base ** (-self.tier(element))

    def bump(self, elements: Sequence[int]) -> None:
        for e in elements:
            self.tiers[e] = self.tiers.get(e, 0) + 1


@dataclass
class GreedyResult:
    selected: list[int]  # center ids in pick order
    covered: set[int]  # universe element ids
    gains: list[int]  # marginal gain of each pick


def _dense_instance(instance: CoverInstance):
    """Relabel universe elements to 0..U-1 and CSR-encode the sets."""
    pos = {u: i for i, u in enumerate(instance.universe)}
    indptr = [0]
    flat: list[int] = []
    for s in instance.sets:
        flat.extend(pos[m] for m in s.members)
        indptr.append(len(flat))
    unc = None
    if instance.uncertainty is not None:
        unc = np.zeros(len(instance.universe), dtype=np.float64)
        for u, val in instance.uncertainty.items():
            if u in pos:
                unc[pos[u]] = float(val)
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(flat, dtype=np.int32),
        unc,
    )


def greedy_maxcover(instance: CoverInstance) -> GreedyResult:
    """Iteratively pick the set covering the most uncovered elements.

    Ties break toward the larger uncertainty mass over the newly covered
    members (when attached), then toward the lower center index. Terminates
    when the budget is spent, everything is covered, or no set adds anything.
    """
    if not instance.sets or instance.budget == 0 or not instance.universe:
        return GreedyResult([], set(), [])
    indptr, flat, unc = _dense_instance(instance)
    picked_pos, covered_mask, gains = _accel.greedy_cover(
        indptr, flat, len(instance.universe), instance.budget, unc
    )
    selected = [instance.sets[p].center for p in picked_pos]
    covered = {instance.universe[i] for i in np.nonzero(covered_mask)[0]}
    return GreedyResult(selected, covered, list(gains))


def _tier_scores_scaled(
    instance: CoverInstance, tiers: WeightTiers, active: list[bool]
) -> list[object] | None:
    """Exact integer set scores scaled by base**max_tier; None if base is not
    an integer >= 2 (caller falls back to floats)."""
    base = tiers.base
    if base != int(base) or int(base) < 2:
        return None
    b = int(base)
    cap = max((tiers.tier(u) for u in instance.universe), default=0)
    scores: list[object] = []
    for i, s in enumerate(instance.sets):
        if not active[i]:
            scores.append(-1)
            continue
        acc = 0
        for m in s.members:
            acc += b ** (cap - tiers.tier(m))
        scores.append(acc)
    return scores


def greedy_weighted_maxcover(
    instance: CoverInstance, tiers: WeightTiers, picks: int
) -> list[int]:
    """Tier-weighted greedy: each pick maximizes the summed tier weights of a
    set's members; picked members then drop one weight tier instead of being
    marked covered. Returns exactly `picks` centers unless no non-empty set
    remains. Mutates `tiers`.
    """
    if picks < 1:
        raise CoverageError("picks must be >= 1")
    active = [len(s) > 0 for s in instance.sets]
    selected: list[int] = []
    unc = instance.uncertainty
    while len(selected) < picks and any(active):
        exact = _tier_scores_scaled(instance, tiers, active)
        if exact is not None:
            scores = exact
        else:
            scores = [
                sum(tiers.weight(m) for m in s.members) if active[i] else -1.0
                for i, s in enumerate(instance.sets)
            ]
        best_score = max(scores)
        candidates = [i for i, sc in enumerate(scores) if active[i] and sc == best_score]
        best = candidates[0]
        if len(candidates) > 1 and unc is not None:
            best_unc = -np.inf
            for i in candidates:
                acc = 0.0
                for m in instance.sets[i].members:
                    acc += float(unc.get(m, 0.0))
                if acc > best_unc:
                    best_unc = acc
                    best = i
        chosen = instance.sets[best]
        selected.append(chosen.center)
        active[best] = False
        tiers.bump(chosen.members)
    return selected


def brute_force_maxcover(instance: CoverInstance) -> int:
    """Exact optimum coverage by enumerating all budget-sized set subsets.

    Test oracle only; refuses instances with more than 20 sets.
    """
    if len(instance.sets) > 20:
        raise CoverageError("brute force limited to 20 sets")
    pos = {u: i for i, u in enumerate(instance.universe)}
    masks = []
    for s in instance.sets:
        m = 0
        for x in s.members:
            m |= 1 << pos[x]
        masks.append(m)
    k = min(instance.budget, len(masks))
    if k == 0:
        return 0
    best = 0
    for combo in combinations(masks, k):
        u = 0
        for m in combo:
            u |= m
        best = max(best, bin(u).count("1"))
    return best
