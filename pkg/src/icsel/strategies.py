"""Selection strategies: adaptive coverage selection (adaicl, adaicl-plus,
adaicl-base) and the baselines (random, hardest, vote-k, fast-vote-k,
pseudo-label).

Strategies mutate a shared AnnotatedSet/Budget pair so multi-step budget
schedules can resume where the previous step stopped. The adaptive strategies
are explicit propose/supply state machines, which lets the annotation service
drive them with human labels while simulation runs reveal ground truth; both
paths produce identical selections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from icsel.core import (
    AnnotatedEntry,
    AnnotatedSet,
    AnnotationError,
    Budget,
    Example,
    GROUND_TRUTH,
    HUMAN,
    Pool,
    kmeans,
    nearest_to_centroids,
    seeded_rng,
)
from icsel.coverage import CoverInstance, WeightTiers, greedy_maxcover, greedy_weighted_maxcover
from icsel.feedback import (
    FeedbackSource,
    UncertaintyRecord,
    fetch_scores,
    pseudo_label,
    select_hard_set,
)
from icsel.graph import SemanticGraph, build_cover_sets

STRATEGY_NAMES = (
    "adaicl",
    "adaicl-plus",
    "adaicl-base",
    "random",
    "hardest",
    "votek",
    "fast-votek",
    "pseudo-label",
)
ADAPTIVE_STRATEGIES = ("adaicl", "adaicl-plus")
FAST_VOTEK_RHO = 10.0


class StrategyError(ValueError):
    pass


@dataclass
class StrategyConfig:
    name: str
    theta: float = 0.5
    m: int | None = None
    hops: int | None = None
    iterations: int = 2  # T, adaicl-plus only
    weight_base: float = 10.0
    k: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.name not in STRATEGY_NAMES:
            raise StrategyError(f"unknown strategy '{self.name}'")
        if not 0 <= self.theta <= 1:
            raise StrategyError("theta must lie in [0, 1]")
        if self.hops is None:
            self.hops = 2 if self.name == "adaicl" else 1
        if self.hops not in (1, 2):
            raise StrategyError("hops must be 1 or 2")
        if self.m is None:
            # defaults: 2-hop sets pair with m=5, 1-hop with m=15
            self.m = 5 if self.hops == 2 else 15
        if self.name == "adaicl-plus" and self.iterations < 1:
            raise StrategyError("iterations must be >= 1")

    @property
    def needs_graph(self) -> bool:
        return self.name in ("adaicl", "adaicl-plus", "votek", "fast-votek")

    @property
    def needs_feedback(self) -> bool:
        return self.name not in ("random", "fast-votek")


Annotator = Callable[[Example], str]


def ground_truth_annotator(example: Example) -> str:
    if example.label is None:
        raise AnnotationError(f"example '{example.id}' has no ground-truth label to reveal")
    return example.label


@dataclass
class RunSetup:
    """Shared state for one strategy run (or one schedule step of it)."""

    pool: Pool
    candidates: list[int]  # annotatable pool indices, ascending
    annotated: AnnotatedSet
    budget: Budget
    config: StrategyConfig
    source: FeedbackSource | None = None
    retriever: Callable | None = None
    graph: SemanticGraph | None = None
    trace: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.candidates = sorted(self.candidates)
        self.node_of = {self.pool.examples[p].id: n for n, p in enumerate(self.candidates)}

    def unlabeled(self) -> list[int]:
        return [i for i in self.candidates if self.pool.examples[i].id not in self.annotated]

    def score_unlabeled(self) -> list[UncertaintyRecord]:
        if self.source is None or self.retriever is None:
            raise StrategyError(f"strategy '{self.config.name}' needs a feedback source")
        return fetch_scores(
            self.source, self.pool, self.annotated, self.config.k, self.retriever, self.candidates
        )

    def hardest_ids(
        self, records: Sequence[UncertaintyRecord], n: int, exclude: set[str] = frozenset()
    ) -> list[str]:
        order = sorted(range(len(records)), key=lambda i: (records[i].confidence, i))
        out = []
        for i in order:
            if records[i].example_id in exclude:
                continue
            out.append(records[i].example_id)
            if len(out) == n:
                break
        if len(out) < n:
            raise StrategyError(f"only {len(out)} unlabeled examples left, need {n}")
        return out

    def annotate(self, labels: dict[str, str], provenance: str = GROUND_TRUTH) -> None:
        for ex_id, label in labels.items():
            self.annotated.add(AnnotatedEntry(ex_id, label, provenance))
        self.budget.charge(len(labels))

    def log(self, picked: list[str], records, **extra) -> None:
        entry = {
            "iteration": len(self.trace),
            "strategy": self.config.name,
            "picked": list(picked),
            "budget_spent": self.budget.spent + len(picked),
            "scores": {r.example_id: r.confidence for r in records} if records else {},
        }
        entry.update(extra)
        self.trace.append(entry)


class SelectionEngine:
    """Propose/supply state machine shared by the adaptive strategies."""

    def __init__(self, setup: RunSetup, quota: int):
        if quota < 0:
            raise StrategyError("quota must be non-negative")
        if quota > len(setup.unlabeled()):
            raise StrategyError(
                f"quota {quota} exceeds the {len(setup.unlabeled())} unlabeled examples"
            )
        self.setup = setup
        self.quota = quota
        self.picked_total = 0
        self.pending: list[str] = []
        self.pending_info: list[dict] = []
        self.fallback_used = False
        self.last_records: list[UncertaintyRecord] | None = None

    @property
    def done(self) -> bool:
        return self.picked_total >= self.quota and not self.pending

    @property
    def remaining(self) -> int:
        return self.quota - self.picked_total

    def propose(self) -> list[str]:
        if self.pending:
            return self.pending
        if self.remaining <= 0:
            return []
        picked, info = self._select_batch()
        self.pending = picked
        self.pending_info = info
        return picked

    def supply_labels(self, labels: dict[str, str], provenance: str = GROUND_TRUTH) -> None:
        if set(labels) != set(self.pending):
            raise StrategyError("labels must cover exactly the pending batch")
        self.setup.annotate(labels, provenance)
        self.picked_total += len(labels)
        self.pending = []
        self.pending_info = []

    def _select_batch(self) -> tuple[list[str], list[dict]]:
        raise NotImplementedError

    def _cover_context(self, records: Sequence[UncertaintyRecord]):
        setup = self.setup
        cfg = setup.config
        hard = select_hard_set(records, cfg.theta)
        hard_nodes = sorted(setup.node_of[i] for i in hard.ids)
        sets = build_cover_sets(setup.graph, hard_nodes, cfg.hops)
        conf = {r.example_id: r.confidence for r in records}
        unc = {
            setup.node_of[r.example_id]: -r.confidence
            for r in records
            if setup.node_of[r.example_id] in set(hard_nodes)
        }
        return hard, hard_nodes, sets, unc, conf

    def _info_for(self, picked: list[str], conf: dict[str, float], cover_sizes: dict) -> list[dict]:
        return [
            {
                "id": ex_id,
                "confidence": conf.get(ex_id),
                "cover_size": cover_sizes.get(ex_id, 0),
            }
            for ex_id in picked
        ]


class AdaIclEngine(SelectionEngine):
    """Adaptive rounds: score, take the hard half, cover it greedily, annotate,
    repeat until the quota is spent. Two consecutive empty rounds switch to
    hardest-first for the remainder."""

    def __init__(self, setup: RunSetup, quota: int):
        super().__init__(setup, quota)
        if setup.graph is None:
            raise StrategyError("adaicl needs a semantic graph")
        self.zero_streak = 0

    def _select_batch(self) -> tuple[list[str], list[dict]]:
        setup = self.setup
        while True:
            records = setup.score_unlabeled()
            self.last_records = records
            hard, hard_nodes, sets, unc, conf = self._cover_context(records)
            instance = CoverInstance(tuple(hard_nodes), sets, self.remaining, unc)
            result = greedy_maxcover(instance)
            if result.selected:
                self.zero_streak = 0
                picked = [setup.pool.examples[setup.candidates[n]].id for n in result.selected]
                sizes = {
                    setup.pool.examples[setup.candidates[s.center]].id: len(s) for s in sets
                }
                setup.log(
                    picked,
                    records,
                    hard_size=len(hard.ids),
                    coverage={
                        "covered": len(result.covered),
                        "universe": len(hard_nodes),
                        "gains": result.gains,
                    },
                )
                return picked, self._info_for(picked, conf, sizes)
            self.zero_streak += 1
            if self.zero_streak >= 2:
                self.fallback_used = True
                picked = setup.hardest_ids(records, self.remaining)
                setup.log(picked, records, hard_size=len(hard.ids), fallback="hardest")
                return picked, self._info_for(picked, conf, {})


class AdaIclPlusEngine(SelectionEngine):
    """Fixed number of rounds T; each round annotates its share of the quota by
    tier-weighted coverage (weights reset whenever the hard set is rescored)."""

    def __init__(self, setup: RunSetup, quota: int, iterations: int | None = None):
        super().__init__(setup, quota)
        if setup.graph is None:
            raise StrategyError("adaicl-plus needs a semantic graph")
        T = iterations if iterations is not None else setup.config.iterations
        if T < 1:
            raise StrategyError("iterations must be >= 1")
        per = quota // T
        quotas = [per] * T
        if quotas:
            quotas[-1] += quota - per * T
        self.quotas = [q for q in quotas if q > 0]
        self.round = 0

    def _select_batch(self) -> tuple[list[str], list[dict]]:
        setup = self.setup
        quota = self.quotas[self.round]
        self.round += 1
        records = setup.score_unlabeled()
        self.last_records = records
        hard, hard_nodes, sets, unc, conf = self._cover_context(records)
        instance = CoverInstance(tuple(hard_nodes), sets, quota, unc)
        tiers = WeightTiers(setup.config.weight_base)
        selected = greedy_weighted_maxcover(instance, tiers, quota)
        picked = [setup.pool.examples[setup.candidates[n]].id for n in selected]
        fallback = None
        if len(picked) < quota:
            self.fallback_used = True
            fallback = "hardest"
            extra = setup.hardest_ids(records, quota - len(picked), exclude=set(picked))
            picked = picked + extra
        sizes = {setup.pool.examples[setup.candidates[s.center]].id: len(s) for s in sets}
        setup.log(
            picked,
            records,
            hard_size=len(hard.ids),
            coverage={"universe": len(hard_nodes), "tiers": dict(sorted(tiers.tiers.items()))},
            **({"fallback": fallback} if fallback else {}),
        )
        return picked, self._info_for(picked, conf, sizes)


def drive(engine: SelectionEngine, annotator: Annotator, provenance: str = GROUND_TRUTH) -> None:
    """Run an engine to completion with a synchronous annotator."""
    pool = engine.setup.pool
    while not engine.done:
        batch = engine.propose()
        if not batch:
            break
        labels = {ex_id: annotator(pool.examples[pool.index_of(ex_id)]) for ex_id in batch}
        engine.supply_labels(labels, provenance)


# ---------------------------------------------------------------------------
# One-shot strategies
# ---------------------------------------------------------------------------


def run_adaicl(setup: RunSetup, n: int, annotator: Annotator = ground_truth_annotator) -> None:
    drive(AdaIclEngine(setup, n), annotator)


def run_adaicl_plus(
    setup: RunSetup,
    n: int,
    annotator: Annotator = ground_truth_annotator,
    iterations: int | None = None,
) -> None:
    drive(AdaIclPlusEngine(setup, n, iterations=iterations), annotator)


def run_adaicl_base(
    setup: RunSetup, n: int, annotator: Annotator = ground_truth_annotator
) -> None:
    """One scoring pass; k-means over the hard set with one pick per centroid
    (nearest remaining hard example). Theta relaxes upward when the hard set is
    smaller than the batch."""
    if n == 0:
        return
    records = setup.score_unlabeled()
    hard = select_hard_set(records, setup.config.theta)
    relaxed = False
    ids = hard.ids
    if len(ids) < n:
        relaxed = True
        ids = setup.hardest_ids(records, n)
    pts = setup.pool.embeddings[[setup.pool.index_of(i) for i in ids]].astype(np.float64)
    rng = seeded_rng(setup.config.seed, "adaicl-base", str(setup.budget.spent))
    centers, _ = kmeans(pts, n, rng)
    picked_pos = nearest_to_centroids(pts, centers)
    picked = [ids[i] for i in picked_pos]
    setup.log(
        picked,
        records,
        hard_size=len(ids),
        **({"theta_relaxed": True} if relaxed else {}),
    )
    labels = {i: annotator(setup.pool.examples[setup.pool.index_of(i)]) for i in picked}
    setup.annotate(labels)


def run_random(setup: RunSetup, n: int, annotator: Annotator = ground_truth_annotator) -> None:
    """Seeded uniform sample without replacement from the unlabeled pool."""
    if n == 0:
        return
    unlabeled = setup.unlabeled()
    if n > len(unlabeled):
        raise StrategyError(f"budget {n} exceeds {len(unlabeled)} unlabeled examples")
    rng = seeded_rng(setup.config.seed, "random", str(setup.budget.spent))
    picks = rng.choice(len(unlabeled), size=n, replace=False)
    picked = [setup.pool.examples[unlabeled[int(i)]].id for i in picks]
    setup.log(picked, None)
    labels = {i: annotator(setup.pool.examples[setup.pool.index_of(i)]) for i in picked}
    setup.annotate(labels)


def run_hardest(setup: RunSetup, n: int, annotator: Annotator = ground_truth_annotator) -> None:
    """One scoring pass; the n lowest-confidence unlabeled examples."""
    if n == 0:
        return
    records = setup.score_unlabeled()
    picked = setup.hardest_ids(records, n)
    setup.log(picked, records)
    labels = {i: annotator(setup.pool.examples[setup.pool.index_of(i)]) for i in picked}
    setup.annotate(labels)


def fast_votek_scores(
    graph: SemanticGraph,
    eligible: Sequence[int],
    selected: Sequence[int],
    rho: float = FAST_VOTEK_RHO,
) -> dict[int, float]:
    """Discounted in-neighbor votes: score(v) = sum over voters u (edges u->v)
    of sim(u, v) * rho**(-|{l in selected : u in out(l)}|)."""
    counts = np.zeros(graph.n, dtype=np.int64)
    for l in selected:
        for u in graph.out_idx[l]:
            counts[int(u)] += 1
    scores: dict[int, float] = {}
    for v in eligible:
        acc = 0.0
        for u, sim in graph.in_edges(v):
            acc += sim * rho ** (-float(counts[u]))
        scores[v] = acc
    return scores


def run_fast_votek(setup: RunSetup, n: int, annotator: Annotator = ground_truth_annotator) -> None:
    """Diversity-only selection: repeatedly take the best-voted node, votes
    discounted near already-selected examples."""
    if n == 0:
        return
    if setup.graph is None:
        raise StrategyError("fast-votek needs a semantic graph")
    picked: list[str] = []
    for _ in range(n):
        selected_nodes = [
            setup.node_of[e.example_id]
            for e in setup.annotated
            if e.example_id in setup.node_of
        ] + [setup.node_of[i] for i in picked]
        eligible = [
            setup.node_of[setup.pool.examples[i].id]
            for i in setup.unlabeled()
            if setup.pool.examples[i].id not in picked
        ]
        if not eligible:
            raise StrategyError("ran out of unlabeled examples")
        scores = fast_votek_scores(setup.graph, eligible, selected_nodes)
        best = max(eligible, key=lambda v: (scores[v], -v))
        picked.append(setup.pool.examples[setup.candidates[best]].id)
    setup.log(picked, None)
    labels = {i: annotator(setup.pool.examples[setup.pool.index_of(i)]) for i in picked}
    setup.annotate(labels)


def run_votek(setup: RunSetup, n: int, annotator: Annotator = ground_truth_annotator) -> None:
    """Confidence-stratified fast-votek: sort unlabeled by confidence, split
    into n contiguous buckets (earlier, harder buckets take the remainder),
    pick the top fast-votek node per bucket."""
    if n == 0:
        return
    if setup.graph is None:
        raise StrategyError("votek needs a semantic graph")
    records = setup.score_unlabeled()
    if n > len(records):
        raise StrategyError(f"budget {n} exceeds {len(records)} unlabeled examples")
    order = sorted(range(len(records)), key=lambda i: (records[i].confidence, i))
    base, rem = divmod(len(order), n)
    buckets = []
    start = 0
    for b in range(n):
        size = base + (1 if b < rem else 0)
        buckets.append(order[start : start + size])
        start += size
    picked: list[str] = []
    for bucket in buckets:
        selected_nodes = [
            setup.node_of[e.example_id]
            for e in setup.annotated
            if e.example_id in setup.node_of
        ] + [setup.node_of[i] for i in picked]
        eligible = [setup.node_of[records[i].example_id] for i in bucket]
        scores = fast_votek_scores(setup.graph, eligible, selected_nodes)
        best = max(eligible, key=lambda v: (scores[v], -v))
        picked.append(setup.pool.examples[setup.candidates[best]].id)
    setup.log(picked, records)
    labels = {i: annotator(setup.pool.examples[setup.pool.index_of(i)]) for i in picked}
    setup.annotate(labels)


def run_pseudo_label(setup: RunSetup, n: int) -> None:
    """The n highest-confidence unlabeled examples, annotated with the model's
    own predictions."""
    if n == 0:
        return
    entries = pseudo_label(
        setup.source,
        setup.pool,
        setup.annotated,
        n,
        setup.config.k,
        setup.retriever,
        setup.candidates,
    )
    setup.log([e.example_id for e in entries], None)
    for e in entries:
        setup.annotated.add(e)
    setup.budget.charge(len(entries))


_RUNNERS = {
    "adaicl": run_adaicl,
    "adaicl-plus": run_adaicl_plus,
    "adaicl-base": run_adaicl_base,
    "random": run_random,
    "hardest": run_hardest,
    "votek": run_votek,
    "fast-votek": run_fast_votek,
}


def run_strategy_step(
    setup: RunSetup, n: int, annotator: Annotator = ground_truth_annotator
) -> None:
    """Dispatch one budget step of the configured strategy."""
    name = setup.config.name
    if name == "pseudo-label":
        run_pseudo_label(setup, n)
    elif name in _RUNNERS:
        _RUNNERS[name](setup, n, annotator)
    else:
        raise StrategyError(f"unknown strategy '{name}'")
