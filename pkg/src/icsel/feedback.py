"""Model-uncertainty acquisition: score files, an HTTP inference client, a
kernel-regression oracle, and hard-set determination."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from icsel.core import AnnotatedEntry, AnnotatedSet, Example, Pool, PSEUDO_LABEL

PROB_TOL = 1e-6


class FeedbackError(RuntimeError):
    pass


@dataclass
class UncertaintyRecord:
    """Per-example model confidence and prediction.

    Classification: `confidence` is the max of `per_class` (which sums to 1).
    Generation: `confidence` is the mean of `token_logprobs`.
    """

    example_id: str
    confidence: float
    prediction: str | None = None
    per_class: dict[str, float] | None = None
    token_logprobs: list[float] | None = None

    def validate(self) -> "UncertaintyRecord":
        if self.per_class is not None:
            total = sum(self.per_class.values())
            if abs(total - 1.0) > PROB_TOL:
                raise FeedbackError(
                    f"per_class for '{self.example_id}' sums to {total}, expected 1"
                )
            if abs(max(self.per_class.values()) - self.confidence) > PROB_TOL:
                raise FeedbackError(
                    f"confidence for '{self.example_id}' disagrees with per_class max"
                )
        elif self.token_logprobs is not None:
            mean = sum(self.token_logprobs) / len(self.token_logprobs)
            if abs(mean - self.confidence) > PROB_TOL:
                raise FeedbackError(
                    f"confidence for '{self.example_id}' disagrees with mean logprob"
                )
        return self


@dataclass
class HardSet:
    """The floor(theta*N) lowest-confidence example ids, ascending confidence."""

    ids: list[str]
    theta: float
    n_theta: int


def score_classification(per_class: dict[str, float]) -> tuple[str, float]:
    """Prediction = argmax label (ties to the lexicographically smallest);
    confidence = the max probability."""
    if not per_class:
        raise FeedbackError("empty class distribution")
    for label, p in per_class.items():
        if p < 0 or not math.isfinite(p):
            raise FeedbackError(f"invalid probability {p} for label '{label}'")
    total = sum(per_class.values())
    if abs(total - 1.0) > PROB_TOL:
        raise FeedbackError(f"class distribution sums to {total}, expected 1")
    best = max(per_class.values())
    prediction = min(l for l, p in per_class.items() if p == best)
    return prediction, best


def score_generation(token_logprobs: Sequence[float]) -> float:
    """Mean token log-probability (all entries must be <= 0)."""
    if len(token_logprobs) == 0:
        raise FeedbackError("empty token logprob list")
    if any(lp > 0 for lp in token_logprobs):
        raise FeedbackError("token logprobs must be non-positive")
    return float(sum(token_logprobs) / len(token_logprobs))


def select_hard_set(records: Sequence[UncertaintyRecord], theta: float) -> HardSet:
    """The floor(theta*N) lowest-confidence records; ties keep input order
    (records arrive in pool-index order)."""
    if not 0 <= theta <= 1:
        raise FeedbackError("theta must lie in [0, 1]")
    n_theta = math.floor(theta * len(records))
    order = sorted(range(len(records)), key=lambda i: (records[i].confidence, i))
    ids = [records[i].example_id for i in order[:n_theta]]
    return HardSet(ids, theta, n_theta)


def kernel_weight(cos: float, bandwidth: float) -> float:
    """Similarity kernel exp((cos - 1) / bandwidth), bounded in (0, 1]."""
    return math.exp((cos - 1.0) / bandwidth)


def kernel_oracle_predict(
    demos: Sequence[tuple[np.ndarray, str]],
    query: np.ndarray,
    bandwidth: float = 0.1,
) -> tuple[str, dict[str, float]]:
    """Similarity-weighted label average over the demos (the synthetic stand-in
    for an LLM): per-class score is the kernel mass of same-label demos over the
    total mass; prediction is the argmax with lexicographic ties."""
    if not demos:
        raise FeedbackError("kernel oracle needs at least one demo")
    if bandwidth <= 0:
        raise FeedbackError("bandwidth must be positive")
    q = np.asarray(query, dtype=np.float64)
    qn = np.linalg.norm(q)
    per_class: dict[str, float] = {}
    total = 0.0
    for emb, label in demos:
        e = np.asarray(emb, dtype=np.float64)
        cos = float(np.dot(e, q) / (np.linalg.norm(e) * qn))
        w = kernel_weight(cos, bandwidth)
        per_class[label] = per_class.get(label, 0.0) + w
        total += w
    if total <= 0.0:
        raise FeedbackError("zero total kernel mass")
    per_class = {l: w / total for l, w in per_class.items()}
    best = max(per_class.values())
    prediction = min(l for l, p in per_class.items() if p == best)
    return prediction, per_class


class Retriever(Protocol):
    """Demo retrieval handle: (annotated, query_index, k) -> ordered demo list
    in prompt order (most similar last). Provided by the inference module."""

    def __call__(self, annotated: AnnotatedSet, query_index: int, k: int) -> list:
        ...


class FeedbackSource:
    """Base interface: score one query example given its retrieved demos."""

    max_in_flight: int = 1

    def score_with_demos(self, demos: list, query: Example) -> UncertaintyRecord:
        raise NotImplementedError


class KernelOracleSource(FeedbackSource):
    """Local synthetic oracle; zero-shot (no demos) falls back to a uniform
    prior over the configured labels."""

    def __init__(self, labels: Sequence[str], bandwidth: float = 0.1):
        if not labels:
            raise FeedbackError("kernel oracle needs a label set")
        self.labels = sorted(labels)
        self.bandwidth = float(bandwidth)

    @classmethod
    def for_pool(cls, pool: Pool, bandwidth: float = 0.1) -> "KernelOracleSource":
        return cls(pool.label_vocabulary(), bandwidth)

    def score_with_demos(self, demos: list, query: Example) -> UncertaintyRecord:
        if not demos:
            p = 1.0 / len(self.labels)
            per_class = {l: p for l in self.labels}
            return UncertaintyRecord(query.id, p, self.labels[0], per_class)
        pairs = [(d.embedding, d.label) for d in demos]
        prediction, per_class = kernel_oracle_predict(pairs, query.embedding, self.bandwidth)
        return UncertaintyRecord(query.id, per_class[prediction], prediction, per_class)


class ScoreFileSource(FeedbackSource):
    """Static per-id scores from a JSONL file
    {id, confidence, prediction?, per_class?, token_logprobs?}."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: dict[str, UncertaintyRecord] = {}
        with open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FeedbackError(f"{self.path}:{lineno}: malformed record: {exc}") from exc
                if "id" not in rec or "confidence" not in rec:
                    raise FeedbackError(f"{self.path}:{lineno}: missing 'id' or 'confidence'")
                record = UncertaintyRecord(
                    str(rec["id"]),
                    float(rec["confidence"]),
                    rec.get("prediction"),
                    rec.get("per_class"),
                    rec.get("token_logprobs"),
                ).validate()
                self._records[record.example_id] = record

    def score_with_demos(self, demos: list, query: Example) -> UncertaintyRecord:
        if query.id not in self._records:
            raise FeedbackError(f"score file {self.path} has no score for id '{query.id}'")
        return self._records[query.id]


class HttpSource(FeedbackSource):
    """HTTP inference client: one POST per example carrying the assembled
    prompt; expects {class_logprobs: {label: lp}} or {token_logprobs: [..]}.

    Transient failures are retried with capped exponential backoff; exhausting
    retries fails the run naming the example.
    """

    def __init__(
        self,
        base_url: str,
        path: str = "/score",
        model: str = "default",
        labels: Sequence[str] | None = None,
        auth_env: str | None = None,
        timeout: float = 30.0,
        max_retries: int = 3,
        max_in_flight: int = 4,
        prompt_builder: Callable[[list, str], str] | None = None,
        session=None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.path = path
        self.model = model
        self.labels = sorted(labels) if labels else None
        self.auth_env = auth_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.max_in_flight = max(1, int(max_in_flight))
        self.prompt_builder = prompt_builder
        self._sleep = sleeper
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env)
            if not token:
                raise FeedbackError(f"auth env var '{self.auth_env}' is not set")
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def score_with_demos(self, demos: list, query: Example) -> UncertaintyRecord:
        if self.prompt_builder is None:
            raise FeedbackError("HttpSource needs a prompt_builder")
        prompt = self.prompt_builder(demos, query.text)
        payload = {"model": self.model, "prompt": prompt}
        if self.labels:
            payload["labels"] = self.labels
        url = self.base_url + self.path
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(min(2.0, 0.1 * 2 ** (attempt - 1)))
            try:
                resp = self.session.post(
                    url, json=payload, headers=self._headers(), timeout=self.timeout
                )
                if resp.status_code >= 500:
                    last_error = FeedbackError(f"server error {resp.status_code}")
                    continue
                if resp.status_code != 200:
                    raise FeedbackError(
                        f"scoring '{query.id}' failed with HTTP {resp.status_code}"
                    )
                return self._parse(resp.json(), query.id)
            except FeedbackError:
                raise
            except Exception as exc:  # connection/timeout
                last_error = exc
        raise FeedbackError(
            f"scoring '{query.id}' failed after {self.max_retries + 1} attempts: {last_error}"
        )

    def _parse(self, body: dict, example_id: str) -> UncertaintyRecord:
        if "class_logprobs" in body:
            logprobs = body["class_logprobs"]
            if not isinstance(logprobs, dict) or not logprobs:
                raise FeedbackError(f"malformed class_logprobs for '{example_id}'")
            if self.labels:
                missing = [l for l in self.labels if l not in logprobs]
                if missing:
                    raise FeedbackError(
                        f"response for '{example_id}' lacks labels {missing}"
                    )
                logprobs = {l: logprobs[l] for l in self.labels}
            mx = max(logprobs.values())
            exp = {l: math.exp(lp - mx) for l, lp in logprobs.items()}
            z = sum(exp.values())
            per_class = {l: v / z for l, v in exp.items()}
            prediction, conf = score_classification(per_class)
            return UncertaintyRecord(example_id, conf, prediction, per_class)
        if "token_logprobs" in body:
            lps = body["token_logprobs"]
            if not isinstance(lps, list) or not lps:
                raise FeedbackError(f"malformed token_logprobs for '{example_id}'")
            conf = score_generation(lps)
            return UncertaintyRecord(
                example_id, conf, body.get("prediction"), token_logprobs=list(lps)
            )
        raise FeedbackError(
            f"response for '{example_id}' has neither class_logprobs nor token_logprobs"
        )


def fetch_scores(
    source: FeedbackSource,
    pool: Pool,
    annotated: AnnotatedSet,
    k: int,
    retriever: Retriever,
    indices: Sequence[int] | None = None,
) -> list[UncertaintyRecord]:
    """One record per unlabeled example among `indices` (default: whole pool),
    sorted by pool index. Requests may run concurrently; aggregation is
    order-independent."""
    if indices is None:
        indices = range(len(pool))
    targets = [i for i in indices if pool.examples[i].id not in annotated]

    def score_one(i: int) -> UncertaintyRecord:
        demos = retriever(annotated, i, k)
        return source.score_with_demos(demos, pool.examples[i])

    if source.max_in_flight > 1 and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=source.max_in_flight) as ex:
            records = list(ex.map(score_one, targets))
    else:
        records = [score_one(i) for i in targets]
    return records


def pseudo_label(
    source: FeedbackSource,
    pool: Pool,
    annotated: AnnotatedSet,
    count: int,
    k: int,
    retriever: Retriever,
    indices: Sequence[int] | None = None,
) -> list[AnnotatedEntry]:
    """The `count` highest-confidence unlabeled examples, annotated with the
    model's own prediction."""
    if count == 0:
        return []
    records = fetch_scores(source, pool, annotated, k, retriever, indices)
    if count > len(records):
        raise FeedbackError(f"cannot pseudo-label {count} of {len(records)} examples")
    order = sorted(range(len(records)), key=lambda i: (-records[i].confidence, i))
    entries = []
    for i in order[:count]:
        rec = records[i]
        if rec.prediction is None:
            raise FeedbackError(f"no prediction available to pseudo-label '{rec.example_id}'")
        entries.append(AnnotatedEntry(rec.example_id, rec.prediction, PSEUDO_LABEL))
    return entries
