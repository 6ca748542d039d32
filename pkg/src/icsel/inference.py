"""k-NN demo retrieval, prompt assembly, and evaluation of an annotated set."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from icsel.core import AnnotatedSet, Pool
from icsel.feedback import FeedbackSource, UncertaintyRecord


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    """Verbalization of demos and query, plus the class -> target-token map."""

    demo_pattern: str = "{text}: {label}"
    separator: str = " \n "
    query_pattern: str = "{text}:"
    label_map: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if "{text}" not in self.demo_pattern or "{label}" not in self.demo_pattern:
            raise TemplateError("demo_pattern must contain {text} and {label}")
        if "{text}" not in self.query_pattern:
            raise TemplateError("query_pattern must contain {text}")

    def render_demo(self, text: str, label: str) -> str:
        return self.demo_pattern.format(text=text, label=self.label_map.get(label, label))

    @classmethod
    def from_dict(cls, d: dict) -> "PromptTemplate":
        return cls(
            d.get("demo_pattern", "{text}: {label}"),
            d.get("separator", " \n "),
            d.get("query_pattern", "{text}:"),
            d.get("label_map", {}),
        )


DEFAULT_TEMPLATE = PromptTemplate()


@dataclass(frozen=True)
class Demo:
    example_id: str
    text: str
    label: str
    embedding: np.ndarray
    similarity: float


def retrieve_topk(
    annotated: AnnotatedSet,
    pool: Pool,
    query: np.ndarray,
    k: int,
    exclude_id: str | None = None,
    max_chars: int | None = None,
) -> list[Demo]:
    """The most similar annotated demos, emitted in ascending similarity so the
    closest sits nearest the query in the prompt.

    `exclude_id` drops the query itself in transductive runs. When `max_chars`
    is given, demos are taken most-similar-first until the character budget
    (len(text)+len(label) per demo) is spent, instead of capping at k.
    """
    if k < 1 and max_chars is None:
        raise ValueError("k must be >= 1")
    entries = [e for e in annotated if e.example_id != exclude_id]
    if not entries:
        return []
    idx = [pool.index_of(e.example_id) for e in entries]
    emb = pool.embeddings[idx].astype(np.float64)
    q = np.asarray(query, dtype=np.float64)
    sims = (emb @ q) / (np.linalg.norm(emb, axis=1) * np.linalg.norm(q))
    # most-similar-first with ties toward the lower pool index
    order = sorted(range(len(entries)), key=lambda j: (-sims[j], idx[j]))
    if max_chars is not None:
        chosen: list[int] = []
        budget = max_chars
        for j in order:
            cost = len(pool.examples[idx[j]].text) + len(entries[j].label)
            if cost > budget:
                break
            chosen.append(j)
            budget -= cost
    else:
        chosen = order[: min(k, len(entries))]
    # prompt order: ascending similarity, ties toward the lower pool index
    chosen.sort(key=lambda j: (sims[j], idx[j]))
    return [
        Demo(
            entries[j].example_id,
            pool.examples[idx[j]].text,
            entries[j].label,
            pool.embeddings[idx[j]],
            float(sims[j]),
        )
        for j in chosen
    ]


def make_retriever(pool: Pool, transductive: bool = False, max_chars: int | None = None):
    """Retriever handle for the feedback sources (annotated, query_index, k)."""

    def retriever(annotated: AnnotatedSet, query_index: int, k: int) -> list[Demo]:
        ex = pool.examples[query_index]
        return retrieve_topk(
            annotated,
            pool,
            ex.embedding,
            k,
            exclude_id=ex.id if transductive else None,
            max_chars=max_chars,
        )

    return retriever


def assemble_prompt(template: PromptTemplate, demos: Sequence[Demo], query_text: str) -> str:
    """Verbalized demos joined by the separator, then the query pattern."""
    pieces = [template.render_demo(d.text, d.label) for d in demos]
    pieces.append(template.query_pattern.format(text=query_text))
    return template.separator.join(pieces)


def make_prompt_builder(template: PromptTemplate):
    def build(demos: list, query_text: str) -> str:
        return assemble_prompt(template, demos, query_text)

    return build


@dataclass
class EvalRecord:
    example_id: str
    prediction: str | None
    confidence: float
    correct: bool | None
    true_label: str | None
    retrieved_ids: list[str]


@dataclass
class EvalReport:
    accuracy: float | None  # None for the scored-generation stub
    records: list[EvalRecord]
    seed: int | None = None
    config_hash: str | None = None

    @property
    def confidences(self) -> list[float]:
        return [r.confidence for r in self.records]

    @property
    def correct_flags(self) -> list[bool]:
        return [bool(r.correct) for r in self.records if r.correct is not None]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "n": len(self.records),
            "records": [
                {
                    "id": r.example_id,
                    "prediction": r.prediction,
                    "confidence": r.confidence,
                    "correct": r.correct,
                    "true_label": r.true_label,
                    "retrieved_ids": r.retrieved_ids,
                }
                for r in self.records
            ],
        }


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()[:16]


def evaluate(
    annotated: AnnotatedSet,
    pool: Pool,
    test_indices: Sequence[int],
    source: FeedbackSource,
    template: PromptTemplate = DEFAULT_TEMPLATE,
    k: int = 5,
    transductive: bool = False,
    max_chars: int | None = None,
    seed: int | None = None,
    cfg_hash: str | None = None,
) -> EvalReport:
    """Retrieve -> assemble -> score each test instance; classification accuracy
    plus per-example confidences for the calibration module."""
    if len(test_indices) == 0:
        raise ValueError("test split is empty")
    retriever = make_retriever(pool, transductive=transductive, max_chars=max_chars)
    records: list[EvalRecord] = []
    n_correct = 0
    n_classified = 0
    for i in test_indices:
        ex = pool.examples[i]
        demos = retriever(annotated, i, k)
        rec: UncertaintyRecord = source.score_with_demos(demos, ex)
        correct: bool | None = None
        if rec.prediction is not None and ex.label is not None:
            correct = rec.prediction == ex.label
            n_classified += 1
            n_correct += int(correct)
        records.append(
            EvalRecord(
                ex.id,
                rec.prediction,
                rec.confidence,
                correct,
                ex.label,
                [d.example_id for d in demos],
            )
        )
    accuracy = (n_correct / n_classified) if n_classified else None
    return EvalReport(accuracy, records, seed=seed, config_hash=cfg_hash)
