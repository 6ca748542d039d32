"""Experiment configuration: JSON loading, validation, defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from icsel.core import Pool, load_pool
from icsel.strategies import ADAPTIVE_STRATEGIES, STRATEGY_NAMES


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


# paper-default experimental setup; a minimal config runs exactly this
DEFAULTS = {
    "mode": "inductive",
    "format": "jsonl",
    "candidate_subsample": 3000,
    "candidate_clusters": 310,
    "init_pool_size": 10,
    "budget": 20,
    "budget_schedule": None,
    "k": 5,
    "theta": 0.5,
    "theta_hat": 0.5,
    "iterations": 2,
    "max_iterations_hint": 2,
    "weight_base": 10.0,
    "test_sample": 256,
    "n_bins": 10,
    "eval_max_chars": None,
    "feedback": {"kind": "kernel-oracle", "bandwidth": 0.1},
    "template": None,
}


@dataclass
class StrategySpec:
    name: str
    m: int | None = None
    hops: int | None = None
    theta: float | None = None
    iterations: int | None = None
    weight_base: float | None = None

    @property
    def label(self) -> str:
        return self.name


@dataclass
class ExperimentConfig:
    pool_train: str
    pool_test: str | None
    pool_format: str
    mode: str
    candidate_subsample: int | None
    candidate_clusters: int | None
    init_pool_size: int
    budget: int
    budget_schedule: list[int] | None  # cumulative checkpoints, last == budget
    k: int
    theta: float
    theta_hat: float
    iterations: int
    max_iterations_hint: int
    weight_base: float
    strategies: list[StrategySpec]
    seeds: list[int]
    feedback: dict
    template: dict | None
    test_sample: int | None
    n_bins: int
    eval_max_chars: int | None
    output_dir: str
    raw: dict = field(default_factory=dict)

    @property
    def increments(self) -> list[int]:
        """Per-step budget increments derived from the cumulative schedule."""
        if not self.budget_schedule:
            return [self.budget]
        prev = 0
        out = []
        for b in self.budget_schedule:
            out.append(b - prev)
            prev = b
        return out

    @property
    def checkpoints(self) -> list[int]:
        if not self.budget_schedule:
            return [self.budget]
        return list(self.budget_schedule)

    def canonical(self) -> dict:
        d = dict(self.raw)
        d.pop("output_dir", None)
        return d


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{field_name}: {message}")


def parse_config(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    merged = dict(DEFAULTS)
    merged.update({k: v for k, v in data.items() if v is not None})

    pool = merged.get("pool")
    _require(isinstance(pool, dict) and "train" in pool, "pool", "need {'train': path}")
    base = base_dir or Path(".")

    def resolve(p):
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    pool_train = resolve(pool["train"])
    pool_test = resolve(pool["test"]) if pool.get("test") else None
    pool_format = pool.get("format", merged["format"])
    _require(
        pool_format in ("jsonl", "jsonl+bin", "jsonl+binary-embeddings"),
        "pool.format",
        f"unknown '{pool_format}'",
    )

    mode = merged["mode"]
    _require(mode in ("inductive", "transductive"), "mode", f"unknown '{mode}'")

    budget = merged["budget"]
    _require(isinstance(budget, int) and budget >= 0, "budget", "must be a non-negative integer")
    schedule = merged.get("budget_schedule")
    if schedule is not None:
        _require(
            isinstance(schedule, list) and all(isinstance(b, int) for b in schedule) and schedule,
            "budget_schedule",
            "must be a non-empty list of integers",
        )
        _require(
            all(b2 > b1 for b1, b2 in zip(schedule, schedule[1:])) and schedule[0] > 0,
            "budget_schedule",
            "checkpoints must be strictly increasing and positive",
        )
        if data.get("budget") is not None and data["budget"] != schedule[-1]:
            raise ConfigError("budget_schedule: last checkpoint must equal budget")
        budget = schedule[-1]

    seeds = merged.get("seeds")
    _require(
        isinstance(seeds, list) and len(seeds) > 0 and all(isinstance(s, int) for s in seeds),
        "seeds",
        "must be a non-empty list of integers",
    )

    raw_strategies = merged.get("strategies")
    _require(
        isinstance(raw_strategies, list) and raw_strategies,
        "strategies",
        "must be a non-empty list",
    )
    strategies: list[StrategySpec] = []
    for i, s in enumerate(raw_strategies):
        if isinstance(s, str):
            spec = StrategySpec(s)
        elif isinstance(s, dict) and "name" in s:
            spec = StrategySpec(
                s["name"],
                s.get("m"),
                s.get("hops"),
                s.get("theta"),
                s.get("iterations"),
                s.get("weight_base"),
            )
        else:
            raise ConfigError(f"strategies[{i}]: expected a name or an object with 'name'")
        _require(spec.name in STRATEGY_NAMES, f"strategies[{i}].name", f"unknown '{spec.name}'")
        if spec.hops is not None:
            _require(spec.hops in (1, 2), f"strategies[{i}].hops", "must be 1 or 2")
        strategies.append(spec)

    feedback = merged["feedback"]
    _require(isinstance(feedback, dict) and "kind" in feedback, "feedback", "need {'kind': ...}")
    if feedback.get("kind") == "http-endpoint":
        feedback = dict(feedback)
        feedback["kind"] = "http"
    _require(
        feedback["kind"] in ("kernel-oracle", "score-file", "http"),
        "feedback.kind",
        f"unknown '{feedback['kind']}'",
    )
    if feedback["kind"] == "score-file":
        _require("path" in feedback, "feedback.path", "score-file feedback needs a path")
        feedback = dict(feedback)
        feedback["path"] = resolve(feedback["path"])
    if feedback["kind"] == "http":
        _require("base_url" in feedback, "feedback.base_url", "http feedback needs a base_url")

    theta = merged["theta"]
    _require(0 <= theta <= 1, "theta", "must lie in [0, 1]")
    theta_hat = merged["theta_hat"]
    _require(0 < theta_hat <= 1, "theta_hat", "must lie in (0, 1]")
    k = merged["k"]
    _require(isinstance(k, int) and k >= 1, "k", "must be a positive integer")
    iterations = merged["iterations"]
    _require(isinstance(iterations, int) and iterations >= 1, "iterations", "must be >= 1")
    n_bins = merged["n_bins"]
    _require(isinstance(n_bins, int) and n_bins >= 1, "n_bins", "must be >= 1")
    init_pool_size = merged["init_pool_size"]
    _require(
        isinstance(init_pool_size, int) and init_pool_size >= 0,
        "init_pool_size",
        "must be >= 0",
    )
    test_sample = merged.get("test_sample")
    if test_sample is not None:
        _require(
            isinstance(test_sample, int) and test_sample >= 1, "test_sample", "must be >= 1"
        )

    output_dir = merged.get("output_dir")
    _require(isinstance(output_dir, str) and output_dir, "output_dir", "required")

    raw = dict(merged)
    raw["pool"] = {"train": pool_train, **({"test": pool_test} if pool_test else {})}
    raw["budget"] = budget
    raw["feedback"] = feedback
    return ExperimentConfig(
        pool_train=pool_train,
        pool_test=pool_test,
        pool_format=pool_format,
        mode=mode,
        candidate_subsample=merged.get("candidate_subsample"),
        candidate_clusters=merged.get("candidate_clusters"),
        init_pool_size=init_pool_size,
        budget=budget,
        budget_schedule=schedule,
        k=k,
        theta=theta,
        theta_hat=theta_hat,
        iterations=iterations,
        max_iterations_hint=merged["max_iterations_hint"],
        weight_base=float(merged["weight_base"]),
        strategies=strategies,
        seeds=list(seeds),
        feedback=feedback,
        template=merged.get("template"),
        test_sample=test_sample,
        n_bins=n_bins,
        eval_max_chars=merged.get("eval_max_chars"),
        output_dir=resolve(output_dir),
        raw=raw,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    return parse_config(data, base_dir=path.parent)


def load_experiment_pool(cfg: ExperimentConfig) -> Pool:
    """Load the train (and optional separate test) pool into one Pool with
    'train'/'test' splits."""
    pool = load_pool(cfg.pool_train, cfg.pool_format)
    if cfg.pool_test is None:
        if "test" not in pool.splits and cfg.mode == "inductive":
            raise ConfigError("pool: inductive mode needs a test split or a pool.test file")
        return pool
    test_pool = load_pool(cfg.pool_test, cfg.pool_format)
    examples = list(pool.examples) + list(test_pool.examples)
    n = len(pool.examples)
    splits = {
        "train": list(range(n)),
        "test": [n + i for i in range(len(test_pool.examples))],
    }
    return Pool(examples, splits)
