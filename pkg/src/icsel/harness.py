"""Experiment orchestration: strategy runs, multi-step schedules, multi-seed
aggregation, comparison tables, and plot-data export."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from icsel.calibration import ece, simplex_calibration_report
from icsel.config import ConfigError, ExperimentConfig, load_experiment_pool
from icsel.core import AnnotatedSet, Budget, Pool, init_pool_kmeans, prepare_candidate_pool, seeded_rng
from icsel.feedback import FeedbackSource, HttpSource, KernelOracleSource, ScoreFileSource
from icsel.graph import build_delta_graph, build_mnn_graph
from icsel.inference import (
    DEFAULT_TEMPLATE,
    PromptTemplate,
    config_hash,
    evaluate,
    make_prompt_builder,
    make_retriever,
)
from icsel.strategies import RunSetup, StrategyConfig, run_strategy_step


def make_feedback_source(
    cfg_feedback: dict, pool: Pool, template: PromptTemplate
) -> FeedbackSource:
    kind = cfg_feedback["kind"]
    if kind == "kernel-oracle":
        labels = cfg_feedback.get("labels") or pool.label_vocabulary()
        return KernelOracleSource(labels, cfg_feedback.get("bandwidth", 0.1))
    if kind == "score-file":
        return ScoreFileSource(cfg_feedback["path"])
    if kind == "http":
        return HttpSource(
            base_url=cfg_feedback["base_url"],
            path=cfg_feedback.get("path", "/score"),
            model=cfg_feedback.get("model", "default"),
            labels=cfg_feedback.get("labels") or pool.label_vocabulary() or None,
            auth_env=cfg_feedback.get("auth_env"),
            timeout=cfg_feedback.get("timeout", 30.0),
            max_retries=cfg_feedback.get("max_retries", 3),
            max_in_flight=cfg_feedback.get("max_in_flight", 4),
            prompt_builder=make_prompt_builder(template),
        )
    raise ConfigError(f"feedback.kind: unknown '{kind}'")


def pca_2d(points: np.ndarray) -> np.ndarray:
    """Two leading principal components with a deterministic sign convention
    (largest-magnitude loading positive)."""
    X = np.asarray(points, dtype=np.float64)
    centered = X - X.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:2]
    for i in range(comps.shape[0]):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return centered @ comps.T


def _strategy_labels(cfg: ExperimentConfig) -> list[str]:
    labels = []
    seen: dict[str, int] = {}
    for spec in cfg.strategies:
        n = seen.get(spec.name, 0)
        labels.append(spec.name if n == 0 else f"{spec.name}#{n + 1}")
        seen[spec.name] = n + 1
    return labels


def _candidates_for_seed(cfg: ExperimentConfig, pool: Pool, seed: int) -> list[int]:
    if cfg.mode == "transductive":
        base = pool.split("test") if "test" in pool.splits else list(range(len(pool)))
    else:
        base = pool.split("train") if "train" in pool.splits else list(range(len(pool)))
    if (
        cfg.candidate_subsample is not None
        and cfg.candidate_clusters is not None
        and len(base) > cfg.candidate_subsample
    ):
        return prepare_candidate_pool(
            pool, cfg.candidate_subsample, cfg.candidate_clusters, seed, base
        )
    return list(base)


def _test_indices_for_seed(cfg: ExperimentConfig, pool: Pool, seed: int) -> list[int]:
    base = pool.split("test") if "test" in pool.splits else list(range(len(pool)))
    if cfg.test_sample is not None and len(base) > cfg.test_sample:
        rng = seeded_rng(seed, "test-sample")
        picks = rng.choice(len(base), size=cfg.test_sample, replace=False)
        return sorted(base[int(i)] for i in picks)
    return list(base)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Full (strategy x seed x budget-step) grid; writes reports, traces,
    calibration CSVs, and the aggregated summary JSON. Returns the summary."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    pool = load_experiment_pool(cfg)
    template = PromptTemplate.from_dict(cfg.template) if cfg.template else DEFAULT_TEMPLATE
    transductive = cfg.mode == "transductive"
    cfg_hash = config_hash(cfg.canonical())
    labels = _strategy_labels(cfg)
    (out / "config.json").write_text(json.dumps(cfg.raw, indent=2, sort_keys=True))

    results: dict[str, dict[int, list[float | None]]] = {
        label: {b: [] for b in cfg.checkpoints} for label in labels
    }
    multi_step = len(cfg.increments) > 1

    for seed in cfg.seeds:
        candidates = _candidates_for_seed(cfg, pool, seed)
        test_idx = _test_indices_for_seed(cfg, pool, seed)
        if cfg.budget > len(candidates) - cfg.init_pool_size:
            raise ConfigError(
                f"budget: {cfg.budget} exceeds the {len(candidates)} candidates minus "
                f"init pool {cfg.init_pool_size}"
            )
        init = init_pool_kmeans(pool, cfg.init_pool_size, seed, candidates)
        source = make_feedback_source(cfg.feedback, pool, template)
        retriever = make_retriever(pool, transductive=transductive, max_chars=cfg.eval_max_chars)
        graph_cache: dict = {}

        for spec, label in zip(cfg.strategies, labels):
            iterations = spec.iterations
            if iterations is None:
                iterations = 1 if multi_step else cfg.iterations
            scfg = StrategyConfig(
                name=spec.name,
                theta=spec.theta if spec.theta is not None else cfg.theta,
                m=spec.m,
                hops=spec.hops,
                iterations=iterations,
                weight_base=spec.weight_base if spec.weight_base is not None else cfg.weight_base,
                k=cfg.k,
                seed=seed,
            )
            graph = None
            if scfg.needs_graph:
                key = (cfg.raw.get("graph_kind", "mnn"), scfg.m)
                if key not in graph_cache:
                    if key[0] == "delta":
                        graph_cache[key] = build_delta_graph(pool, scfg.m, candidates)
                    else:
                        graph_cache[key] = build_mnn_graph(pool, scfg.m, candidates)
                graph = graph_cache[key]
            setup = RunSetup(
                pool,
                candidates,
                init.copy(),
                Budget(cfg.budget, schedule=cfg.increments if multi_step else None),
                scfg,
                source,
                retriever,
                graph,
            )
            run_dir = out / label / f"seed{seed}"
            run_dir.mkdir(parents=True, exist_ok=True)
            for increment, checkpoint in zip(cfg.increments, cfg.checkpoints):
                run_strategy_step(setup, increment)
                report = evaluate(
                    setup.annotated,
                    pool,
                    test_idx,
                    source,
                    template,
                    cfg.k,
                    transductive=transductive,
                    max_chars=cfg.eval_max_chars,
                    seed=seed,
                    cfg_hash=cfg_hash,
                )
                (run_dir / f"report_b{checkpoint}.json").write_text(
                    json.dumps(report.to_dict(), sort_keys=True)
                )
                flags = [r.correct for r in report.records if r.correct is not None]
                if flags:
                    conf = [
                        r.confidence for r in report.records if r.correct is not None
                    ]
                    bins = ece(conf, flags, cfg.n_bins)
                    (run_dir / f"reliability_b{checkpoint}.csv").write_text(bins.to_csv())
                    simplex = simplex_calibration_report(report, pool, setup.annotated, cfg.k)
                    (run_dir / f"simplex_b{checkpoint}.json").write_text(
                        json.dumps(
                            {
                                "inside_correct": simplex.inside_correct,
                                "inside_wrong": simplex.inside_wrong,
                                "net": simplex.net,
                                "skipped": simplex.skipped,
                                "skip_reasons": simplex.skip_reasons,
                                "total": simplex.total,
                            },
                            sort_keys=True,
                        )
                    )
                results[label][checkpoint].append(report.accuracy)
            spent = setup.budget.spent
            gained = len(setup.annotated) - len(init)
            if spent != cfg.budget or gained != cfg.budget:
                raise RuntimeError(
                    f"budget accounting broken for {label}/seed{seed}: "
                    f"spent={spent} annotations={gained} expected={cfg.budget}"
                )
            with open(run_dir / "trace.jsonl", "w", encoding="utf-8") as fh:
                for entry in setup.trace:
                    fh.write(json.dumps(entry, sort_keys=True) + "\n")
            (run_dir / "meta.json").write_text(
                json.dumps(
                    {
                        "seed": seed,
                        "strategy": label,
                        "candidates": candidates,
                        "init_ids": init.ids(),
                        "test_indices": test_idx,
                        "annotated": setup.annotated.to_records(),
                    },
                    sort_keys=True,
                )
            )

    summary = {
        "config_hash": cfg_hash,
        "budgets": cfg.checkpoints,
        "seeds": cfg.seeds,
        "strategies": {},
        "std_ddof": 0,
    }
    for label in labels:
        per_budget = {}
        for b in cfg.checkpoints:
            values = results[label][b]
            if all(v is not None for v in values):
                arr = np.asarray(values, dtype=np.float64)
                per_budget[str(b)] = {
                    "mean": float(arr.mean()),
                    "std": float(arr.std(ddof=0)),
                    "values": [float(v) for v in values],
                }
            else:
                per_budget[str(b)] = {"mean": None, "std": None, "values": values}
        summary["strategies"][label] = per_budget
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1))
    return summary


OURS_PREFIX = "adaicl"


def compare_summaries(paths: list[str | Path]) -> tuple[str, str]:
    """Align summaries on the budget grid and emit a table plus CSV with
    per-budget best-ours minus best-baseline deltas."""
    loaded = []
    for p in paths:
        with open(p) as fh:
            loaded.append((str(p), json.load(fh)))
    budget_grids = [tuple(s["budgets"]) for _, s in loaded]
    if len(set(budget_grids)) > 1:
        detail = "; ".join(f"{p}: {list(g)}" for (p, _), g in zip(loaded, budget_grids))
        raise ConfigError(f"budget grids misaligned across summaries: {detail}")
    budgets = list(budget_grids[0])

    cells: dict[str, dict[int, float | None]] = {}
    for path, s in loaded:
        for label, per_budget in s["strategies"].items():
            key = label if label not in cells else f"{label}@{Path(path).parent.name}"
            cells[key] = {int(b): v["mean"] for b, v in per_budget.items()}

    lines = ["strategy," + ",".join(f"b{b}" for b in budgets)]
    for label in sorted(cells):
        row = [label]
        for b in budgets:
            v = cells[label].get(b)
            row.append("" if v is None else f"{v:.6f}")
        lines.append(",".join(row))
    ours = {l: v for l, v in cells.items() if l.startswith(OURS_PREFIX)}
    base = {l: v for l, v in cells.items() if not l.startswith(OURS_PREFIX)}
    if ours and base:
        row = ["delta_gain"]
        for b in budgets:
            ours_vals = [v[b] for v in ours.values() if v.get(b) is not None]
            base_vals = [v[b] for v in base.values() if v.get(b) is not None]
            if ours_vals and base_vals:
                row.append(f"{max(ours_vals) - max(base_vals):.6f}")
            else:
                row.append("")
        lines.append(",".join(row))
    csv_text = "\n".join(lines) + "\n"

    width = max(len(l.split(",")[0]) for l in lines)
    table_lines = []
    for line in lines:
        parts = line.split(",")
        table_lines.append(parts[0].ljust(width + 2) + "  ".join(x.rjust(9) for x in parts[1:]))
    return "\n".join(table_lines), csv_text


def emit_viz(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Per-iteration CSVs (id, pca_x, pca_y, confidence, selected) for external
    plotting, one per trace iteration."""
    run_dir = Path(run_dir)
    config_path = run_dir / "config.json"
    if not config_path.exists():
        raise ConfigError(f"run dir {run_dir} has no config.json")
    from icsel.config import parse_config

    cfg = parse_config(json.loads(config_path.read_text()))
    pool = load_experiment_pool(cfg)
    out = Path(out_dir) if out_dir else run_dir / "viz"
    out.mkdir(parents=True, exist_ok=True)
    traces = sorted(run_dir.glob("*/seed*/trace.jsonl"))
    if not traces:
        raise ConfigError(f"run dir {run_dir} contains no traces")
    written: list[Path] = []
    for trace_path in traces:
        meta = json.loads((trace_path.parent / "meta.json").read_text())
        candidates = meta["candidates"]
        coords = pca_2d(pool.embeddings[candidates])
        label = meta["strategy"]
        seed = meta["seed"]
        with open(trace_path) as fh:
            entries = [json.loads(line) for line in fh if line.strip()]
        for entry in entries:
            t = entry["iteration"]
            picked = set(entry.get("picked", []))
            scores = entry.get("scores", {})
            path = out / f"viz_{label}_seed{seed}_iter{t}.csv"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("id,pca_x,pca_y,confidence,selected\n")
                for row, cand in enumerate(candidates):
                    ex_id = pool.examples[cand].id
                    conf = scores.get(ex_id, "")
                    fh.write(
                        f"{ex_id},{coords[row, 0]!r},{coords[row, 1]!r},"
                        f"{conf},{1 if ex_id in picked else 0}\n"
                    )
            written.append(path)
    return written
