"""Command-line front end: run, compare, emit-viz, serve, heuristic-m."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path


def _add_run(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("run", help="run the configured strategy/seed/budget grid")
    p.add_argument("config", help="experiment config JSON")
    p.add_argument("--output-dir", help="override output_dir")
    p.add_argument("--seeds", help="override seeds, comma separated")
    p.add_argument("--budget", type=int, help="override budget")
    p.add_argument(
        "--strategy",
        action="append",
        dest="strategies",
        help="override strategies (repeatable)",
    )


def cmd_run(args: argparse.Namespace) -> int:
    from icsel.config import ConfigError, load_config, parse_config
    from icsel.harness import run_experiment

    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    if args.output_dir:
        data["output_dir"] = args.output_dir
    if args.seeds:
        data["seeds"] = [int(s) for s in args.seeds.split(",") if s]
    if args.budget is not None:
        data["budget"] = args.budget
    if args.strategies:
        data["strategies"] = args.strategies
    try:
        cfg = parse_config(data, base_dir=Path(args.config).parent)
        summary = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    print(f"summary written to {Path(cfg.output_dir) / 'summary.json'}")
    for label, per_budget in sorted(summary["strategies"].items()):
        parts = []
        for b in summary["budgets"]:
            cell = per_budget[str(b)]
            if cell["mean"] is not None:
                parts.append(f"b{b}: {cell['mean']:.4f}±{cell['std']:.4f}")
        print(f"  {label}: " + "  ".join(parts))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    from icsel.config import ConfigError
    from icsel.harness import compare_summaries

    try:
        table, csv_text = compare_summaries(args.summaries)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(table)
    if args.csv:
        Path(args.csv).write_text(csv_text)
        print(f"csv written to {args.csv}")
    return 0


def cmd_emit_viz(args: argparse.Namespace) -> int:
    from icsel.config import ConfigError
    from icsel.harness import emit_viz

    try:
        paths = emit_viz(args.run_dir, args.output_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(paths)} CSV files")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from icsel.service import create_app

    app = create_app(snapshot_dir=args.snapshot_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_heuristic_m(args: argparse.Namespace) -> int:
    from icsel.graph import heuristic_m_range

    try:
        lo, hi = heuristic_m_range(
            args.budget, args.max_iterations, args.theta, args.theta_hat, args.pool_size, args.hops
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    suggested = max(1, math.ceil(lo))
    print(
        json.dumps(
            {"hops": args.hops, "m_lo": lo, "m_hi": hi, "suggested_m": suggested},
            sort_keys=True,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icsel",
        description="budgeted annotation selection for in-context learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)

    p = sub.add_parser("compare", help="align summaries and emit delta-gain rows")
    p.add_argument("summaries", nargs="+", help="summary.json paths")
    p.add_argument("--csv", help="write the comparison CSV here")

    p = sub.add_parser("emit-viz", help="per-iteration PCA/confidence CSVs from a run dir")
    p.add_argument("run_dir")
    p.add_argument("--output-dir")

    p = sub.add_parser("serve", help="start the annotation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--snapshot-dir", default="sessions")

    p = sub.add_parser("heuristic-m", help="neighbor-count bounds for a budget plan")
    p.add_argument("--budget", "-B", type=int, default=20)
    p.add_argument("--max-iterations", "-T", type=int, default=2)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--theta-hat", type=float, default=0.5)
    p.add_argument("--pool-size", "-N", type=int, default=300)
    p.add_argument("--hops", type=int, choices=(1, 2), default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "compare": cmd_compare,
        "emit-viz": cmd_emit_viz,
        "serve": cmd_serve,
        "heuristic-m": cmd_heuristic_m,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
