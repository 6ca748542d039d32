"""HTTP service for human-in-the-loop selection sessions.

A session wraps an adaptive selection engine: the service serves each proposed
batch, accepts human labels (partial submissions held until the batch is
complete), then re-scores and selects the next batch. Sessions snapshot to
JSON after every phase transition so a restarted service resumes losslessly.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from icsel.config import ConfigError, ExperimentConfig, parse_config
from icsel.core import AnnotatedSet, Budget, HUMAN, init_pool_kmeans
from icsel.harness import _candidates_for_seed, _test_indices_for_seed, make_feedback_source, pca_2d
from icsel.inference import DEFAULT_TEMPLATE, PromptTemplate, evaluate, make_retriever
from icsel.graph import build_mnn_graph
from icsel.strategies import (
    ADAPTIVE_STRATEGIES,
    AdaIclEngine,
    AdaIclPlusEngine,
    RunSetup,
    StrategyConfig,
)

AWAITING = "awaiting-labels"
SCORING = "scoring"
SELECTING = "selecting"
DONE = "done"


def _session_config(payload: dict) -> tuple[ExperimentConfig, dict]:
    if not isinstance(payload, dict):
        raise ConfigError("config: expected a JSON object")
    strategy = payload.get("strategy", "adaicl-plus")
    if isinstance(strategy, str):
        strategy = {"name": strategy}
    if not isinstance(strategy, dict) or strategy.get("name") not in ADAPTIVE_STRATEGIES:
        raise ConfigError(
            f"strategy: human-loop sessions support {list(ADAPTIVE_STRATEGIES)} only"
        )
    data = dict(payload)
    data.pop("strategy", None)
    data.pop("seed", None)
    data["strategies"] = [strategy]
    data["seeds"] = [int(payload.get("seed", 0))]
    data.setdefault("output_dir", "unused")
    data.setdefault("init_pool_size", 0)
    return parse_config(data), strategy


class AnnotationSession:
    """One selection run driven by human labels."""

    def __init__(self, session_id: str, cfg: ExperimentConfig, strategy: dict):
        self.id = session_id
        self.cfg = cfg
        self.strategy_raw = strategy
        self.seed = cfg.seeds[0]
        self.lock = threading.Lock()
        self.phase = SCORING
        self.partial: dict[str, str] = {}
        self._build()
        self._advance()

    def _build(self) -> None:
        from icsel.config import load_experiment_pool

        self.pool = load_experiment_pool(self.cfg)
        self.template = (
            PromptTemplate.from_dict(self.cfg.template) if self.cfg.template else DEFAULT_TEMPLATE
        )
        self.transductive = self.cfg.mode == "transductive"
        self.candidates = _candidates_for_seed(self.cfg, self.pool, self.seed)
        try:
            self.test_indices = _test_indices_for_seed(self.cfg, self.pool, self.seed)
        except Exception:
            self.test_indices = []
        init = init_pool_kmeans(self.pool, self.cfg.init_pool_size, self.seed, self.candidates)
        source = make_feedback_source(self.cfg.feedback, self.pool, self.template)
        retriever = make_retriever(self.pool, transductive=self.transductive)
        spec = self.strategy_raw
        scfg = StrategyConfig(
            name=spec["name"],
            theta=spec.get("theta", self.cfg.theta),
            m=spec.get("m"),
            hops=spec.get("hops"),
            iterations=spec.get("iterations", self.cfg.iterations),
            weight_base=spec.get("weight_base", self.cfg.weight_base),
            k=self.cfg.k,
            seed=self.seed,
        )
        graph = build_mnn_graph(self.pool, scfg.m, self.candidates)
        self.setup = RunSetup(
            self.pool,
            self.candidates,
            init,
            Budget(self.cfg.budget),
            scfg,
            source,
            retriever,
            graph,
        )
        engine_cls = AdaIclPlusEngine if spec["name"] == "adaicl-plus" else AdaIclEngine
        self.engine = engine_cls(self.setup, self.cfg.budget)
        self.labels_allowed = set(
            self.cfg.feedback.get("labels") or self.pool.label_vocabulary()
        )
        self._coords = pca_2d(self.pool.embeddings[self.candidates])
        self._coord_of = {
            self.pool.examples[c].id: (float(self._coords[i, 0]), float(self._coords[i, 1]))
            for i, c in enumerate(self.candidates)
        }

    def _advance(self) -> None:
        self.phase = SELECTING
        batch = self.engine.propose()
        self.phase = AWAITING if batch else DONE

    def batch_view(self) -> dict:
        info_by_id = {i["id"]: i for i in self.engine.pending_info}
        batch = []
        for ex_id in self.engine.pending:
            info = info_by_id.get(ex_id, {})
            x, y = self._coord_of.get(ex_id, (None, None))
            batch.append(
                {
                    "id": ex_id,
                    "text": self.pool.examples[self.pool.index_of(ex_id)].text,
                    "confidence": info.get("confidence"),
                    "cover_size": info.get("cover_size", 0),
                    "pca": [x, y],
                    "labeled": ex_id in self.partial,
                }
            )
        return {
            "session_id": self.id,
            "phase": self.phase,
            "done": self.phase == DONE,
            "batch": batch,
            "labels": sorted(self.labels_allowed),
            "budget": {"total": self.setup.budget.total, "spent": self.setup.budget.spent},
            "iteration": len(self.setup.trace),
        }

    def submit_labels(self, labels: dict[str, str]) -> dict:
        with self.lock:
            if self.phase != AWAITING:
                raise HTTPException(409, detail=f"session is in phase '{self.phase}'")
            pending = set(self.engine.pending)
            for ex_id in labels:
                if ex_id not in pending:
                    raise HTTPException(409, detail=f"id '{ex_id}' is not pending")
            for ex_id, label in labels.items():
                if not isinstance(label, str) or not label:
                    raise HTTPException(422, detail=f"empty label for '{ex_id}'")
                if self.labels_allowed and label not in self.labels_allowed:
                    raise HTTPException(
                        422,
                        detail=f"label '{label}' for '{ex_id}' not in {sorted(self.labels_allowed)}",
                    )
            self.partial.update(labels)
            if set(self.partial) == pending:
                complete = dict(self.partial)
                self.partial = {}
                self.phase = SCORING
                self.engine.supply_labels(complete, provenance=HUMAN)
                self._advance()
            return self.batch_view()

    def report(self) -> dict:
        if not self.test_indices:
            return {"accuracy": None, "records": [], "note": "no test split configured"}
        rep = evaluate(
            self.setup.annotated,
            self.pool,
            self.test_indices,
            self.setup.source,
            self.template,
            self.cfg.k,
            transductive=self.transductive,
            seed=self.seed,
        )
        return rep.to_dict()

    def to_snapshot(self) -> dict:
        snap = {
            "session_id": self.id,
            "config": self.cfg.raw,
            "strategy": self.strategy_raw,
            "phase": self.phase,
            "pending": list(self.engine.pending),
            "pending_info": list(self.engine.pending_info),
            "partial": dict(self.partial),
            "annotated": self.setup.annotated.to_records(),
            "spent": self.setup.budget.spent,
            "picked_total": self.engine.picked_total,
            "trace": self.setup.trace,
        }
        if isinstance(self.engine, AdaIclPlusEngine):
            snap["round"] = self.engine.round
        return snap

    @classmethod
    def from_snapshot(cls, snap: dict) -> "AnnotationSession":
        cfg = parse_config(snap["config"])
        session = cls.__new__(cls)
        session.id = snap["session_id"]
        session.cfg = cfg
        session.strategy_raw = snap["strategy"]
        session.seed = cfg.seeds[0]
        session.lock = threading.Lock()
        session.partial = dict(snap.get("partial", {}))
        session._build()
        # replay recorded state onto the fresh engine
        session.setup.annotated = AnnotatedSet.from_records(snap["annotated"])
        session.setup.budget.spent = snap["spent"]
        session.setup.trace.extend(snap.get("trace", []))
        session.engine.picked_total = snap["picked_total"]
        session.engine.pending = list(snap.get("pending", []))
        session.engine.pending_info = list(snap.get("pending_info", []))
        if isinstance(session.engine, AdaIclPlusEngine):
            session.engine.round = snap.get("round", 0)
        session.phase = snap["phase"]
        return session


class SessionStore:
    def __init__(self, snapshot_dir: str | Path | None = None):
        self.sessions: dict[str, AnnotationSession] = {}
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else None
        if self.snapshot_dir:
            self.snapshot_dir.mkdir(parents=True, exist_ok=True)

    def create(self, payload: dict) -> AnnotationSession:
        cfg, strategy = _session_config(payload)
        session = AnnotationSession(uuid.uuid4().hex[:12], cfg, strategy)
        self.sessions[session.id] = session
        self.snapshot(session)
        return session

    def get(self, session_id: str) -> AnnotationSession:
        if session_id in self.sessions:
            return self.sessions[session_id]
        if self.snapshot_dir:
            path = self.snapshot_dir / f"{session_id}.json"
            if path.exists():
                session = AnnotationSession.from_snapshot(json.loads(path.read_text()))
                self.sessions[session.id] = session
                return session
        raise HTTPException(404, detail=f"unknown session '{session_id}'")

    def snapshot(self, session: AnnotationSession) -> None:
        if self.snapshot_dir:
            path = self.snapshot_dir / f"{session.id}.json"
            path.write_text(json.dumps(session.to_snapshot(), sort_keys=True))


def create_app(snapshot_dir: str | Path | None = None, cors_origins: list[str] | None = None):
    app = FastAPI(title="icsel annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(snapshot_dir)
    app.state.store = store

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(...)):
        try:
            session = store.create(payload)
        except (ConfigError, ValueError, OSError) as exc:
            raise HTTPException(400, detail=str(exc))
        return session.batch_view()

    @app.get("/sessions/{session_id}/batch")
    def get_batch(session_id: str):
        return store.get(session_id).batch_view()

    @app.post("/sessions/{session_id}/labels")
    def post_labels(session_id: str, payload: dict = Body(...)):
        session = store.get(session_id)
        labels = payload.get("labels", payload)
        if not isinstance(labels, dict) or not labels:
            raise HTTPException(422, detail="expected a non-empty {id: label} map")
        view = session.submit_labels({str(k): v for k, v in labels.items()})
        store.snapshot(session)
        return view

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        return store.get(session_id).report()

    return app
