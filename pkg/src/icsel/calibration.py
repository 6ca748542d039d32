"""Expected calibration error, reliability bins, and simplex-membership calibration."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from icsel.core import AnnotatedSet, Pool
from icsel.inference import EvalReport, retrieve_topk

BARY_TOL = -1e-9
DEGENERATE_RTOL = 1e-9
RESIDUAL_TOL = 1e-7


class CalibrationError(ValueError):
    pass


@dataclass
class ReliabilityBin:
    lo: float
    hi: float
    mean_confidence: float
    accuracy: float
    count: int


@dataclass
class ReliabilityBins:
    n_bins: int
    bins: list[ReliabilityBin]
    ece: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("bin,conf_lo,conf_hi,mean_conf,acc,count\n")
        for i, b in enumerate(self.bins):
            buf.write(f"{i},{b.lo},{b.hi},{b.mean_confidence},{b.accuracy},{b.count}\n")
        return buf.getvalue()


def ece(
    confidences: Sequence[float], correct: Sequence[bool], n_bins: int = 10
) -> ReliabilityBins:
    """Equal-width reliability bins with right-inclusive boundaries (confidence
    exactly 0 lands in the first bin); ECE is the count-weighted mean absolute
    gap between bin confidence and bin accuracy."""
    conf = np.asarray(confidences, dtype=np.float64)
    corr = np.asarray(correct, dtype=np.float64)
    if conf.size == 0:
        raise CalibrationError("empty input")
    if conf.size != corr.size:
        raise CalibrationError("confidences and correctness flags differ in length")
    if np.any((conf < 0) | (conf > 1)):
        raise CalibrationError("confidences must lie in [0, 1]")
    if n_bins < 1:
        raise CalibrationError("n_bins must be >= 1")
    edges = np.arange(1, n_bins + 1) / n_bins
    # right-inclusive: bin b covers (edges[b-1], edges[b]]
    bin_of = np.searchsorted(edges, conf, side="left")
    bins: list[ReliabilityBin] = []
    total = 0.0
    n = conf.size
    for b in range(n_bins):
        mask = bin_of == b
        cnt = int(np.count_nonzero(mask))
        lo = 0.0 if b == 0 else float(edges[b - 1])
        hi = float(edges[b])
        if cnt == 0:
            bins.append(ReliabilityBin(lo, hi, 0.0, 0.0, 0))
            continue
        mean_conf = float(np.mean(conf[mask]))
        acc = float(np.mean(corr[mask]))
        bins.append(ReliabilityBin(lo, hi, mean_conf, acc, cnt))
        total += (cnt / n) * abs(acc - mean_conf)
    return ReliabilityBins(n_bins, bins, total)


def simplex_membership(
    test_embedding: np.ndarray, same_label_demos: Sequence[np.ndarray]
) -> tuple[str, str | None]:
    """Is the query inside the simplex spanned by the demos after projecting
    everything (demos plus query) to min(len(demos)-1, ambient) dimensions?

    Returns ("inside"|"outside"|"skipped", reason). Membership is decided by
    barycentric coordinates with a -1e-9 boundary tolerance; rank-deficient
    demo sets are skipped as degenerate.
    """
    demos = [np.asarray(d, dtype=np.float64) for d in same_label_demos]
    if not demos:
        raise CalibrationError("simplex membership needs at least one demo")
    x = np.asarray(test_embedding, dtype=np.float64)
    if len(demos) == 1:
        dist = float(np.linalg.norm(x - demos[0]))
        return ("inside" if dist <= 1e-9 else "outside"), None

    ambient = x.shape[0]
    d = min(len(demos) - 1, ambient)
    pts = np.vstack(demos + [x])
    center = pts.mean(axis=0)
    centered = pts - center
    # PCA via SVD on demos + test
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:d]
    coords = centered @ comps.T
    p = coords[:-1]
    q = coords[-1]

    A = (p[1:] - p[0]).T  # d x (len(demos)-1)
    b = q - p[0]
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size == 0 or sv[-1] <= DEGENERATE_RTOL * max(sv[0], 1.0):
        return "skipped", "degenerate"
    if A.shape[0] == A.shape[1]:
        mu = np.linalg.solve(A, b)
    else:
        mu, *_ = np.linalg.lstsq(A, b, rcond=None)
        scale = max(float(np.linalg.norm(b)), 1.0)
        if float(np.linalg.norm(A @ mu - b)) > RESIDUAL_TOL * scale:
            return "outside", None
    lambdas = np.concatenate([[1.0 - mu.sum()], mu])
    return ("inside" if np.all(lambdas >= BARY_TOL) else "outside"), None


@dataclass
class SimplexReport:
    inside_correct: int
    inside_wrong: int
    skipped: int
    skip_reasons: dict[str, int]
    total: int

    @property
    def net(self) -> int:
        return self.inside_correct - self.inside_wrong


def simplex_calibration_report(
    report: EvalReport, pool: Pool, annotated: AnnotatedSet, k: int
) -> SimplexReport:
    """Per test instance: keep the retrieved demos sharing the predicted label,
    test simplex membership, and accumulate the signed inside counts."""
    inside_correct = inside_wrong = skipped = 0
    reasons: dict[str, int] = {}
    for rec in report.records:
        if rec.prediction is None:
            skipped += 1
            reasons["no-prediction"] = reasons.get("no-prediction", 0) + 1
            continue
        demo_embs = []
        for demo_id in rec.retrieved_ids:
            if annotated.label_of(demo_id) == rec.prediction:
                demo_embs.append(pool.embeddings[pool.index_of(demo_id)])
        if not demo_embs:
            skipped += 1
            reasons["empty-subset"] = reasons.get("empty-subset", 0) + 1
            continue
        verdict, reason = simplex_membership(
            pool.embeddings[pool.index_of(rec.example_id)], demo_embs
        )
        if verdict == "skipped":
            skipped += 1
            reasons[reason or "unknown"] = reasons.get(reason or "unknown", 0) + 1
        elif verdict == "inside":
            if rec.correct:
                inside_correct += 1
            else:
                inside_wrong += 1
    return SimplexReport(inside_correct, inside_wrong, skipped, reasons, len(report.records))
