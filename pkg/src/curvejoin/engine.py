"""Range queries, self-similarity join, exact baseline, and metrics.

A range query asks for all dataset curves within continuous Frechet
distance r of a query curve. Candidates come from the grid index with
collision scores; a fraction tau of them, lowest scores first, goes
through the decisive verification cascade (low score = likely false
positive). Verified Far candidates are dropped, everything else is
reported. The self join runs one range query per curve and merges the
unordered pairs; the exact join verifies every pair and serves as ground
truth.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .curves import Curve, Dataset, longest_edge
from .frechet import DEFAULT_EPS_LIST, Verdict, estimate_continuous, verify
from .lsh import LshIndex, LshParams, build_index, query_scores

__all__ = [
    "CandidateDecision",
    "JoinReport",
    "Metrics",
    "QueryConfig",
    "QueryRecord",
    "RangeQueryResult",
    "exact_join",
    "make_params",
    "metrics",
    "pairs_csv",
    "percentile_radius",
    "query_record_dicts",
    "range_query",
    "self_join",
    "stage_histogram",
    "summary_dict",
]

RADIUS_SLACK_MODES = ("none", "longest-edge")


@dataclass(frozen=True)
class QueryConfig:
    """Knobs of a range query or join.

    The grid side is grid_factor * d * r; with radius_slack
    "longest-edge" the radius is first widened by the longest edge seen
    in the data, which makes discrete-distance collisions safe bounds for
    the continuous distance on sparsely sampled curves.
    """

    r: float
    tau: float = 1.0
    eps_list: tuple = DEFAULT_EPS_LIST
    radius_slack: str = "none"
    grid_factor: float = 4.0

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("r must be > 0")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0, 1]")
        if self.grid_factor <= 0:
            raise ValueError("grid_factor must be > 0")
        if self.radius_slack not in RADIUS_SLACK_MODES:
            raise ValueError(f"radius_slack must be one of {RADIUS_SLACK_MODES}")
        object.__setattr__(self, "eps_list", tuple(self.eps_list))

    def lsh_radius(self, dataset: Dataset, query: Curve | None = None) -> float:
        if self.radius_slack == "none":
            return self.r
        iota = max(longest_edge(c) for c in dataset)
        if query is not None:
            iota = max(iota, longest_edge(query))
        return self.r + iota

    def grid_delta(self, dataset: Dataset, query: Curve | None = None) -> float:
        return self.grid_factor * dataset.d * self.lsh_radius(dataset, query)


def make_params(dataset: Dataset, cfg: QueryConfig, k: int, L: int, seed: int) -> LshParams:
    """Index parameters whose grid side matches the query configuration."""
    return LshParams(cfg.grid_delta(dataset), k, L, dataset.d, seed)


@dataclass(frozen=True)
class CandidateDecision:
    """One candidate of one query: its score and what became of it."""

    curve_id: int
    collisions: int
    score: float
    verdict: str  # "near" | "far" | "unverified"
    stage: str | None  # deciding cascade stage; None when unverified


@dataclass(frozen=True)
class RangeQueryResult:
    """kept = reported positives; rejected = candidates verified Far."""

    kept: tuple
    rejected: tuple

    @property
    def candidates(self) -> int:
        return len(self.kept) + len(self.rejected)


def range_query(
    idx: LshIndex,
    dataset: Dataset,
    q: Curve,
    cfg: QueryConfig,
    exclude_id: int | None = None,
    stats: dict | None = None,
) -> RangeQueryResult:
    """Scored candidates with the tau-fraction verified, cheapest first.

    The ceil(tau * candidates) lowest-score candidates (ties by id) are
    decided by the verification cascade; the rest are reported as
    unverified positives. The index grid must match the configuration.
    """
    expected = cfg.grid_delta(dataset, q)
    if idx.params.delta != expected:
        raise ValueError(
            f"index grid {idx.params.delta} does not match configuration "
            f"grid {expected}; rebuild the index for this config"
        )
    cands = query_scores(idx, q, stats)
    if exclude_id is not None:
        cands = [s for s in cands if s.curve_id != exclude_id]
    nsel = math.ceil(cfg.tau * len(cands))
    kept = []
    rejected = []
    for rank, cand in enumerate(cands):
        if rank < nsel:
            out = verify(q, dataset[cand.curve_id], cfg.r, cfg.eps_list)
            dec = CandidateDecision(
                cand.curve_id,
                cand.collisions,
                cand.score,
                out.verdict.value,
                out.stage,
            )
            (kept if out.verdict is Verdict.NEAR else rejected).append(dec)
        else:
            kept.append(
                CandidateDecision(
                    cand.curve_id, cand.collisions, cand.score, "unverified", None
                )
            )
    return RangeQueryResult(tuple(kept), tuple(rejected))


@dataclass(frozen=True)
class QueryRecord:
    query_id: int
    result: RangeQueryResult
    elapsed: float


@dataclass(frozen=True)
class Metrics:
    """Counts against a ground truth; undefined ratios read 1.0, flagged."""

    tp: int
    fp: int
    fn: int
    recall: float
    precision: float
    recall_defined: bool
    precision_defined: bool


def metrics(predicted, truth) -> Metrics:
    """Recall and precision of a predicted pair set versus the truth."""
    pred = {_norm_pair(p) for p in predicted}
    tru = {_norm_pair(p) for p in truth}
    tp = len(pred & tru)
    fp = len(pred - tru)
    fn = len(tru - pred)
    recall = tp / len(tru) if tru else 1.0
    precision = tp / len(pred) if pred else 1.0
    return Metrics(tp, fp, fn, recall, precision, bool(tru), bool(pred))


def _norm_pair(p) -> tuple[int, int]:
    a, b = p
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class JoinReport:
    """Everything a self join produced, ready for reporting.

    decided maps each unordered pair that surfaced as a candidate to its
    (stage, verdict); pairs that never collided are implicit lsh-rejects.
    """

    n_curves: int
    params: LshParams
    config: QueryConfig
    queries: tuple
    pairs: tuple
    decided: dict
    metrics: Metrics | None
    build_seconds: float
    query_seconds: float

    @property
    def total_pairs(self) -> int:
        return self.n_curves * (self.n_curves - 1) // 2


def self_join(
    dataset: Dataset,
    params: LshParams,
    cfg: QueryConfig,
    truth=None,
    threads: int = 1,
) -> JoinReport:
    """Range-query every curve against the rest and merge unordered pairs.

    A pair is reported when at least one side kept it and neither side
    verified it Far; with tau = 1 every reported pair carries a Near
    certificate. Decisions are independent of the thread count.
    """
    t0 = time.perf_counter()
    idx = build_index(dataset, params)
    build_seconds = time.perf_counter() - t0

    def run(c: Curve) -> QueryRecord:
        tq = time.perf_counter()
        res = range_query(idx, dataset, c, cfg, exclude_id=c.id)
        return QueryRecord(c.id, res, time.perf_counter() - tq)

    t1 = time.perf_counter()
    curves = sorted(dataset, key=lambda c: c.id)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = tuple(pool.map(run, curves))
    else:
        records = tuple(run(c) for c in curves)
    query_seconds = time.perf_counter() - t1

    decided: dict[tuple[int, int], tuple[str, str]] = {}
    removed: set[tuple[int, int]] = set()
    positive: set[tuple[int, int]] = set()
    for rec in records:
        for dec in rec.result.rejected:
            pair = _norm_pair((rec.query_id, dec.curve_id))
            decided.setdefault(pair, (dec.stage, "far"))
            removed.add(pair)
        for dec in rec.result.kept:
            pair = _norm_pair((rec.query_id, dec.curve_id))
            if dec.verdict == "near":
                prev = decided.get(pair)
                if prev is None or prev[1] != "near":
                    decided[pair] = (dec.stage, "near")
            else:
                decided.setdefault(pair, ("unverified-positive", "unverified"))
            positive.add(pair)
    # a Far verdict from either endpoint is authoritative: the cascade
    # agrees with the exact decision, so the other side cannot say Near
    pairs = tuple(sorted(positive - removed))

    rep_metrics = metrics(pairs, truth) if truth is not None else None
    return JoinReport(
        dataset.n,
        params,
        cfg,
        records,
        pairs,
        decided,
        rep_metrics,
        build_seconds,
        query_seconds,
    )


def exact_join(dataset: Dataset, r: float, eps_list=DEFAULT_EPS_LIST) -> tuple:
    """All unordered pairs within continuous Frechet distance r (ground truth)."""
    if r <= 0:
        raise ValueError("r must be > 0")
    out = []
    for i in range(dataset.n):
        p = dataset[i]
        for j in range(i + 1, dataset.n):
            if verify(p, dataset[j], r, eps_list).verdict is Verdict.NEAR:
                out.append((i, j))
    return tuple(out)


def percentile_radius(
    dataset: Dataset,
    pct: int,
    sample_size: int = 1000,
    seed: int = 0,
    rel_tol: float = 1e-4,
) -> float:
    """Nearest-rank percentile of pairwise distances on a curve sample.

    The caller must reject a zero radius (an all-identical sample yields
    0 at any percentile).
    """
    if not 1 <= pct <= 99:
        raise ValueError("pct must be in [1, 99]")
    if sample_size < 2:
        raise ValueError("sample_size must be >= 2")
    if dataset.n < 2:
        raise ValueError("dataset must contain at least 2 curves")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    size = min(sample_size, dataset.n)
    ids = sorted(int(i) for i in rng.choice(dataset.n, size=size, replace=False))
    dists = []
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            dists.append(
                estimate_continuous(dataset[ids[a]], dataset[ids[b]], rel_tol)
            )
    dists.sort()
    rank = math.ceil(pct / 100.0 * len(dists))  # nearest-rank, 1-based
    return dists[rank - 1]


# ---------------------------------------------------------------------------
# Report serialization


def stage_histogram(report: JoinReport) -> dict:
    """Pairs per deciding bucket; the values sum to n*(n-1)/2.

    Simplification stages are split by verdict; pairs that never collided
    count as lsh-reject.
    """
    hist: dict[str, int] = {}
    for stage, verdict in report.decided.values():
        key = stage
        if verdict == "unverified":
            key = "unverified-positive"
        elif stage.startswith("simpl-"):
            key = f"{stage}-{verdict}"
        hist[key] = hist.get(key, 0) + 1
    hist["lsh-reject"] = report.total_pairs - len(report.decided)
    return dict(sorted(hist.items()))


def summary_dict(report: JoinReport) -> dict:
    """JSON-ready summary; volatile values live only under "timings"."""
    p, cfg = report.params, report.config
    out = {
        "n_curves": report.n_curves,
        "total_pairs": report.total_pairs,
        "params": {
            "delta": p.delta,
            "k": p.k,
            "L": p.L,
            "l_prime": p.l_prime,
            "d": p.d,
            "seed": p.seed,
        },
        "config": {
            "r": cfg.r,
            "tau": cfg.tau,
            "eps_list": list(cfg.eps_list),
            "radius_slack": cfg.radius_slack,
            "grid_factor": cfg.grid_factor,
        },
        "predicted_pairs": len(report.pairs),
        "stage_histogram": stage_histogram(report),
        "timings": {
            "build_seconds": report.build_seconds,
            "query_seconds": report.query_seconds,
        },
    }
    if report.metrics is not None:
        m = report.metrics
        out["metrics"] = {
            "tp": m.tp,
            "fp": m.fp,
            "fn": m.fn,
            "recall": m.recall,
            "precision": m.precision,
            "recall_defined": m.recall_defined,
            "precision_defined": m.precision_defined,
        }
    return out


def query_record_dicts(report: JoinReport) -> list[dict]:
    """One JSON-lines row per query; timings segregated per row."""
    rows = []
    for rec in report.queries:
        rows.append(
            {
                "query_id": rec.query_id,
                "candidates": rec.result.candidates,
                "kept": [
                    {
                        "id": d.curve_id,
                        "collisions": d.collisions,
                        "score": d.score,
                        "verdict": d.verdict,
                        "stage": d.stage,
                    }
                    for d in rec.result.kept
                ],
                "rejected": [
                    {"id": d.curve_id, "score": d.score, "stage": d.stage}
                    for d in rec.result.rejected
                ],
                "timings": {"elapsed": rec.elapsed},
            }
        )
    return rows


def pairs_csv(pairs) -> str:
    """CSV text "idA,idB", one unordered pair per line, sorted."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["idA", "idB"])
    for a, b in sorted(_norm_pair(p) for p in pairs):
        writer.writerow([a, b])
    return buf.getvalue()
