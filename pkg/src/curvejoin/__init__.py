"""Approximate range search and self-similarity join for polygonal curves
under the continuous Frechet distance.

Candidate generation snaps curves to randomly shifted grids and hashes the
resulting cell sequences; candidates are then confirmed by a layered
verification cascade with an exact free-space decision as the last resort.
"""

from .curves import (
    BoundingBox,
    Curve,
    Dataset,
    ParseError,
    bounding_box,
    densify,
    longest_edge,
    parse_series_1d,
    parse_trajectories_2d,
    simplify,
    write_series_1d,
    write_trajectories_2d,
)
from .frechet import (
    SimplVerifyParams,
    Verdict,
    VerificationOutcome,
    bbox_filter,
    decide_continuous,
    discrete_frechet,
    discrete_frechet_brute,
    endpoints_filter,
    equal_time_upper,
    estimate_continuous,
    greedy_upper,
    negative_filter,
    verify,
    verify_heur,
    verify_simpl,
)
from .lsh import (
    GridHash,
    IndexFormatError,
    LshIndex,
    LshParams,
    ScoredCandidate,
    SequenceHasher,
    Signature,
    build_index,
    dataset_fingerprint,
    fold_key,
    load_index,
    query_scores,
    save_index,
    snap_signature,
)
from .engine import (
    CandidateDecision,
    JoinReport,
    Metrics,
    QueryConfig,
    QueryRecord,
    RangeQueryResult,
    exact_join,
    make_params,
    metrics,
    pairs_csv,
    percentile_radius,
    query_record_dicts,
    range_query,
    self_join,
    stage_histogram,
    summary_dict,
)
from .experiments import (
    BoundsRow,
    CollisionEstimate,
    ScoreHistogram,
    bounds_csv,
    bounds_report,
    collision_probability,
    noisy_collision_probability,
    score_histogram,
    stage_breakdown,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "BoundsRow",
    "CandidateDecision",
    "CollisionEstimate",
    "Curve",
    "Dataset",
    "GridHash",
    "IndexFormatError",
    "JoinReport",
    "LshIndex",
    "LshParams",
    "Metrics",
    "ParseError",
    "QueryConfig",
    "QueryRecord",
    "RangeQueryResult",
    "ScoreHistogram",
    "ScoredCandidate",
    "SequenceHasher",
    "Signature",
    "SimplVerifyParams",
    "Verdict",
    "VerificationOutcome",
    "bbox_filter",
    "bounding_box",
    "bounds_csv",
    "bounds_report",
    "build_index",
    "collision_probability",
    "dataset_fingerprint",
    "decide_continuous",
    "densify",
    "discrete_frechet",
    "discrete_frechet_brute",
    "endpoints_filter",
    "equal_time_upper",
    "estimate_continuous",
    "exact_join",
    "fold_key",
    "greedy_upper",
    "load_index",
    "longest_edge",
    "make_params",
    "metrics",
    "negative_filter",
    "noisy_collision_probability",
    "pairs_csv",
    "parse_series_1d",
    "parse_trajectories_2d",
    "percentile_radius",
    "query_record_dicts",
    "query_scores",
    "range_query",
    "save_index",
    "score_histogram",
    "self_join",
    "simplify",
    "snap_signature",
    "stage_breakdown",
    "stage_histogram",
    "summary_dict",
    "verify",
    "verify_heur",
    "verify_simpl",
    "write_series_1d",
    "write_trajectories_2d",
]
