"""Hierarchical semantic structure discovery in embedding spaces.

Agglomerative clustering over precomputed embeddings, where each cluster's
row space (its semantic field subspace) is tracked through an SVD and merge
boundaries are scored by how much the subspace moves.

Quick start::

    import numpy as np
    from safari import HierarchySpec, generate_hierarchy, run_safari, SafariConfig

    es = generate_hierarchy(HierarchySpec(
        branching=(3, 2), points_per_leaf=20, dim=32,
        angular_spread=(0.4, 0.1), seed=0))
    result = run_safari(es.rows, SafariConfig(shift_mode="approx"))
    for event in result.dendrogram.events:
        if event.is_sfs:
            print(event.iteration, event.shift)

The exact and approximate shift metrics are also available directly:

    >>> from safari import build_sfs, semantic_shift_exact, semantic_shift_approx
"""

from .bench import BenchReport, BenchRow, bench_merge_sequence, trace_error_stats
from .data import (
    EmbeddingSet,
    LabelHierarchy,
    infer_format,
    load_dendrogram,
    load_embeddings,
    save_dendrogram,
    save_embeddings,
)
from .engine import (
    Cluster,
    Dendrogram,
    MergeEvent,
    SafariConfig,
    SafariResult,
    ShiftRecord,
    merge_clusters,
    run_safari,
)
from .errors import DataError, NumericError
from .evaluation import (
    ImpurityCurve,
    classify,
    classify_all,
    impurity,
    impurity_curve,
    pearson,
    prf1_macro,
    prf1_per_class,
    subspace_distance,
    train_class_sfs,
)
from .linalg import SvdResult, semantic_distance, spectral_norm, svd
from .subspace import (
    SemanticFieldSubspace,
    ShiftBreakdown,
    WeylReport,
    build_sfs,
    is_semantic_field,
    semantic_shift_approx,
    semantic_shift_exact,
    verify_weyl_bound,
)
from .synthetic import HierarchySpec, generate_hierarchy, planted_spike_trace
from .thresholds import (
    SegmentationResult,
    SlidingWindowTracker,
    scan_sequence,
    segment_shifts,
    uniformity_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "BenchRow",
    "Cluster",
    "DataError",
    "Dendrogram",
    "EmbeddingSet",
    "HierarchySpec",
    "ImpurityCurve",
    "LabelHierarchy",
    "MergeEvent",
    "NumericError",
    "SafariConfig",
    "SafariResult",
    "SegmentationResult",
    "SemanticFieldSubspace",
    "ShiftBreakdown",
    "ShiftRecord",
    "SlidingWindowTracker",
    "SvdResult",
    "WeylReport",
    "bench_merge_sequence",
    "build_sfs",
    "classify",
    "classify_all",
    "generate_hierarchy",
    "impurity",
    "impurity_curve",
    "infer_format",
    "is_semantic_field",
    "load_dendrogram",
    "load_embeddings",
    "merge_clusters",
    "pearson",
    "planted_spike_trace",
    "prf1_macro",
    "prf1_per_class",
    "run_safari",
    "save_dendrogram",
    "save_embeddings",
    "scan_sequence",
    "segment_shifts",
    "semantic_distance",
    "semantic_shift_approx",
    "semantic_shift_exact",
    "spectral_norm",
    "subspace_distance",
    "svd",
    "train_class_sfs",
    "trace_error_stats",
    "uniformity_metrics",
    "verify_weyl_bound",
]
